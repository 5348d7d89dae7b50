//! Invariant suites run by `nof verify`.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rand::Rng;
use serde::Serialize;

use crate::combinatorics::{binom_sandwich_holds, binomial_expectations_check};
use crate::discrepancy::{
    bns_mod3_closed_form, bns_rhs, bound_suite, enumerate_cylinders, mod3_row_character,
    CorrelationQuery, CylinderFamily, SuiteOptions, DEFAULT_DISC_CAP,
};
use crate::distributions::{make_dist, DistName};
use crate::error::{Error, Result};
use crate::functions::{eval_composed, eval_disj, eval_gip, eval_udisj, Inner, Outer, PartialFunctionSpec};
use crate::matrix::InputMatrix;
use crate::model::{decompose_to_cylinders, run, Announce, Constant, Protocol, ProtocolInfo, Session, DEFAULT_DECOMPOSE_CAP};
use crate::protocols::{GipBase, MaskVector};
use crate::tape::RandomTape;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Facts,
    Bounds,
    Identities,
    Decompose,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "facts" => Ok(Suite::Facts),
            "bounds" => Ok(Suite::Bounds),
            "identities" => Ok(Suite::Identities),
            "decompose" => Ok(Suite::Decompose),
            "all" => Ok(Suite::All),
            other => Err(Error::Parse(format!("unknown suite {other:?}"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Facts => "facts",
            Suite::Bounds => "bounds",
            Suite::Identities => "identities",
            Suite::Decompose => "decompose",
            Suite::All => "all",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "[{}] {}/{}: {}\n",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.suite,
                    c.name,
                    c.detail
                )
            })
            .collect()
    }
}

fn check(suite: Suite, name: &str, result: Result<String>) -> Check {
    match result {
        Ok(detail) => Check {
            suite,
            name: name.into(),
            passed: true,
            detail,
        },
        Err(e) => Check {
            suite,
            name: name.into(),
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn fail(msg: String) -> Error {
    Error::Protocol(msg)
}

pub fn verify(suite: Suite, seed: u64) -> SuiteReport {
    let checks = match suite {
        Suite::Facts => facts(),
        Suite::Bounds => bounds(seed),
        Suite::Identities => identities(),
        Suite::Decompose => decompose(),
        Suite::All => [facts(), bounds(seed), identities(), decompose()].concat(),
    };
    SuiteReport {
        schema: 1,
        suite,
        checks,
    }
}

// ---- facts ----

fn facts() -> Vec<Check> {
    let s = Suite::Facts;
    vec![
        check(s, "binomial_expectations", (|| {
            let mut count = 0;
            for n in 1..=64u64 {
                for i in 0..=100 {
                    let p = i as f64 / 100.0;
                    for c in binomial_expectations_check(n, p)?.checks {
                        count += 1;
                        if !c.holds {
                            return Err(fail(format!("{} fails at n={n}, p={p}: {} > {}", c.name, c.lhs, c.rhs)));
                        }
                    }
                }
            }
            Ok(format!("{count} inequalities hold for n <= 64 on a 101-point grid"))
        })()),
        check(s, "binomial_sum_sandwich", (|| {
            let mut count = 0;
            for n in 1..=64u64 {
                for k in 1..=n {
                    count += 1;
                    if !binom_sandwich_holds(n, k) {
                        return Err(fail(format!("fails at n={n}, k={k}")));
                    }
                }
            }
            Ok(format!("{count} pairs with 1 <= k <= n <= 64"))
        })()),
    ]
}

// ---- identities ----

/// Every `(m, block_rows, k)` with `m * block_rows <= 6`, `k <= 3`, `m >= 1`.
fn composition_shapes() -> impl Iterator<Item = (usize, usize, usize)> {
    (1..=3).flat_map(|k| {
        (1..=6).flat_map(move |m| (1..=6 / m).map(move |b| (m, b, k)))
    })
}

fn identity(outer: Outer, inner: Inner, whole: fn(&InputMatrix) -> Option<bool>) -> Result<String> {
    let mut count = 0u64;
    for (m, b, k) in composition_shapes() {
        for x in InputMatrix::enumerate(m * b, k) {
            let blocks = x.split_rows(b)?;
            let lhs = eval_composed(outer, &blocks, inner)?;
            if lhs != whole(&x) {
                return Err(fail(format!("m={m}, rows={b}, k={k}: differs at\n{x}")));
            }
            count += 1;
        }
    }
    Ok(format!("{count} stacked matrices with mn <= 6, k <= 3"))
}

fn identities() -> Vec<Check> {
    let s = Suite::Identities;
    vec![
        check(s, "xor_of_gip", identity(Outer::Xor, Inner::Gip, |x| Some(eval_gip(x)))),
        check(s, "and_of_disj", identity(Outer::And, Inner::Disj, |x| Some(eval_disj(x)))),
        check(s, "uand_of_udisj", identity(Outer::UAnd, Inner::UDisj, eval_udisj)),
    ]
}

// ---- decompose ----

/// The GIP base run with its mask fixed, as a deterministic protocol.
#[derive(Debug)]
struct FixedMask {
    base: GipBase,
    mask: MaskVector,
    info: ProtocolInfo,
}

impl FixedMask {
    fn new(n: usize, k: usize, mask: MaskVector) -> Result<Self> {
        let base = GipBase::new(n, k)?;
        let mut info = base.info().clone();
        info.randomized = false;
        Ok(Self { base, mask, info })
    }
}

impl Protocol for FixedMask {
    fn info(&self) -> &ProtocolInfo {
        &self.info
    }
    fn session<'a>(&'a self, _tape: &RandomTape) -> Box<dyn Session + 'a> {
        Box::new(self.base.session_with_mask(self.mask.clone()))
    }
}

/// Checks the term count, player budget and pointwise reconstruction.
pub fn check_decomposition(p: &dyn Protocol) -> Result<usize> {
    let info = p.info();
    let (n, k, c) = (info.n, info.k, info.cost_ceiling);
    let terms = decompose_to_cylinders(p, DEFAULT_DECOMPOSE_CAP)?;
    if c < 64 && terms.len() as u128 > 1u128 << c {
        return Err(fail(format!("{} terms exceed 2^{c}", terms.len())));
    }
    if let Some((_, chi)) = terms.iter().find(|(_, chi)| chi.players().len() > c.min(k)) {
        return Err(fail(format!("cylinder on players {:?} exceeds min(c, k)", chi.players())));
    }
    let tape = RandomTape::new(0);
    for x in InputMatrix::enumerate(n, k) {
        let sum: usize = terms.iter().filter(|(a, chi)| *a && chi.eval(&x)).count();
        let out = run(p, &x, &tape)?.output;
        if sum != usize::from(out) {
            return Err(fail(format!("sum {sum} differs from output {out} at\n{x}")));
        }
    }
    Ok(terms.len())
}

fn decompose() -> Vec<Check> {
    let s = Suite::Decompose;
    let mut checks = Vec::new();
    for value in [false, true] {
        let p = Constant::new(2, 2, value);
        checks.push(check(s, &format!("constant_{}", u8::from(value)), check_decomposition(&p).map(|t| format!("{t} term"))));
    }
    let announce: Vec<(&str, usize, usize, Vec<(usize, usize, usize)>, fn(&[bool]) -> bool)> = vec![
        ("announce_and_n1k3", 1, 3, vec![(0, 0, 1), (1, 0, 2)], |b| b[0] && b[1]),
        ("announce_xor_n2k2", 2, 2, vec![(0, 0, 1), (1, 1, 0)], |b| b[0] ^ b[1]),
        ("announce_first_n2k3", 2, 3, vec![(2, 1, 0), (0, 0, 2), (1, 1, 2)], |b| b[0]),
        ("announce_majority_n1k3", 1, 3, vec![(0, 0, 1), (1, 0, 2), (2, 0, 0)], |b| {
            b.iter().filter(|&&v| v).count() >= 2
        }),
    ];
    for (name, n, k, cells, rule) in announce {
        let r = Announce::new(n, k, cells, rule).and_then(|p| check_decomposition(&p));
        checks.push(check(s, name, r.map(|t| format!("{t} terms"))));
    }
    for (n, k) in [(1, 2), (2, 3), (1, 4)] {
        let r: Result<String> = (|| {
            let ell = GipBase::new(n, k)?.ell();
            let mut masks = 0;
            let mut terms = 0;
            for mask in MaskVector::enumerate(k, ell) {
                terms = terms.max(check_decomposition(&FixedMask::new(n, k, mask)?)?);
                masks += 1;
            }
            Ok(format!("{masks} masks, at most {terms} terms each"))
        })();
        checks.push(check(s, &format!("gip_fixed_mask_n{n}k{k}"), r));
    }
    checks
}

// ---- bounds ----

fn uniform_gip(n: usize, k: usize, family: CylinderFamily) -> Result<CorrelationQuery> {
    let d = make_dist(DistName::Uniform, n, k, None)?;
    CorrelationQuery::with_distribution(&PartialFunctionSpec::gip(n, k), &d, family)
}

fn weighted(f: &PartialFunctionSpec, w: &[f64]) -> Result<CorrelationQuery> {
    CorrelationQuery::boolean(f, |x| w[x.index() as usize], CylinderFamily::All)
}

fn random_weights(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn tiny_targets() -> Vec<PartialFunctionSpec> {
    vec![
        PartialFunctionSpec::gip(1, 2),
        PartialFunctionSpec::gip(2, 2),
        PartialFunctionSpec::disj(2, 2),
        PartialFunctionSpec::gip(1, 3),
        PartialFunctionSpec::mod3xor(3, 2),
    ]
}

/// Shapes where the micro bound suite is run.
pub const BOUND_GRID: [(usize, usize, usize, usize); 10] = [
    (1, 1, 1, 1),
    (2, 1, 1, 2),
    (1, 2, 1, 1),
    (1, 2, 2, 2),
    (2, 2, 1, 1),
    (2, 2, 2, 1),
    (3, 2, 1, 1),
    (1, 3, 1, 1),
    (1, 3, 2, 1),
    (1, 3, 3, 1),
];

fn bounds(seed: u64) -> Vec<Check> {
    let s = Suite::Bounds;
    let mut checks = Vec::new();
    let opts = SuiteOptions {
        seed,
        ..SuiteOptions::default()
    };
    checks.push(check(s, "bound_suite_micro", (|| {
        let mut vacuous = 0;
        let mut rows = 0;
        for (n, k, l, m) in BOUND_GRID {
            let r = bound_suite(n, k, l, m, &opts);
            if r.violations() > 0 {
                return Err(fail(format!("violation at n={n} k={k} ell={l} m={m}\n{}", r.to_table())));
            }
            rows += r.rows.len();
            vacuous += r.rows.iter().filter(|r| r.status == crate::discrepancy::BoundStatus::Vacuous).count();
        }
        Ok(format!("{rows} rows, 0 violations, {vacuous} vacuous"))
    })()));

    checks.push(check(s, "convexity", (|| {
        let mut rng = RandomTape::new(seed).stream("convexity", 0);
        for f in tiny_targets() {
            for _ in 0..3 {
                let len = 1usize << (f.n() * f.k());
                let mu = random_weights(len, &mut rng);
                let lambda = random_weights(len, &mut rng);
                let mix: Vec<f64> = mu.iter().zip(&lambda).map(|(a, b)| (a + b) / 2.0).collect();
                let d = |w: &[f64]| -> Result<f64> { Ok(weighted(&f, w)?.exact_disc(DEFAULT_DISC_CAP)?.value) };
                let (dm, dl, dx) = (d(&mu)?, d(&lambda)?, d(&mix)?);
                if dx > (dm + dl) / 2.0 + 1e-12 {
                    return Err(fail(format!("{}: {dx} > ({dm} + {dl})/2", f.name())));
                }
            }
        }
        Ok("mixtures never exceed the average on 5 targets x 3 pairs".into())
    })()));

    checks.push(check(s, "continuity", (|| {
        let mut rng = RandomTape::new(seed).stream("continuity", 0);
        for f in tiny_targets() {
            let len = 1usize << (f.n() * f.k());
            let mu = random_weights(len, &mut rng);
            for scale in [0.5, 0.1, 0.01] {
                let noise = random_weights(len, &mut rng);
                let tilde: Vec<f64> = mu.iter().zip(&noise).map(|(a, b)| (1.0 - scale) * a + scale * b).collect();
                let l1: f64 = mu.iter().zip(&tilde).map(|(a, b)| (a - b).abs()).sum();
                let dm = weighted(&f, &mu)?.exact_disc(DEFAULT_DISC_CAP)?.value;
                let dt = weighted(&f, &tilde)?.exact_disc(DEFAULT_DISC_CAP)?.value;
                if dm > dt + l1 + 1e-12 {
                    return Err(fail(format!("{}: {dm} > {dt} + {l1}", f.name())));
                }
            }
        }
        Ok("perturbations move the value by at most the l1 distance".into())
    })()));

    checks.push(check(s, "dominance_chain", (|| {
        for (n, k) in [(1, 2), (2, 2), (1, 3)] {
            for q in [uniform_gip(n, k, CylinderFamily::All)?, CorrelationQuery::mod3_character(n, k, CylinderFamily::All)?] {
                let all = q.exact_disc(DEFAULT_DISC_CAP)?.value;
                let mut prev = 0.0;
                for l in 0..=k {
                    let dl = q.with_family(CylinderFamily::Budget(l))?.exact_disc(DEFAULT_DISC_CAP)?.value;
                    if dl + 1e-12 < prev || dl > all + 1e-12 {
                        return Err(fail(format!("{} n={n} k={k}: disc_{l} = {dl} out of order", q.label())));
                    }
                    for subset in (0..k).combinations(l) {
                        let ds = q.exact_disc_subset(&subset)?.value;
                        if ds > dl + 1e-12 {
                            return Err(fail(format!("disc_{subset:?} = {ds} > disc_{l} = {dl}")));
                        }
                    }
                    prev = dl;
                }
            }
        }
        Ok("disc_S <= disc_l <= disc on GIP and the character".into())
    })()));

    checks.push(check(s, "heuristic_below_exact", (|| {
        let tape = RandomTape::new(seed);
        for f in tiny_targets() {
            let d = make_dist(DistName::Uniform, f.n(), f.k(), None)?;
            let q = CorrelationQuery::with_distribution(&f, &d, CylinderFamily::All)?;
            let e = q.exact_disc(DEFAULT_DISC_CAP)?.value;
            let h = q.heuristic_disc(8, &tape)?.value;
            if h > e + 1e-12 {
                return Err(fail(format!("{}: heuristic {h} > exact {e}", f.name())));
            }
        }
        Ok("on 5 uniform targets".into())
    })()));

    checks.extend(bns_checks());
    checks
}

/// Box-norm closed form, its soundness, and the strict character bound.
pub fn bns_checks() -> Vec<Check> {
    let s = Suite::Bounds;
    vec![
        check(s, "bns_closed_form", (|| {
            let mut worst: f64 = 0.0;
            for n in 1..=3 {
                for k in 1..=3 {
                    let v = bns_rhs(mod3_row_character(n), &vec![1 << n; k], DEFAULT_DISC_CAP)?;
                    let c = bns_mod3_closed_form(n, k);
                    worst = worst.max((v - c).abs());
                    if (v - c).abs() > 1e-9 {
                        return Err(fail(format!("n={n} k={k}: {v} vs {c}")));
                    }
                }
            }
            Ok(format!("n, k <= 3, max deviation {worst:.1e}"))
        })()),
        check(s, "bns_soundness", (|| {
            let mut count = 0;
            for (n, k) in [(1, 1), (1, 2), (2, 2)] {
                let q = CorrelationQuery::mod3_character(n, k, CylinderFamily::All)?;
                let rhs = bns_rhs(mod3_row_character(n), &vec![1 << n; k], DEFAULT_DISC_CAP)?;
                let players: Vec<usize> = (0..k).collect();
                for chi in enumerate_cylinders(n, k, &players, DEFAULT_DISC_CAP)? {
                    let lhs = q.correlation(&chi)?.powi(1 << k);
                    if lhs > rhs + 1e-12 {
                        return Err(fail(format!("n={n} k={k}: {lhs} > {rhs}")));
                    }
                    count += 1;
                }
            }
            Ok(format!("{count} cylinders"))
        })()),
        check(s, "character_budget_strict", (|| {
            let (n, k) = (2, 2);
            let mut summary = Vec::new();
            for l in [1usize, 2] {
                let q = CorrelationQuery::mod3_character(n, k, CylinderFamily::Budget(l))?;
                let bound = (-(n as f64) / 4f64.powi(l as i32)).exp();
                let mut best: f64 = 0.0;
                for subset in (0..k).combinations(l) {
                    for chi in enumerate_cylinders(n, k, &subset, DEFAULT_DISC_CAP)? {
                        best = best.max(q.correlation(&chi)?);
                    }
                }
                if best >= bound {
                    return Err(fail(format!("ell={l}: {best} >= {bound}")));
                }
                summary.push(format!("ell={l}: {best:.4} < {bound:.4}"));
            }
            Ok(summary.join(", "))
        })()),
    ]
}
