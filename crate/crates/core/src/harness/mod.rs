//! Seeded experiments and verification suites behind the `nof` binary.

pub mod sweep;
pub mod verify;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::functions::{eval_disj, eval_gip, eval_mod3xor};
use crate::matrix::InputMatrix;
use crate::model::{run, Protocol, ProtocolInfo};
use crate::protocols::{disj_protocol, gip_protocol, mod3_protocol, DisjProtocol, GipProtocol, Mod3Protocol};
use crate::tape::RandomTape;

pub use sweep::{sweep, SweepRow, SWEEP_HEADER};
pub use verify::{verify, Check, Suite, SuiteReport};

/// Largest `n * k` accepted by the exhaustive input source.
pub const MAX_EXHAUSTIVE_CELLS: usize = 20;
pub const CI_LEVEL: f64 = 0.99;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Gip,
    Disj,
    Mod3,
}

impl ProtocolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Gip => "gip",
            ProtocolKind::Disj => "disj",
            ProtocolKind::Mod3 => "mod3",
        }
    }

    /// The function the protocol computes.
    pub fn reference(self, x: &InputMatrix) -> bool {
        match self {
            ProtocolKind::Gip => eval_gip(x),
            ProtocolKind::Disj => eval_disj(x),
            ProtocolKind::Mod3 => eval_mod3xor(x),
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gip" => Ok(ProtocolKind::Gip),
            "disj" => Ok(ProtocolKind::Disj),
            "mod3" => Ok(ProtocolKind::Mod3),
            other => Err(Error::Parse(format!("unknown protocol {other:?}"))),
        }
    }
}

/// A constructed protocol together with its exact per-input error oracle.
#[derive(Clone, Debug)]
pub enum BuiltProtocol {
    Gip(Arc<GipProtocol>),
    Disj(Arc<DisjProtocol>),
    Mod3(Arc<Mod3Protocol>),
}

impl BuiltProtocol {
    pub fn build(kind: ProtocolKind, n: usize, k: usize, epsilon: f64) -> Result<Self> {
        Ok(match kind {
            ProtocolKind::Gip => BuiltProtocol::Gip(gip_protocol(n, k, epsilon)?),
            ProtocolKind::Disj => BuiltProtocol::Disj(disj_protocol(n, k, epsilon)?),
            ProtocolKind::Mod3 => BuiltProtocol::Mod3(mod3_protocol(n, k, epsilon)?),
        })
    }

    pub fn kind(&self) -> ProtocolKind {
        match self {
            BuiltProtocol::Gip(_) => ProtocolKind::Gip,
            BuiltProtocol::Disj(_) => ProtocolKind::Disj,
            BuiltProtocol::Mod3(_) => ProtocolKind::Mod3,
        }
    }

    pub fn protocol(&self) -> &dyn Protocol {
        match self {
            BuiltProtocol::Gip(p) => p.as_ref(),
            BuiltProtocol::Disj(p) => p.as_ref(),
            BuiltProtocol::Mod3(p) => p.as_ref(),
        }
    }

    pub fn info(&self) -> &ProtocolInfo {
        self.protocol().info()
    }

    /// Probability over the tape that the protocol answers wrongly on `x`.
    pub fn exact_failure(&self, x: &InputMatrix) -> Result<BigRational> {
        match self {
            BuiltProtocol::Gip(p) => p.exact_failure(x),
            BuiltProtocol::Disj(p) => p.exact_failure(x),
            BuiltProtocol::Mod3(p) => p.exact_failure(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InputSource {
    Distribution(DistributionSpec),
    Matrix(InputMatrix),
    /// Every matrix in row-major numeric order.
    Exhaustive,
    /// One uniformly placed all-ones row; every other row is uniform
    /// among the rows that are not all ones.
    Planted,
}

impl InputSource {
    pub fn label(&self) -> String {
        match self {
            InputSource::Distribution(d) => format!("dist:{d}"),
            InputSource::Matrix(x) => format!("matrix:{}", x.to_text().trim_end().replace('\n', ";")),
            InputSource::Exhaustive => "exhaustive".into(),
            InputSource::Planted => "planted".into(),
        }
    }

    fn draw(&self, n: usize, k: usize, tape: &RandomTape) -> InputMatrix {
        match self {
            InputSource::Distribution(d) => d.sample(tape),
            InputSource::Matrix(x) => x.clone(),
            InputSource::Planted => planted(n, k, tape),
            InputSource::Exhaustive => unreachable!("exhaustive inputs are enumerated"),
        }
    }
}

/// Input with exactly one all-ones row.
pub fn planted(n: usize, k: usize, tape: &RandomTape) -> InputMatrix {
    let mut rng = tape.stream("planted", 0);
    let target = rng.gen_range(0..n);
    let mut x = InputMatrix::zeros(n, k).expect("nonempty");
    for r in 0..n {
        loop {
            let row: Vec<bool> = (0..k).map(|_| r == target || rng.gen_bool(0.5)).collect();
            if r == target || row.iter().any(|&b| !b) {
                for (c, b) in row.into_iter().enumerate() {
                    x.set(r, c, b);
                }
                break;
            }
        }
    }
    x
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub protocol: ProtocolKind,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub source: InputSource,
    /// Trials in total, or per input for the exhaustive source.
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; 0 picks the rayon default.
    pub workers: usize,
    pub exact: bool,
}

impl ExperimentConfig {
    pub fn new(protocol: ProtocolKind, n: usize, k: usize, source: InputSource) -> Self {
        Self {
            protocol,
            n,
            k,
            epsilon: 1.0 / 3.0,
            source,
            trials: 1000,
            seed: 0,
            workers: 0,
            exact: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::InvalidParameter(format!(
                "n, k: must be positive (got n = {}, k = {})",
                self.n, self.k
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials: must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "epsilon: must lie in (0, 1/2), got {}",
                self.epsilon
            )));
        }
        match &self.source {
            InputSource::Exhaustive if self.n * self.k > MAX_EXHAUSTIVE_CELLS => {
                Err(Error::InvalidParameter(format!(
                    "source: exhaustive mode needs n*k <= {MAX_EXHAUSTIVE_CELLS}, got {}",
                    self.n * self.k
                )))
            }
            InputSource::Distribution(d) if (d.n(), d.k()) != (self.n, self.k) => {
                Err(Error::InvalidParameter(format!(
                    "source: distribution is {}x{}, protocol is {}x{}",
                    d.n(),
                    d.k(),
                    self.n,
                    self.k
                )))
            }
            InputSource::Matrix(x) if (x.n(), x.k()) != (self.n, self.k) => {
                Err(Error::InvalidParameter(format!(
                    "source: matrix is {}x{}, protocol is {}x{}",
                    x.n(),
                    x.k(),
                    self.n,
                    self.k
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConfigEcho {
    pub protocol: ProtocolKind,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub source: String,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ExactSummary {
    /// Exact rational, present when a single input is simulated.
    pub value: Option<String>,
    /// Mean over the simulated inputs (one entry per trial, or per input
    /// for the exhaustive source).
    pub mean: f64,
    pub worst: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Report {
    pub schema: u32,
    pub config: ConfigEcho,
    pub runs: u64,
    pub failures: u64,
    pub emp_error: f64,
    pub ci_level: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub exact_error: Option<ExactSummary>,
    pub cost_ceiling_bits: usize,
    pub mean_cost_bits: f64,
    pub worst_cost_bits: usize,
    pub wall_clock_ms: u64,
    pub seed: u64,
}

impl Report {
    /// JSON with the wall-clock field zeroed, for reproducibility checks.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.wall_clock_ms = 0;
        serde_json::to_string_pretty(&r).expect("serializable")
    }
}

/// `p` with `I_p(a, b) = target`, located by bisection.
fn beta_quantile(a: f64, b: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Exact two-sided Clopper-Pearson interval for `failures` out of `runs`.
pub fn clopper_pearson(failures: u64, runs: u64, level: f64) -> (f64, f64) {
    assert!(runs > 0 && failures <= runs);
    let alpha = 1.0 - level;
    let (x, n) = (failures as f64, runs as f64);
    let low = if failures == 0 { 0.0 } else { beta_quantile(x, n - x + 1.0, alpha / 2.0) };
    let high = if failures == runs { 1.0 } else { beta_quantile(x + 1.0, n - x, 1.0 - alpha / 2.0) };
    (low, high)
}

struct UnitResult {
    runs: u64,
    failures: u64,
    cost_sum: u64,
    worst_cost: usize,
    exact: Option<BigRational>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("workers: {e}")))
}

pub fn simulate(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let start = Instant::now();
    let (n, k) = (config.n, config.k);
    let built = BuiltProtocol::build(config.protocol, n, k, config.epsilon)?;
    let root = RandomTape::new(config.seed);

    let run_input = |x: &InputMatrix, reps: u64, tape: &RandomTape, with_exact: bool| -> Result<UnitResult> {
        let truth = config.protocol.reference(x);
        let mut unit = UnitResult {
            runs: reps,
            failures: 0,
            cost_sum: 0,
            worst_cost: 0,
            exact: None,
        };
        for r in 0..reps {
            let out = run(built.protocol(), x, &tape.child("trial", r))?;
            unit.failures += u64::from(out.output != truth);
            unit.cost_sum += out.cost_bits as u64;
            unit.worst_cost = unit.worst_cost.max(out.cost_bits);
        }
        if with_exact {
            unit.exact = built.exact_failure(x).ok();
        }
        Ok(unit)
    };

    let units: Vec<UnitResult> = pool(config.workers)?.install(|| match &config.source {
        InputSource::Exhaustive => (0..1u64 << (n * k))
            .into_par_iter()
            .map(|i| {
                let x = InputMatrix::from_index(n, k, i)?;
                run_input(&x, config.trials, &root.child("input", i), config.exact)
            })
            .collect::<Result<Vec<_>>>(),
        InputSource::Matrix(x) => {
            let exact = if config.exact { built.exact_failure(x).ok() } else { None };
            (0..config.trials)
                .into_par_iter()
                .map(|t| {
                    let mut u = run_input(x, 1, &root.child("trial", t), false)?;
                    if t == 0 {
                        u.exact = exact.clone();
                    }
                    Ok(u)
                })
                .collect::<Result<Vec<_>>>()
        }
        source => (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let tape = root.child("trial", t);
                let x = source.draw(n, k, &tape.child("input", 0));
                run_input(&x, 1, &tape.child("protocol", 0), config.exact)
            })
            .collect::<Result<Vec<_>>>(),
    })?;

    let runs: u64 = units.iter().map(|u| u.runs).sum();
    let failures: u64 = units.iter().map(|u| u.failures).sum();
    let cost_sum: u64 = units.iter().map(|u| u.cost_sum).sum();
    let worst_cost = units.iter().map(|u| u.worst_cost).max().unwrap_or(0);
    let (ci_low, ci_high) = clopper_pearson(failures, runs, CI_LEVEL);

    let exacts: Vec<&BigRational> = units.iter().filter_map(|u| u.exact.as_ref()).collect();
    let exact_error = match &config.source {
        _ if !config.exact => None,
        InputSource::Matrix(_) => exacts.first().map(|v| ExactSummary {
            value: Some(v.to_string()),
            mean: v.to_f64().unwrap_or(f64::NAN),
            worst: v.to_f64().unwrap_or(f64::NAN),
        }),
        _ if exacts.len() == units.len() && !exacts.is_empty() => {
            let vals: Vec<f64> = exacts.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
            Some(ExactSummary {
                value: None,
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                worst: vals.iter().copied().fold(0.0, f64::max),
            })
        }
        _ => None,
    };

    Ok(Report {
        schema: 1,
        config: ConfigEcho {
            protocol: config.protocol,
            n,
            k,
            epsilon: config.epsilon,
            source: config.source.label(),
            trials: config.trials,
            seed: config.seed,
        },
        runs,
        failures,
        emp_error: failures as f64 / runs as f64,
        ci_level: CI_LEVEL,
        ci_low,
        ci_high,
        exact_error,
        cost_ceiling_bits: built.info().cost_ceiling,
        mean_cost_bits: cost_sum as f64 / runs as f64,
        worst_cost_bits: worst_cost,
        wall_clock_ms: start.elapsed().as_millis() as u64,
        seed: config.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection on the exact binomial tail.
    fn cp_oracle(x: u64, n: u64, level: f64) -> (f64, f64) {
        let tail_ge = |p: f64| -> f64 {
            (x..=n)
                .map(|i| {
                    let lc = statrs::function::factorial::ln_binomial(n, i);
                    (lc + i as f64 * p.ln() + (n - i) as f64 * (1.0 - p).ln()).exp()
                })
                .sum()
        };
        let tail_le = |p: f64| -> f64 {
            (0..=x)
                .map(|i| {
                    let lc = statrs::function::factorial::ln_binomial(n, i);
                    (lc + i as f64 * p.ln() + (n - i) as f64 * (1.0 - p).ln()).exp()
                })
                .sum()
        };
        let a = (1.0 - level) / 2.0;
        let bisect = |f: &dyn Fn(f64) -> bool| {
            let (mut lo, mut hi) = (1e-15, 1.0 - 1e-15);
            for _ in 0..200 {
                let mid = (lo + hi) / 2.0;
                if f(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (lo + hi) / 2.0
        };
        let low = if x == 0 { 0.0 } else { bisect(&|p| tail_ge(p) >= a) };
        let high = if x == n { 1.0 } else { bisect(&|p| tail_le(p) <= a) };
        (low, high)
    }

    #[test]
    fn clopper_pearson_matches_bisection() {
        for &(x, n) in &[(0u64, 10u64), (3, 10), (10, 10), (17, 200), (1, 2000)] {
            let (l, h) = clopper_pearson(x, n, 0.99);
            let (ol, oh) = cp_oracle(x, n, 0.99);
            assert!((l - ol).abs() < 1e-7, "{x}/{n}: {l} vs {ol}");
            assert!((h - oh).abs() < 1e-7, "{x}/{n}: {h} vs {oh}");
        }
    }

    #[test]
    fn validation_names_fields() {
        let mut c = ExperimentConfig::new(ProtocolKind::Gip, 8, 16, InputSource::Exhaustive);
        assert!(c.validate().unwrap_err().to_string().contains("exhaustive"));
        c.source = InputSource::Planted;
        c.trials = 0;
        assert!(c.validate().unwrap_err().to_string().contains("trials"));
    }

    #[test]
    fn planted_has_one_all_ones_row() {
        for s in 0..50 {
            assert_eq!(planted(5, 2, &RandomTape::new(s)).all_ones_rows(), 1);
        }
    }

    #[test]
    fn fixed_matrix_reports_exact_value() {
        let x = InputMatrix::ones(3, 4).unwrap();
        let mut c = ExperimentConfig::new(ProtocolKind::Gip, 3, 4, InputSource::Matrix(x.clone()));
        c.trials = 50;
        let r = simulate(&c).unwrap();
        let built = BuiltProtocol::build(ProtocolKind::Gip, 3, 4, 1.0 / 3.0).unwrap();
        assert_eq!(
            r.exact_error.unwrap().value.unwrap(),
            built.exact_failure(&x).unwrap().to_string()
        );
        assert!(r.worst_cost_bits <= r.cost_ceiling_bits);
    }
}
