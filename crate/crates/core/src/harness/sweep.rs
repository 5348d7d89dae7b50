//! Cost-scaling tables over grids of `(n, k)`.

use serde::Serialize;

use super::{clopper_pearson, simulate, ExperimentConfig, InputSource, ProtocolKind, CI_LEVEL};
use crate::distributions::{make_dist, DistName};
use crate::error::Result;
use crate::protocols::active_budget_third;

pub const SWEEP_HEADER: &str = "n,k,ell,cost_ceiling_bits,mean_cost_bits,emp_error,ci_low,ci_high,seed";

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    /// `None` marks an infeasible `(n, k)`.
    pub ell: Option<usize>,
    pub cost_ceiling_bits: Option<usize>,
    pub mean_cost_bits: Option<f64>,
    pub emp_error: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub seed: u64,
    pub note: Option<String>,
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(String::new, T::to_string)
        }
        let ell = self.ell.map_or_else(|| "infeasible".to_string(), |l| l.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            self.k,
            ell,
            opt(&self.cost_ceiling_bits),
            opt(&self.mean_cost_bits),
            opt(&self.emp_error),
            opt(&self.ci_low),
            opt(&self.ci_high),
            self.seed
        )
    }
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out += &r.to_csv();
        out.push('\n');
    }
    out
}

/// One uniform-input simulation per `(n, k)`; infeasible pairs become
/// marked rows.
pub fn sweep(
    protocol: ProtocolKind,
    ns: &[usize],
    ks: &[usize],
    epsilon: f64,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &n in ns {
        for &k in ks {
            rows.push(row(protocol, n, k, epsilon, trials, seed, workers).unwrap_or_else(|e| SweepRow {
                n,
                k,
                ell: None,
                cost_ceiling_bits: None,
                mean_cost_bits: None,
                emp_error: None,
                ci_low: None,
                ci_high: None,
                seed,
                note: Some(e.to_string()),
            }));
        }
    }
    rows
}

fn row(
    protocol: ProtocolKind,
    n: usize,
    k: usize,
    epsilon: f64,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<SweepRow> {
    let ell = active_budget_third(n, k)?;
    let dist = make_dist(DistName::Uniform, n, k, None)?;
    let mut config = ExperimentConfig::new(protocol, n, k, InputSource::Distribution(dist));
    config.epsilon = epsilon;
    config.trials = trials;
    config.seed = seed;
    config.workers = workers;
    config.exact = false;
    let r = simulate(&config)?;
    let (lo, hi) = clopper_pearson(r.failures, r.runs, CI_LEVEL);
    Ok(SweepRow {
        n,
        k,
        ell: Some(ell),
        cost_ceiling_bits: Some(r.cost_ceiling_bits),
        mean_cost_bits: Some(r.mean_cost_bits),
        emp_error: Some(r.emp_error),
        ci_low: Some(lo),
        ci_high: Some(hi),
        seed,
        note: None,
    })
}
