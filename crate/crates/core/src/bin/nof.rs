use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::json;

use nof_core::discrepancy::{
    bns_rhs, bound_suite, classify, mod3_row_character, product_weight,
    stated_bound, CorrelationQuery, CylinderFamily, SuiteOptions, DEFAULT_DISC_CAP,
};
use nof_core::distributions::{make_dist, DistName, DistributionSpec};
use nof_core::functions::{Inner, Outer, PartialFunctionSpec};
use nof_core::harness::{self, verify, BuiltProtocol, ExperimentConfig, InputSource, ProtocolKind, Suite};
use nof_core::{InputMatrix, RandomTape};

#[derive(Parser)]
#[command(name = "nof", version, about = "Number-on-the-forehead protocol simulator and discrepancy oracle")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo run of a protocol against its reference function.
    Simulate {
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "1/3")]
        epsilon: String,
        /// uniform | exhaustive | planted | matrix | a distribution name or "name:n=..,k=.."
        #[arg(long, default_value = "uniform")]
        input: String,
        /// Row budget for distributions that take one.
        #[arg(long)]
        ell: Option<usize>,
        /// Matrix file for `--input matrix`.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Trials in total; per input when exhaustive.
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Skip the exact per-input error oracle.
        #[arg(long)]
        no_exact: bool,
    },
    /// Cost table over a grid of (n, k) with uniform inputs.
    Sweep {
        #[arg(long)]
        protocol: String,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long, default_value = "1/3")]
        epsilon: String,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Discrepancy of a target under a distribution, with matching bound checks.
    Disc {
        /// gip | disj | mod3 | mod3char
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Distribution name (default uniform; ignored for mod3char).
        #[arg(long)]
        dist: Option<String>,
        #[arg(long, value_enum, default_value = "exact")]
        mode: DiscMode,
        /// Restrict to cylinders on at most this many players; also the
        /// distribution's row budget where it takes one.
        #[arg(long)]
        ell: Option<usize>,
        /// Number of XOR-ed blocks for disj.
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = DEFAULT_DISC_CAP)]
        cap: u128,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
    },
    /// Exact failure probability of a protocol on one matrix.
    ExactError {
        #[arg(long)]
        protocol: String,
        /// Matrix file in the shared text format.
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value = "1/3")]
        epsilon: String,
    },
    /// Runs the invariant suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Tabulates every discrepancy bound at one parameter point.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        ell: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = DEFAULT_DISC_CAP)]
        cap: u128,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DiscMode {
    Exact,
    Heuristic,
    Bns,
}

fn parse_epsilon(s: &str) -> Result<f64> {
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>()? / b.trim().parse::<f64>()?,
        None => s.trim().parse()?,
    };
    Ok(v)
}

fn read_matrix(path: &PathBuf) -> Result<InputMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse().with_context(|| format!("parsing {}", path.display()))
}

fn parse_dist(name: &str, n: usize, k: usize, ell: Option<usize>) -> Result<DistributionSpec> {
    if name.contains(':') {
        return Ok(name.parse()?);
    }
    let d: DistName = name.parse()?;
    let ell = match d {
        DistName::Upsilon | DistName::Sigma0Ell | DistName::Sigma1Ell | DistName::SigmaEll => {
            Some(ell.ok_or_else(|| anyhow!("--ell is required for {d}"))?)
        }
        _ => None,
    };
    Ok(make_dist(d, n, k, ell)?)
}

struct Output {
    text: String,
    ok: bool,
}

fn emit(cli: &Cli, out: Output) -> Result<ExitCode> {
    match &cli.out {
        Some(p) => fs::write(p, &out.text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{}", out.text),
    }
    Ok(if out.ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn json_text<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn simulate_cmd(cli: &Cli) -> Result<Output> {
    let Command::Simulate { protocol, n, k, epsilon, input, ell, matrix, trials, workers, no_exact } = &cli.command
    else {
        unreachable!()
    };
    let (n, k) = (*n, *k);
    let source = match input.as_str() {
        "exhaustive" => InputSource::Exhaustive,
        "planted" => InputSource::Planted,
        "matrix" => {
            let path = matrix.as_ref().ok_or_else(|| anyhow!("--input matrix needs --matrix FILE"))?;
            InputSource::Matrix(read_matrix(path)?)
        }
        other => InputSource::Distribution(parse_dist(other, n, k, *ell)?),
    };
    let mut config = ExperimentConfig::new(protocol.parse()?, n, k, source);
    config.epsilon = parse_epsilon(epsilon)?;
    config.trials = *trials;
    config.seed = cli.seed;
    config.workers = *workers;
    config.exact = !no_exact;
    let r = harness::simulate(&config)?;
    let ok = r.worst_cost_bits <= r.cost_ceiling_bits && r.ci_low <= config.epsilon;
    let text = match cli.format.unwrap_or(Format::Json) {
        Format::Csv => format!(
            "{}\n{},{},,{},{},{},{},{},{}\n",
            harness::SWEEP_HEADER,
            n,
            k,
            r.cost_ceiling_bits,
            r.mean_cost_bits,
            r.emp_error,
            r.ci_low,
            r.ci_high,
            r.seed
        ),
        _ => json_text(&r)?,
    };
    Ok(Output { text, ok })
}

fn sweep_cmd(cli: &Cli) -> Result<Output> {
    let Command::Sweep { protocol, n, k, epsilon, trials, workers } = &cli.command else {
        unreachable!()
    };
    let kind: ProtocolKind = protocol.parse()?;
    let rows = harness::sweep(kind, n, k, parse_epsilon(epsilon)?, *trials, cli.seed, *workers);
    let text = match cli.format.unwrap_or(Format::Csv) {
        Format::Json => json_text(&json!({ "schema": 1, "protocol": kind, "rows": rows }))?,
        _ => harness::sweep::to_csv(&rows),
    };
    Ok(Output { text, ok: true })
}

/// The query for `disc` plus the names of the bounds that apply to it.
fn disc_query(
    function: &str,
    n: usize,
    k: usize,
    dist: Option<&str>,
    ell: Option<usize>,
    m: usize,
) -> Result<(CorrelationQuery, Vec<&'static str>)> {
    let family = ell.map_or(CylinderFamily::All, CylinderFamily::Budget);
    let dist_name = dist.unwrap_or("uniform");
    let bare = dist_name.split(':').next().unwrap_or_default();
    let budget = ell.is_some();
    Ok(match function {
        "mod3char" => {
            let names = if budget { vec!["mod3_character_budget"] } else { vec![] };
            (CorrelationQuery::mod3_character(n, k, family)?, names)
        }
        "gip" | "mod3" => {
            let f = if function == "gip" {
                PartialFunctionSpec::gip(n, k)
            } else {
                PartialFunctionSpec::mod3xor(n, k)
            };
            let d = parse_dist(dist_name, n, k, ell)?;
            let names = match (function, bare, budget) {
                ("gip", "uniform", false) => vec!["gip_uniform"],
                ("gip", "upsilon", true) => vec!["gip_upsilon_budget"],
                ("mod3", "nu", true) => vec!["mod3_nu_budget"],
                _ => vec![],
            };
            (CorrelationQuery::with_distribution(&f, &d, family)?, names)
        }
        "disj" => {
            let d = parse_dist(dist_name, n, k, ell)?;
            let f = PartialFunctionSpec::composed(Outer::Xor, Inner::Disj, m, n, k);
            let names = match (bare, budget) {
                ("mu", false) => vec!["disj_xor_mu"],
                ("sigma", false) => vec!["disj_xor_sigma"],
                ("sigma_ell", true) => vec!["disj_xor_sigma_budget"],
                _ => vec![],
            };
            (CorrelationQuery::boolean(&f, product_weight(&d), family)?, names)
        }
        other => bail!("unknown --fn {other:?}; expected gip, disj, mod3 or mod3char"),
    })
}

fn disc_cmd(cli: &Cli) -> Result<Output> {
    let Command::Disc { function, n, k, dist, mode, ell, m, cap, restarts } = &cli.command else {
        unreachable!()
    };
    let (n, k, m) = (*n, *k, *m);
    let instance = json!({
        "fn": function, "n": n, "k": k, "m": m,
        "dist": dist.clone().unwrap_or_else(|| "uniform".into()),
        "ell": ell,
        "family": ell.map_or("all".to_string(), |l| format!("budget {l}")),
    });
    let (value, method, checks) = match mode {
        DiscMode::Bns => {
            if function != "mod3char" {
                bail!("--mode bns is defined for --fn mod3char");
            }
            let rhs = bns_rhs(mod3_row_character(n), &vec![1usize << n; k], *cap)?;
            (rhs, "exact", Vec::new())
        }
        DiscMode::Exact | DiscMode::Heuristic => {
            let (q, names) = disc_query(function, n, k, dist.as_deref(), *ell, m)?;
            let (value, method) = if *mode == DiscMode::Exact {
                (q.exact_disc(*cap)?.value, "exact")
            } else {
                (q.heuristic_disc(*restarts, &RandomTape::new(cli.seed))?.value, "heuristic")
            };
            let l = ell.unwrap_or(k);
            let checks: Vec<_> = names
                .into_iter()
                .filter_map(|name| {
                    stated_bound(name, n, k, l, m).map(|(bound, strict)| {
                        json!({ "name": name, "bound": bound, "strict": strict,
                                "status": classify(value, bound, strict) })
                    })
                })
                .collect();
            (value, method, checks)
        }
    };
    let ok = checks.iter().all(|c| c["status"] != "VIOLATION");
    let report = json!({
        "schema": 1, "instance": instance, "mode": mode, "method": method,
        "value": value, "bound_checks": checks, "seed": cli.seed,
    });
    Ok(Output { text: json_text(&report)?, ok })
}

fn exact_error_cmd(cli: &Cli) -> Result<Output> {
    let Command::ExactError { protocol, matrix, epsilon } = &cli.command else {
        unreachable!()
    };
    let x = read_matrix(matrix)?;
    let eps = parse_epsilon(epsilon)?;
    let built = BuiltProtocol::build(protocol.parse()?, x.n(), x.k(), eps)?;
    let err = built.exact_failure(&x)?;
    let report = json!({
        "schema": 1, "protocol": built.kind(), "n": x.n(), "k": x.k(), "epsilon": eps,
        "exact_error": err.to_string(), "exact_error_f64": err.to_f64(),
        "cost_ceiling_bits": built.info().cost_ceiling,
    });
    Ok(Output { text: json_text(&report)?, ok: true })
}

fn verify_cmd(cli: &Cli) -> Result<Output> {
    let Command::Verify { suite } = &cli.command else { unreachable!() };
    let suite: Suite = suite.parse()?;
    let r = verify(suite, cli.seed);
    let text = match cli.format.unwrap_or(Format::Text) {
        Format::Json => json_text(&r)?,
        _ => {
            let status = if r.passed() { "ALL PASS" } else { "FAILURES" };
            format!("{}{status}\n", r.to_text())
        }
    };
    Ok(Output { text, ok: r.passed() })
}

fn bounds_cmd(cli: &Cli) -> Result<Output> {
    let Command::Bounds { n, k, ell, m, cap } = &cli.command else { unreachable!() };
    let opts = SuiteOptions { cap: *cap, seed: cli.seed, ..SuiteOptions::default() };
    let r = bound_suite(*n, *k, *ell, *m, &opts);
    let text = match cli.format.unwrap_or(Format::Text) {
        Format::Json => json_text(&r)?,
        _ => r.to_table(),
    };
    Ok(Output { text, ok: r.violations() == 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { .. } => simulate_cmd(&cli),
        Command::Sweep { .. } => sweep_cmd(&cli),
        Command::Disc { .. } => disc_cmd(&cli),
        Command::ExactError { .. } => exact_error_cmd(&cli),
        Command::Verify { .. } => verify_cmd(&cli),
        Command::Bounds { .. } => bounds_cmd(&cli),
    };
    match result.and_then(|out| emit(&cli, out)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
