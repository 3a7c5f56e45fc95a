use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flipcheck_core::harness::{
    ingest_success_counts, render_csv, render_json, render_table, run_compare, selftest, OutputFormat, RunConfig,
    ScoreMode,
};
use flipcheck_core::power::{power_grid, power_grid_csv, trim_by_flip_likelihood, EffectAxis, GridAxis};
use flipcheck_core::score_model::PairingPolicy;
use flipcheck_core::sim::{curves_csv, run_scenario, Scenario, ScenarioSpec, SimulationReport};
use flipcheck_core::{Error, Result};

const EXIT_ERROR: u8 = 1;
const EXIT_DEGRADED: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Detect accuracy degradations between a baseline and a candidate model
/// from per-sample evaluation scores.
#[derive(Parser, Debug)]
#[command(name = "flipcheck", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Significance level
    #[arg(long, global = true, default_value_t = 0.05)]
    alpha: f64,
    /// Monte Carlo rounds for the max-drop test
    #[arg(long, global = true, default_value_t = 10_000)]
    mc_rounds: u64,
    /// Sign-flip permutations for non-binary scores
    #[arg(long, global = true, default_value_t = 100_000)]
    permutations: u64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// strict | intersect
    #[arg(long, global = true, default_value = "strict")]
    pairing: String,
    /// auto | binary | continuous | threshold:<t> | winloss
    #[arg(long, global = true, default_value = "auto")]
    score_mode: String,
    /// table | json | csv
    #[arg(long, global = true)]
    output: Option<String>,
    /// Drop documents present in only one dump instead of failing
    #[arg(long, global = true)]
    allow_missing: bool,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare two score dumps, or analyse one contingency CSV (task,b,c[,a,d])
    Test {
        baseline: PathBuf,
        candidate: Option<PathBuf>,
    },
    /// Emit an asymptotic power grid as CSV
    Power {
        #[arg(long)]
        n: u64,
        /// start:stop:steps or a single value
        #[arg(long)]
        p_flip: String,
        /// Degradation probability, start:stop:steps or a single value
        #[arg(long, conflicts_with = "delta", required_unless_present = "delta")]
        q: Option<String>,
        /// Accuracy difference, start:stop:steps or a single value
        #[arg(long)]
        delta: Option<String>,
    },
    /// Keep only documents that flipped across probe runs
    Trim { counts: PathBuf },
    /// Rejection rates on synthetic data
    Simulate {
        /// null | balanced | single_task
        #[arg(long)]
        scenario: String,
        /// Task counts: 1..20, 1,5,10 or a single number
        #[arg(long = "T", default_value = "1..20")]
        t: String,
        #[arg(long, default_value_t = 1000)]
        trials: u32,
        #[arg(long, default_value_t = 0.1)]
        p_flip: f64,
    },
    /// Check the numerical routines against closed forms
    Selftest,
}

fn parse_axis(s: &str) -> Result<GridAxis> {
    let bad = || Error::Domain(format!("expected start:stop:steps or a number, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => {
            let v = v.parse().map_err(|_| bad())?;
            GridAxis::new(v, v, 1)
        }
        [a, b, n] => GridAxis::new(
            a.parse().map_err(|_| bad())?,
            b.parse().map_err(|_| bad())?,
            n.parse().map_err(|_| bad())?,
        ),
        _ => Err(bad()),
    }
}

fn parse_t_values(s: &str) -> Result<Vec<u32>> {
    let bad = || Error::Domain(format!("expected a..b, a comma list or a number, got {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.parse().map_err(|_| bad())?;
        let b: u32 = b.trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect()
}

fn output_format(common: &Common, default: OutputFormat) -> Result<OutputFormat> {
    common.output.as_deref().map_or(Ok(default), str::parse)
}

fn run_config(common: &Common) -> Result<RunConfig> {
    let pairing = match common.pairing.as_str() {
        _ if common.allow_missing => PairingPolicy::Intersect,
        "strict" => PairingPolicy::Strict,
        "intersect" => PairingPolicy::Intersect,
        other => return Err(Error::Domain(format!("unknown pairing policy {other:?}"))),
    };
    let config = RunConfig {
        alpha: common.alpha,
        mc_rounds: common.mc_rounds,
        permutations: common.permutations,
        seed: common.seed,
        pairing,
        score_mode: common.score_mode.parse::<ScoreMode>()?,
        output: output_format(common, OutputFormat::Table)?,
    };
    config.validate()?;
    Ok(config)
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Domain(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Returns what to print on stdout and the exit code.
fn execute(cli: &Cli) -> Result<(String, u8)> {
    let common = &cli.common;
    match &cli.command {
        Command::Test { baseline, candidate } => {
            let config = run_config(common)?;
            let report = run_compare(baseline, candidate.as_deref(), &config)?;
            let text = match config.output {
                OutputFormat::Table => render_table(&report),
                OutputFormat::Json => render_json(&report)?,
                OutputFormat::Csv => render_csv(&report)?,
            };
            Ok((text, if report.decision.reject { EXIT_DEGRADED } else { 0 }))
        }
        Command::Power { n, p_flip, q, delta } => {
            let effect = match (q, delta) {
                (Some(q), _) => EffectAxis::Q(parse_axis(q)?),
                (None, Some(d)) => EffectAxis::Delta(parse_axis(d)?),
                (None, None) => unreachable!("clap requires one of --q / --delta"),
            };
            let points = power_grid(*n, common.alpha, parse_axis(p_flip)?, effect)?;
            let text = match output_format(common, OutputFormat::Csv)? {
                OutputFormat::Json => to_json(&points)?,
                _ => power_grid_csv(&points),
            };
            Ok((text, 0))
        }
        Command::Trim { counts } => {
            let report = trim_by_flip_likelihood(&ingest_success_counts(counts)?)?;
            let text = match output_format(common, OutputFormat::Table)? {
                OutputFormat::Json => to_json(&report)?,
                OutputFormat::Csv => {
                    let mut s = String::from("doc_id\n");
                    for id in &report.kept_doc_ids {
                        s.push_str(id);
                        s.push('\n');
                    }
                    s
                }
                OutputFormat::Table => {
                    let mut s = format!(
                        "total_docs: {}\nnever_flip_docs: {}\nkept_docs: {}\nsuccesses,docs\n",
                        report.total_docs, report.never_flip_docs, report.kept_docs
                    );
                    for (k, v) in &report.success_histogram {
                        s.push_str(&format!("{k},{v}\n"));
                    }
                    s
                }
            };
            Ok((text, 0))
        }
        Command::Simulate { scenario, t, trials, p_flip } => {
            let scenario: Scenario = scenario.parse()?;
            let mut spec = ScenarioSpec::new(scenario, parse_t_values(t)?);
            spec.trials = *trials;
            spec.p_flip = *p_flip;
            spec.alpha = common.alpha;
            spec.mc_rounds = common.mc_rounds;
            spec.seed = common.seed;
            let curves = run_scenario(&spec)?;
            let text = match output_format(common, OutputFormat::Csv)? {
                OutputFormat::Json => to_json(&SimulationReport { spec: &spec, curves: &curves })?,
                _ => curves_csv(scenario, &curves),
            };
            Ok((text, 0))
        }
        Command::Selftest => {
            let checks = selftest();
            let ok = checks.iter().all(|c| c.passed);
            let text = match output_format(common, OutputFormat::Table)? {
                OutputFormat::Json => to_json(&checks)?,
                _ => checks
                    .iter()
                    .map(|c| format!("{} {} ({})\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
                    .collect(),
            };
            Ok((text, if ok { 0 } else { EXIT_ERROR }))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    match execute(&cli) {
        Ok((text, code)) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(text.as_bytes()).and_then(|()| out.flush()).is_err() {
                return ExitCode::from(EXIT_ERROR);
            }
            ExitCode::from(code)
        }
        Err(e) => {
            if cli.common.output.as_deref() == Some("json") {
                let body = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
                println!("{body}");
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(EXIT_ERROR)
        }
    }
}
