//! End-to-end comparison of a baseline and a candidate model: ingest, pair,
//! choose exact or permutation tests, and assemble a report.

mod ingest;
mod render;
mod selftest;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Serialize, Serializer};

pub use ingest::{ingest, ingest_samples, ingest_success_counts, Input};
pub use render::{format_p, render_csv, render_json, render_table};
pub use selftest::{selftest, Check};

use crate::binary_tests::{combined_decision, decide, mcnemar_exact, CombinedDecision, MaxDropConfig, DEFAULT_MC_ROUNDS};
use crate::error::domain;
use crate::permutation::{perm_fisher, perm_max_drop, perm_pooled, PermConfig, DEFAULT_PERMUTATIONS};
use crate::score_model::{
    contingency_from_binary, contingency_from_continuous, continuous_stats, pair_scores, table_stats,
    ContingencyTable, ContinuousMode, PairedScoreSet, PairingPolicy, SampleScore, TableStats,
};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ScoreMode {
    /// Exact tests when every aggregated score is 0 or 1, permutation tests otherwise.
    #[default]
    Auto,
    Binary,
    Continuous,
    Threshold(f64),
    WinLoss,
}

impl fmt::Display for ScoreMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreMode::Auto => f.write_str("auto"),
            ScoreMode::Binary => f.write_str("binary"),
            ScoreMode::Continuous => f.write_str("continuous"),
            ScoreMode::Threshold(t) => write!(f, "threshold:{t}"),
            ScoreMode::WinLoss => f.write_str("winloss"),
        }
    }
}

impl FromStr for ScoreMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(ScoreMode::Auto),
            "binary" => Ok(ScoreMode::Binary),
            "continuous" => Ok(ScoreMode::Continuous),
            "winloss" => Ok(ScoreMode::WinLoss),
            _ => {
                let theta = s
                    .strip_prefix("threshold:")
                    .or_else(|| s.strip_prefix("threshold="))
                    .ok_or_else(|| domain(format!("unknown score mode {s:?}")))?;
                let theta: f64 = theta.parse().map_err(|_| domain(format!("bad threshold in {s:?}")))?;
                if !(theta > 0.0 && theta < 1.0) {
                    return Err(domain(format!("threshold {theta} must lie in (0, 1)")));
                }
                Ok(ScoreMode::Threshold(theta))
            }
        }
    }
}

impl Serialize for ScoreMode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Table,
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(domain(format!("unknown output format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub mc_rounds: u64,
    pub permutations: u64,
    pub seed: u64,
    pub pairing: PairingPolicy,
    pub score_mode: ScoreMode,
    pub output: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            mc_rounds: DEFAULT_MC_ROUNDS,
            permutations: DEFAULT_PERMUTATIONS,
            seed: 0,
            pairing: PairingPolicy::Strict,
            score_mode: ScoreMode::Auto,
            output: OutputFormat::Table,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(domain(format!("alpha {} must lie in (0, 1)", self.alpha)));
        }
        if self.mc_rounds == 0 || self.permutations == 0 {
            return Err(domain("mc_rounds and permutations must be positive"));
        }
        Ok(())
    }

    fn max_drop(&self) -> MaxDropConfig {
        MaxDropConfig { rounds: self.mc_rounds, seed: self.seed, add_one: false }
    }

    fn perm(&self) -> PermConfig {
        PermConfig { permutations: self.permutations, seed: self.seed }
    }
}

/// A p-value; serialized to JSON in scientific notation with six significant
/// digits, e.g. `1.68886e-05`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValue(pub f64);

impl Serialize for PValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = serde_json::value::RawValue::from_string(format_p(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFamily {
    /// Exact McNemar-based tests on binary outcomes.
    Exact,
    /// Sign-flip permutation tests on score differences.
    Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskRow {
    pub task: String,
    pub n: u64,
    pub b: u64,
    pub c: u64,
    pub accuracy_baseline: f64,
    pub accuracy_candidate: f64,
    pub delta: f64,
    pub se: f64,
    pub p_flip: f64,
    pub q: Option<f64>,
    pub p_value: PValue,
    /// Full table, kept for CSV output.
    #[serde(skip)]
    pub table: ContingencyTable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub tests: TestFamily,
    pub n_tasks: usize,
    pub n: u64,
    pub b: u64,
    pub c: u64,
    pub accuracy_baseline: f64,
    pub accuracy_candidate: f64,
    pub delta: f64,
    pub se: f64,
    pub p_flip: f64,
    pub q: Option<f64>,
    pub p_pooled: PValue,
    pub p_fisher: PValue,
    pub p_max_drop: PValue,
    /// Documents present in only one dump (dropped under intersect pairing).
    pub unpaired_docs: usize,
    pub reject: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionRow {
    pub reject: bool,
    pub alpha: f64,
    pub bonferroni_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegradationReport {
    pub per_task: Vec<TaskRow>,
    pub aggregate: AggregateRow,
    pub config: RunConfig,
    pub decision: DecisionRow,
}

fn task_row(task: &str, table: ContingencyTable, stats: &TableStats, p: f64) -> TaskRow {
    TaskRow {
        task: task.to_owned(),
        n: stats.n_total,
        b: table.b,
        c: table.c,
        accuracy_baseline: stats.accuracy_baseline,
        accuracy_candidate: stats.accuracy_candidate,
        delta: stats.delta,
        se: stats.se_delta,
        p_flip: stats.flip_rate,
        q: stats.degradation_prob,
        p_value: PValue(p),
        table,
    }
}

fn assemble(
    per_task: Vec<TaskRow>,
    stats: &TableStats,
    tests: TestFamily,
    decision: CombinedDecision,
    config: &RunConfig,
    unpaired_docs: usize,
) -> DegradationReport {
    let p = |i: usize| PValue(decision.per_method[i].p_value);
    let aggregate = AggregateRow {
        tests,
        n_tasks: per_task.len(),
        n: stats.n_total,
        b: per_task.iter().map(|r| r.b).sum(),
        c: per_task.iter().map(|r| r.c).sum(),
        accuracy_baseline: stats.accuracy_baseline,
        accuracy_candidate: stats.accuracy_candidate,
        delta: stats.delta,
        se: stats.se_delta,
        p_flip: stats.flip_rate,
        q: stats.degradation_prob,
        p_pooled: p(0),
        p_fisher: p(1),
        p_max_drop: p(2),
        unpaired_docs,
        reject: decision.reject,
        note: format!(
            "degradation flagged if any of pooled, fisher, max_drop has p < {}; type-I error <= {}",
            decision.alpha, decision.effective_level_bound
        ),
    };
    DegradationReport {
        per_task,
        aggregate,
        config: config.clone(),
        decision: DecisionRow {
            reject: decision.reject,
            alpha: decision.alpha,
            bonferroni_bound: decision.effective_level_bound,
        },
    }
}

/// Exact tests on per-task contingency tables.
pub fn compare_tables(tables: &[(String, ContingencyTable)], config: &RunConfig) -> Result<DegradationReport> {
    compare_tables_with(tables, config, 0)
}

fn compare_tables_with(
    tables: &[(String, ContingencyTable)],
    config: &RunConfig,
    unpaired: usize,
) -> Result<DegradationReport> {
    config.validate()?;
    if tables.is_empty() {
        return Err(domain("no tasks to compare"));
    }
    let mut rows = Vec::with_capacity(tables.len());
    for (task, t) in tables {
        if t.n() == 0 {
            return Err(domain(format!("task `{task}` has no documents")));
        }
        let stats = table_stats(t)?;
        rows.push(task_row(task, *t, &stats, mcnemar_exact(t.b, t.c).p_value));
    }
    let bare: Vec<ContingencyTable> = tables.iter().map(|(_, t)| *t).collect();
    let total = table_stats(&ContingencyTable::sum(&bare))?;
    let decision = combined_decision(&bare, config.alpha, &config.max_drop())?;
    Ok(assemble(rows, &total, TestFamily::Exact, decision, config, unpaired))
}

/// Sign-flip permutation tests on paired continuous scores.
fn compare_permutation(sets: &[PairedScoreSet], config: &RunConfig, unpaired: usize) -> Result<DegradationReport> {
    let perm = config.perm();
    let diffs: Vec<_> = sets.iter().map(PairedScoreSet::diffs).collect();
    let mut rows = Vec::with_capacity(sets.len());
    for (set, dv) in sets.iter().zip(&diffs) {
        let stats = continuous_stats(set)?;
        let wl = contingency_from_continuous(set, ContinuousMode::WinLoss)?;
        // a single-task Fisher combination is that task's own permutation p-value
        let p = perm_fisher(std::slice::from_ref(dv), &perm)?.p_value;
        rows.push(task_row(&set.task, wl, &stats, p));
    }
    let all = PairedScoreSet {
        task: String::new(),
        pairs: sets.iter().flat_map(|s| s.pairs.iter().cloned()).collect(),
    };
    let total = continuous_stats(&all)?;
    let all_diffs: Vec<f64> = diffs.iter().flat_map(|d| d.diffs.iter().copied()).collect();
    let decision = decide(
        config.alpha,
        vec![perm_pooled(&all_diffs, &perm)?, perm_fisher(&diffs, &perm)?, perm_max_drop(&diffs, &perm)?],
    )?;
    Ok(assemble(rows, &total, TestFamily::Permutation, decision, config, unpaired))
}

/// Pair two score dumps and run the test family selected by `score_mode`.
pub fn compare_samples(
    baseline: &[SampleScore],
    candidate: &[SampleScore],
    config: &RunConfig,
) -> Result<DegradationReport> {
    config.validate()?;
    let pairing = pair_scores(baseline, candidate, config.pairing)?;
    if pairing.dropped > 0 {
        log::warn!("{} document(s) present in only one dump were dropped", pairing.dropped);
    }
    let to_tables = |f: &dyn Fn(&PairedScoreSet) -> Result<ContingencyTable>| {
        pairing
            .sets
            .iter()
            .map(|s| Ok((s.task.clone(), f(s)?)))
            .collect::<Result<Vec<_>>>()
    };
    let binary = pairing.sets.iter().all(PairedScoreSet::is_binary);
    let tables = match config.score_mode {
        ScoreMode::Binary => to_tables(&contingency_from_binary)?,
        ScoreMode::Auto if binary => to_tables(&contingency_from_binary)?,
        ScoreMode::Threshold(t) => to_tables(&|s| contingency_from_continuous(s, ContinuousMode::Threshold(t)))?,
        ScoreMode::WinLoss => to_tables(&|s| contingency_from_continuous(s, ContinuousMode::WinLoss))?,
        ScoreMode::Auto | ScoreMode::Continuous => {
            return compare_permutation(&pairing.sets, config, pairing.dropped);
        }
    };
    compare_tables_with(&tables, config, pairing.dropped)
}

/// Compare two score dumps, or analyse a single contingency CSV.
pub fn run_compare(baseline: &Path, candidate: Option<&Path>, config: &RunConfig) -> Result<DegradationReport> {
    config.validate()?;
    match (ingest(baseline)?, candidate) {
        (Input::Tables(tables), None) => compare_tables(&tables, config),
        (Input::Samples(base), Some(cand)) => compare_samples(&base, &ingest_samples(cand)?, config),
        (Input::Tables(_), Some(_)) => {
            Err(domain("a contingency CSV already holds both models; pass it without a second file"))
        }
        (Input::Samples(_), None) => Err(domain("a score dump needs a candidate dump to compare against")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(task: &str, scores: &[f64]) -> Vec<SampleScore> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &s)| SampleScore::new(task, &i.to_string(), 0, s).unwrap())
            .collect()
    }

    fn quick() -> RunConfig {
        RunConfig { mc_rounds: 2000, permutations: 2000, ..RunConfig::default() }
    }

    #[test]
    fn score_mode_parsing() {
        assert_eq!("threshold:0.5".parse::<ScoreMode>().unwrap(), ScoreMode::Threshold(0.5));
        assert_eq!(ScoreMode::Threshold(0.25).to_string(), "threshold:0.25");
        assert!("threshold:1.5".parse::<ScoreMode>().is_err());
        assert!("nope".parse::<ScoreMode>().is_err());
        assert_eq!("winloss".parse::<ScoreMode>().unwrap(), ScoreMode::WinLoss);
    }

    #[test]
    fn self_comparison() {
        let s = samples("t", &[1.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
        let r = compare_samples(&s, &s, &quick()).unwrap();
        assert_eq!(r.aggregate.delta, 0.0);
        assert!(!r.decision.reject);
        assert_eq!(r.aggregate.tests, TestFamily::Exact);
        for p in [r.aggregate.p_pooled, r.aggregate.p_fisher, r.aggregate.p_max_drop] {
            assert!(p.0 >= 0.5);
        }
    }

    #[test]
    fn continuous_shift_is_flagged() {
        let base: Vec<f64> = (0..60).map(|i| 0.3 + 0.01 * f64::from(i)).collect();
        let cand: Vec<f64> = base.iter().map(|b| b - 0.05).collect();
        let r = compare_samples(&samples("t", &base), &samples("t", &cand), &quick()).unwrap();
        assert_eq!(r.aggregate.tests, TestFamily::Permutation);
        assert_eq!(r.aggregate.p_pooled.0, 1.0 / 2001.0);
        assert!(r.decision.reject);
    }

    #[test]
    fn modes_route_as_requested() {
        let base = samples("t", &[0.9, 0.2, 0.7, 0.4]);
        let cand = samples("t", &[0.1, 0.3, 0.6, 0.4]);
        let cfg = RunConfig { score_mode: ScoreMode::WinLoss, ..quick() };
        let r = compare_samples(&base, &cand, &cfg).unwrap();
        assert_eq!((r.per_task[0].b, r.per_task[0].c), (2, 1));
        let cfg = RunConfig { score_mode: ScoreMode::Threshold(0.5), ..quick() };
        let r = compare_samples(&base, &cand, &cfg).unwrap();
        assert_eq!((r.per_task[0].b, r.per_task[0].c), (1, 0));
        let cfg = RunConfig { score_mode: ScoreMode::Binary, ..quick() };
        assert!(compare_samples(&base, &cand, &cfg).is_err());
    }

    #[test]
    fn aggregate_delta_is_count_ratio() {
        let tables = vec![
            ("x".to_string(), ContingencyTable::new(10, 7, 3, 80)),
            ("y".to_string(), ContingencyTable::new(5, 2, 9, 40)),
        ];
        let r = compare_tables(&tables, &quick()).unwrap();
        assert_eq!(r.aggregate.delta, (9.0 - 12.0) / 156.0);
        assert_eq!((r.aggregate.b, r.aggregate.c, r.aggregate.n), (9, 12, 156));
    }

    #[test]
    fn json_layout() {
        let tables = vec![("x".to_string(), ContingencyTable::from_flips(1241, 1042))];
        let json = render_json(&compare_tables(&tables, &quick()).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["per_task", "aggregate", "config", "decision"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(json.contains("\"p_pooled\": 1.68886e-05"), "{json}");
        assert_eq!(v["decision"]["bonferroni_bound"].as_f64().unwrap(), 0.15000000000000002);
    }
}
