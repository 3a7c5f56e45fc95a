//! Paired per-sample scores, 2x2 contingency tables and the descriptive
//! statistics derived from them.
//!
//! Cell convention for a [`ContingencyTable`]:
//!
//! | cell | baseline | candidate |
//! |------|----------|-----------|
//! | `a`  | fail     | fail      |
//! | `b`  | success  | fail      |
//! | `c`  | fail     | success   |
//! | `d`  | success  | success   |
//!
//! `b` counts degradations and `c` improvements; only `b` and `c` enter any
//! test.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::domain;
use crate::{Error, Result};

const MAX_LISTED_KEYS: usize = 10;

/// One model's score on one document in one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub task: String,
    pub doc_id: String,
    pub run: u32,
    pub score: f64,
}

impl SampleScore {
    pub fn new(task: &str, doc_id: &str, run: u32, score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(domain(format!("score {score} for `{doc_id}` outside [0, 1]")));
        }
        Ok(Self { task: task.trim().to_owned(), doc_id: doc_id.trim().to_owned(), run, score })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScorePair {
    pub doc_id: String,
    pub baseline: f64,
    pub candidate: f64,
}

impl ScorePair {
    /// baseline - candidate; positive values are degradations.
    pub fn diff(&self) -> f64 {
        self.baseline - self.candidate
    }
}

/// Paired scores of one task, sorted by `doc_id`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedScoreSet {
    pub task: String,
    pub pairs: Vec<ScorePair>,
}

impl PairedScoreSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_binary(&self) -> bool {
        self.pairs.iter().all(|p| is_binary_score(p.baseline) && is_binary_score(p.candidate))
    }

    pub fn diffs(&self) -> DiffVector {
        DiffVector { task: self.task.clone(), diffs: self.pairs.iter().map(ScorePair::diff).collect() }
    }
}

/// Per-document differences `baseline - candidate` for one task.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffVector {
    pub task: String,
    pub diffs: Vec<f64>,
}

impl DiffVector {
    pub fn new(task: impl Into<String>, diffs: Vec<f64>) -> Result<Self> {
        if diffs.is_empty() {
            return Err(domain("difference vector must not be empty"));
        }
        if let Some(d) = diffs.iter().find(|d| !(-1.0..=1.0).contains(*d)) {
            return Err(domain(format!("score difference {d} outside [-1, 1]")));
        }
        Ok(Self { task: task.into(), diffs })
    }
}

pub fn is_binary_score(s: f64) -> bool {
    s == 0.0 || s == 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingPolicy {
    #[default]
    Strict,
    Intersect,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pairing {
    pub sets: Vec<PairedScoreSet>,
    /// Keys present in only one of the two dumps (always 0 under `Strict`).
    pub dropped: usize,
}

/// Collapse repeated runs to one score per `(task, doc_id)`: the mean over runs.
pub fn aggregate_repeats(scores: &[SampleScore]) -> Vec<SampleScore> {
    let mut groups: BTreeMap<(&str, &str), (f64, u32)> = BTreeMap::new();
    for s in scores {
        let entry = groups.entry((s.task.as_str(), s.doc_id.as_str())).or_insert((0.0, 0));
        entry.0 += s.score;
        entry.1 += 1;
    }
    groups
        .into_iter()
        .map(|((task, doc_id), (sum, count))| SampleScore {
            task: task.to_owned(),
            doc_id: doc_id.to_owned(),
            run: 0,
            // single-run docs pass through bit-exact
            score: if count == 1 { sum } else { (sum / f64::from(count)).clamp(0.0, 1.0) },
        })
        .collect()
}

fn check_unique(scores: &[SampleScore], side: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for s in scores {
        if !seen.insert((s.task.as_str(), s.doc_id.as_str(), s.run)) {
            return Err(domain(format!(
                "{side} has duplicate key {}:{} run {}",
                s.task, s.doc_id, s.run
            )));
        }
    }
    Ok(())
}

/// Join two dumps on `(task, doc_id)` after collapsing repeated runs.
pub fn pair_scores(
    baseline: &[SampleScore],
    candidate: &[SampleScore],
    policy: PairingPolicy,
) -> Result<Pairing> {
    check_unique(baseline, "baseline")?;
    check_unique(candidate, "candidate")?;
    let base = aggregate_repeats(baseline);
    let cand = aggregate_repeats(candidate);
    let base_map: BTreeMap<(&str, &str), f64> =
        base.iter().map(|s| ((s.task.as_str(), s.doc_id.as_str()), s.score)).collect();
    let cand_map: BTreeMap<(&str, &str), f64> =
        cand.iter().map(|s| ((s.task.as_str(), s.doc_id.as_str()), s.score)).collect();

    let unmatched: Vec<String> = base_map
        .keys()
        .filter(|k| !cand_map.contains_key(*k))
        .chain(cand_map.keys().filter(|k| !base_map.contains_key(*k)))
        .map(|(task, doc)| format!("{task}:{doc}"))
        .collect();
    if policy == PairingPolicy::Strict && !unmatched.is_empty() {
        let total = unmatched.len();
        return Err(Error::Mismatch {
            keys: unmatched.into_iter().take(MAX_LISTED_KEYS).collect(),
            total,
        });
    }

    let tasks: BTreeSet<&str> = base_map.keys().chain(cand_map.keys()).map(|(t, _)| *t).collect();
    let mut sets: BTreeMap<&str, Vec<ScorePair>> = tasks.iter().map(|t| (*t, Vec::new())).collect();
    for (&(task, doc), &b) in &base_map {
        if let Some(&c) = cand_map.get(&(task, doc)) {
            sets.get_mut(task).expect("task collected above").push(ScorePair {
                doc_id: doc.to_owned(),
                baseline: b,
                candidate: c,
            });
        }
    }
    let sets = sets
        .into_iter()
        .map(|(task, pairs)| {
            if pairs.is_empty() {
                Err(Error::EmptyTask(task.to_owned()))
            } else {
                Ok(PairedScoreSet { task: task.to_owned(), pairs })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Pairing { sets, dropped: unmatched.len() })
}

/// Counts of joint outcomes for one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Self { a, b, c, d }
    }

    /// Table with only the disagreement cells populated.
    pub fn from_flips(b: u64, c: u64) -> Self {
        Self { a: 0, b, c, d: 0 }
    }

    pub fn n(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    pub fn n_flips(&self) -> u64 {
        self.b + self.c
    }

    pub fn sum<'a>(tables: impl IntoIterator<Item = &'a ContingencyTable>) -> ContingencyTable {
        tables.into_iter().fold(ContingencyTable::default(), |acc, t| ContingencyTable {
            a: acc.a + t.a,
            b: acc.b + t.b,
            c: acc.c + t.c,
            d: acc.d + t.d,
        })
    }

    fn record(&mut self, baseline_ok: bool, candidate_ok: bool) {
        match (baseline_ok, candidate_ok) {
            (false, false) => self.a += 1,
            (true, false) => self.b += 1,
            (false, true) => self.c += 1,
            (true, true) => self.d += 1,
        }
    }
}

pub fn contingency_from_binary(pairs: &PairedScoreSet) -> Result<ContingencyTable> {
    let mut table = ContingencyTable::default();
    for p in &pairs.pairs {
        if !is_binary_score(p.baseline) || !is_binary_score(p.candidate) {
            return Err(Error::NonBinaryScore { task: pairs.task.clone(), doc_id: p.doc_id.clone() });
        }
        table.record(p.baseline == 1.0, p.candidate == 1.0);
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContinuousMode {
    /// Binarize with `score >= threshold`.
    Threshold(f64),
    /// `b` = baseline strictly better, `c` = candidate strictly better, ties in `a`.
    WinLoss,
}

/// Build a table from non-binary scores. Both modes discard the magnitude of
/// each difference; the permutation tests use it.
pub fn contingency_from_continuous(
    pairs: &PairedScoreSet,
    mode: ContinuousMode,
) -> Result<ContingencyTable> {
    match mode {
        ContinuousMode::Threshold(theta) => {
            if !(theta > 0.0 && theta < 1.0) {
                return Err(domain(format!("threshold {theta} must lie in (0, 1)")));
            }
            let binarized = PairedScoreSet {
                task: pairs.task.clone(),
                pairs: pairs
                    .pairs
                    .iter()
                    .map(|p| ScorePair {
                        doc_id: p.doc_id.clone(),
                        baseline: if p.baseline >= theta { 1.0 } else { 0.0 },
                        candidate: if p.candidate >= theta { 1.0 } else { 0.0 },
                    })
                    .collect(),
            };
            contingency_from_binary(&binarized)
        }
        ContinuousMode::WinLoss => {
            let mut table = ContingencyTable::default();
            for p in &pairs.pairs {
                if p.baseline > p.candidate {
                    table.b += 1;
                } else if p.candidate > p.baseline {
                    table.c += 1;
                } else if p.baseline == 1.0 {
                    table.d += 1;
                } else {
                    table.a += 1;
                }
            }
            Ok(table)
        }
    }
}

/// Descriptive statistics of one comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableStats {
    pub n_total: u64,
    pub accuracy_baseline: f64,
    pub accuracy_candidate: f64,
    /// Accuracy drop, baseline minus candidate.
    pub delta: f64,
    pub se_delta: f64,
    pub flip_rate: f64,
    /// b / (b + c); `None` without disagreements.
    pub degradation_prob: Option<f64>,
    pub n_flips: u64,
}

/// Statistics of a contingency table. The standard error is the plug-in
/// version of Var[D] = P_b + P_c - (P_b - P_c)^2 divided by N.
pub fn table_stats(t: &ContingencyTable) -> Result<TableStats> {
    let n = t.n();
    if n == 0 {
        return Err(domain("table_stats requires at least one sample"));
    }
    let nf = n as f64;
    let delta = (t.b as f64 - t.c as f64) / nf;
    let flip_rate = t.n_flips() as f64 / nf;
    Ok(TableStats {
        n_total: n,
        accuracy_baseline: (t.b + t.d) as f64 / nf,
        accuracy_candidate: (t.c + t.d) as f64 / nf,
        delta,
        se_delta: ((flip_rate - delta * delta).max(0.0) / nf).sqrt(),
        flip_rate,
        degradation_prob: (t.n_flips() > 0).then(|| t.b as f64 / t.n_flips() as f64),
        n_flips: t.n_flips(),
    })
}

/// Continuous analogue of [`table_stats`]: means of the scores, the mean
/// difference and its plug-in standard error sqrt((E[D^2] - E[D]^2) / N).
/// Flips are documents with any nonzero difference; `degradation_prob` uses
/// win/loss counts. Reduces to [`table_stats`] on binary scores.
pub fn continuous_stats(pairs: &PairedScoreSet) -> Result<TableStats> {
    if pairs.is_empty() {
        return Err(Error::EmptyTask(pairs.task.clone()));
    }
    let nf = pairs.len() as f64;
    let mean_base = pairs.pairs.iter().map(|p| p.baseline).sum::<f64>() / nf;
    let mean_cand = pairs.pairs.iter().map(|p| p.candidate).sum::<f64>() / nf;
    let delta = pairs.pairs.iter().map(ScorePair::diff).sum::<f64>() / nf;
    let second = pairs.pairs.iter().map(|p| p.diff() * p.diff()).sum::<f64>() / nf;
    let wl = contingency_from_continuous(pairs, ContinuousMode::WinLoss)?;
    Ok(TableStats {
        n_total: pairs.len() as u64,
        accuracy_baseline: mean_base,
        accuracy_candidate: mean_cand,
        delta,
        se_delta: ((second - delta * delta).max(0.0) / nf).sqrt(),
        flip_rate: wl.n_flips() as f64 / nf,
        degradation_prob: (wl.n_flips() > 0).then(|| wl.b as f64 / wl.n_flips() as f64),
        n_flips: wl.n_flips(),
    })
}
