//! Sign-flip permutation versions of the pooled, Fisher and max-drop tests
//! for continuous per-sample scores.
//!
//! Under the null the two scores of a document are exchangeable, so each
//! difference `baseline - candidate` is equally likely to carry either sign.
//! Every round flips each document's sign independently; the p-value is
//! `(hits + 1) / (m + 1)` with `hits` the rounds whose statistic reaches the
//! observed one, so it never drops below `1 / (m + 1)`.
//!
//! Repeated runs must be averaged per document beforehand
//! ([`crate::score_model::aggregate_repeats`]); feeding repeats as separate
//! documents overstates significance.

use crate::binary_tests::{fisher_combine, Method, TestResult};
use crate::numerics::{mix64, stable_hash};
use crate::score_model::DiffVector;
use crate::signflip::{block_stream, count_over_blocks, SignFlipGroups};
use crate::{error::domain, Error, Result};

pub const DEFAULT_PERMUTATIONS: u64 = 100_000;

/// Added to each task's standard error in the max-drop statistic.
pub const MAX_DROP_EPSILON: f64 = 1e-10;

const POOLED_KEY: u64 = 0x706f_6f6c_6564;
const FISHER_SALT: u64 = 0x6669_7368_6572;
const MAX_DROP_SALT: u64 = 0x006d_6178_6472_6f70;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermConfig {
    pub permutations: u64,
    pub seed: u64,
}

impl Default for PermConfig {
    fn default() -> Self {
        Self { permutations: DEFAULT_PERMUTATIONS, seed: 0 }
    }
}

fn check_config(config: &PermConfig) -> Result<()> {
    if config.permutations == 0 {
        return Err(domain("at least one permutation is required"));
    }
    Ok(())
}

fn add_one_p(hits: u64, m: u64) -> f64 {
    (hits + 1) as f64 / (m + 1) as f64
}

/// Count rounds whose sign-flipped sum reaches the observed sum.
fn sign_flip_hits(diffs: &[f64], config: &PermConfig, key: u64) -> u64 {
    let groups = SignFlipGroups::from_diffs(diffs);
    let observed = groups.observed_sum();
    if observed == 0.0 && diffs.iter().all(|d| *d == 0.0) {
        // every simulated sum is exactly zero
        return config.permutations;
    }
    count_over_blocks(config.permutations, |block, len| {
        let mut rng = block_stream(config.seed, key, block);
        (0..len).filter(|_| groups.simulated_sum(&mut rng) >= observed).count() as u64
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn pooled_with_key(diffs: &[f64], config: &PermConfig, key: u64) -> Result<TestResult> {
    check_config(config)?;
    if diffs.is_empty() {
        return Err(domain("permutation test needs at least one document"));
    }
    let hits = sign_flip_hits(diffs, config, key);
    let n_flips = diffs.iter().filter(|d| **d != 0.0).count() as u64;
    Ok(TestResult {
        method: Method::PermPooled,
        p_value: add_one_p(hits, config.permutations),
        statistic: mean(diffs),
        n_flips_used: n_flips,
        degenerate: n_flips == 0,
        excluded_tasks: Vec::new(),
    })
}

/// Permutation test on the mean difference over all documents of all tasks.
pub fn perm_pooled(diffs: &[f64], config: &PermConfig) -> Result<TestResult> {
    pooled_with_key(diffs, config, POOLED_KEY)
}

fn task_key(salt: u64, task: &str) -> u64 {
    mix64(salt, stable_hash(task))
}

/// Per-task permutation p-values combined with Fisher's method. Each task's
/// random stream is keyed by its name, so reordering tasks changes nothing.
/// Tasks whose differences are all zero are left out, as in the binary test.
pub fn perm_fisher(tasks: &[DiffVector], config: &PermConfig) -> Result<TestResult> {
    if tasks.is_empty() {
        return Err(domain("at least one task is required"));
    }
    let mut p_values = Vec::with_capacity(tasks.len());
    let mut excluded = Vec::new();
    let mut n_flips = 0;
    for (i, task) in tasks.iter().enumerate() {
        let r = pooled_with_key(&task.diffs, config, task_key(FISHER_SALT, &task.task))?;
        n_flips += r.n_flips_used;
        if r.degenerate {
            excluded.push(i);
        } else {
            p_values.push(r.p_value);
        }
    }
    if p_values.is_empty() {
        return Ok(TestResult { excluded_tasks: excluded, ..TestResult::degenerate(Method::PermFisher) });
    }
    let (chi2, p_value) = fisher_combine(&p_values)?;
    Ok(TestResult {
        method: Method::PermFisher,
        p_value,
        statistic: chi2,
        n_flips_used: n_flips,
        degenerate: false,
        excluded_tasks: excluded,
    })
}

/// Sample standard deviation (ddof = 1) divided by sqrt(n), plus epsilon.
fn standard_error(diffs: &[f64]) -> f64 {
    let n = diffs.len() as f64;
    let m = mean(diffs);
    let ss: f64 = diffs.iter().map(|d| (d - m) * (d - m)).sum();
    (ss / (n - 1.0)).sqrt() / n.sqrt() + MAX_DROP_EPSILON
}

struct StandardizedTask {
    groups: SignFlipGroups,
    n: f64,
    se: f64,
    key: u64,
}

impl StandardizedTask {
    fn z(&self, sum: f64) -> f64 {
        (sum / self.n) / self.se
    }
}

/// Permutation test on the largest per-task mean difference divided by its
/// standard error. Every task needs at least two documents.
pub fn perm_max_drop(tasks: &[DiffVector], config: &PermConfig) -> Result<TestResult> {
    check_config(config)?;
    if tasks.is_empty() {
        return Err(domain("at least one task is required"));
    }
    if let Some(t) = tasks.iter().find(|t| t.diffs.len() < 2) {
        return Err(Error::TaskTooSmall { task: t.task.clone(), n: t.diffs.len() });
    }
    let prepared: Vec<StandardizedTask> = tasks
        .iter()
        .map(|t| StandardizedTask {
            groups: SignFlipGroups::from_diffs(&t.diffs),
            n: t.diffs.len() as f64,
            se: standard_error(&t.diffs),
            key: task_key(MAX_DROP_SALT, &t.task),
        })
        .collect();
    let z_obs = prepared
        .iter()
        .map(|t| t.z(t.groups.observed_sum()))
        .fold(f64::NEG_INFINITY, f64::max);

    let hits = count_over_blocks(config.permutations, |block, len| {
        let mut streams: Vec<_> =
            prepared.iter().map(|t| block_stream(config.seed, t.key, block)).collect();
        let mut hits = 0;
        for _ in 0..len {
            let z_sim = prepared
                .iter()
                .zip(streams.iter_mut())
                .map(|(t, rng)| t.z(t.groups.simulated_sum(rng)))
                .fold(f64::NEG_INFINITY, f64::max);
            if z_sim >= z_obs {
                hits += 1;
            }
        }
        hits
    });

    let n_flips = tasks.iter().flat_map(|t| &t.diffs).filter(|d| **d != 0.0).count() as u64;
    Ok(TestResult {
        method: Method::PermMaxDrop,
        p_value: add_one_p(hits, config.permutations),
        statistic: z_obs,
        n_flips_used: n_flips,
        degenerate: n_flips == 0,
        excluded_tasks: Vec::new(),
    })
}
