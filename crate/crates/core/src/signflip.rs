//! Shared Monte Carlo machinery for the max-drop and permutation tests.
//!
//! Rounds are split into fixed-size blocks. Every (task, block) pair owns an
//! independent random stream, so the count of exceedances is the same no
//! matter how blocks are scheduled across threads.

use rayon::prelude::*;

use crate::numerics::{mix64, rng_stream, RngStream};

pub(crate) const BLOCK_ROUNDS: u64 = 1024;

/// Sum over blocks of `per_block(block_index, rounds_in_block)`.
pub(crate) fn count_over_blocks<F>(rounds: u64, per_block: F) -> u64
where
    F: Fn(u64, u64) -> u64 + Sync,
{
    let blocks = rounds.div_ceil(BLOCK_ROUNDS);
    (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let len = BLOCK_ROUNDS.min(rounds - blk * BLOCK_ROUNDS);
            per_block(blk, len)
        })
        .sum()
}

pub(crate) fn block_stream(seed: u64, task_key: u64, block: u64) -> RngStream {
    rng_stream(seed, mix64(task_key, block))
}

/// Paired differences grouped by distinct value.
///
/// A sign-flipped sum over `k` copies of `v` is `v * (2 * ones - k)` where
/// `ones` counts set bits among `k` random bits, so each round costs one bit
/// per document instead of one float operation. Zero differences contribute
/// nothing under any sign and are dropped.
#[derive(Debug, Clone)]
pub(crate) struct SignFlipGroups {
    values: Vec<f64>,
    counts: Vec<u64>,
}

impl SignFlipGroups {
    pub(crate) fn from_diffs(diffs: &[f64]) -> Self {
        let mut nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
        nonzero.sort_by(f64::total_cmp);
        let mut values = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for d in nonzero {
            match values.last() {
                Some(&last) if last == d => *counts.last_mut().expect("parallel vecs") += 1,
                _ => {
                    values.push(d);
                    counts.push(1);
                }
            }
        }
        Self { values, counts }
    }

    /// Sum with every sign positive; identical to a simulated round in which
    /// all bits come up set.
    pub(crate) fn observed_sum(&self) -> f64 {
        self.values.iter().zip(&self.counts).map(|(v, &k)| v * k as f64).sum()
    }

    pub(crate) fn simulated_sum(&self, rng: &mut RngStream) -> f64 {
        self.values
            .iter()
            .zip(&self.counts)
            .map(|(v, &k)| {
                let ones = rng.count_ones(k);
                v * (2.0 * ones as f64 - k as f64)
            })
            .sum()
    }
}
