//! Asymptotic power of the one-sided McNemar test, its signal-to-noise ratio,
//! and the flip-likelihood trimming rule that shrinks a benchmark without
//! changing that ratio.
//!
//! With flip probability `p` and degradation probability `q`, the accuracy
//! difference is `delta = 2 p (q - 1/2)` and the test rejects with
//! probability `1 - Phi(t_alpha - sqrt(n / p) * delta)` for large `n`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::domain;
use crate::numerics::{normal_cdf, normal_quantile};
use crate::Result;

/// Effect size, given either as an accuracy difference or as the probability
/// that a flip is a degradation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Effect {
    Delta(f64),
    Q(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerPoint {
    pub n: u64,
    pub alpha: f64,
    pub p_flip: f64,
    pub q: f64,
    pub delta: f64,
    pub power: f64,
}

fn check_inputs(n: u64, p_flip: f64, alpha: f64) -> Result<()> {
    if n == 0 {
        return Err(domain("power: n must be at least 1"));
    }
    if !(p_flip > 0.0 && p_flip <= 1.0) {
        return Err(domain(format!("power: p_flip={p_flip} outside (0, 1]")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("power: alpha={alpha} outside (0, 1)")));
    }
    Ok(())
}

/// Resolve an effect into a consistent `(q, delta)` pair.
fn resolve(p_flip: f64, effect: Effect) -> Result<(f64, f64)> {
    match effect {
        Effect::Q(q) => {
            if !(0.0..=1.0).contains(&q) {
                return Err(domain(format!("power: q={q} outside [0, 1]")));
            }
            Ok((q, 2.0 * p_flip * (q - 0.5)))
        }
        Effect::Delta(delta) => {
            if delta.is_nan() || delta.abs() > p_flip {
                return Err(domain(format!("power: |delta|={} exceeds p_flip={p_flip}", delta.abs())));
            }
            Ok((0.5 + delta / (2.0 * p_flip), delta))
        }
    }
}

/// `sqrt(n / p_flip) * delta`. Unchanged by dropping documents that never
/// flip: `(n p, delta / p, 1)` gives the same value.
pub fn snr(n: f64, p_flip: f64, delta: f64) -> f64 {
    (n / p_flip).sqrt() * delta
}

pub fn asymptotic_power(n: u64, p_flip: f64, effect: Effect, alpha: f64) -> Result<PowerPoint> {
    check_inputs(n, p_flip, alpha)?;
    let (q, delta) = resolve(p_flip, effect)?;
    let t_alpha = normal_quantile(1.0 - alpha)?;
    let power = 1.0 - normal_cdf(t_alpha - snr(n as f64, p_flip, delta));
    Ok(PowerPoint { n, alpha, p_flip, q, delta, power: power.clamp(0.0, 1.0) })
}

/// Evenly spaced values from `start` to `stop` inclusive; one step means
/// `start` alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn new(start: f64, stop: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(domain("grid axis needs at least one step"));
        }
        if !start.is_finite() || !stop.is_finite() {
            return Err(domain("grid axis bounds must be finite"));
        }
        Ok(Self { start, stop, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i == self.steps - 1 {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * (i as f64 / last)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectAxis {
    Delta(GridAxis),
    Q(GridAxis),
}

/// Power over a `p_flip` x effect grid, row-major with `p_flip` outermost.
pub fn power_grid(n: u64, alpha: f64, p_flip: GridAxis, effect: EffectAxis) -> Result<Vec<PowerPoint>> {
    let (axis, make): (GridAxis, fn(f64) -> Effect) = match effect {
        EffectAxis::Delta(a) => (a, Effect::Delta),
        EffectAxis::Q(a) => (a, Effect::Q),
    };
    let effects = axis.values();
    let mut out = Vec::with_capacity(p_flip.steps * effects.len());
    for p in p_flip.values() {
        for &e in &effects {
            out.push(asymptotic_power(n, p, make(e), alpha)?);
        }
    }
    Ok(out)
}

pub const POWER_CSV_HEADER: &str = "n,alpha,p_flip,q,delta,power";

/// CSV with shortest round-trip float formatting and LF line endings.
pub fn power_grid_csv(points: &[PowerPoint]) -> String {
    let mut s = String::with_capacity(48 * (points.len() + 1));
    s.push_str(POWER_CSV_HEADER);
    s.push('\n');
    for p in points {
        let _ = writeln!(s, "{},{},{},{},{},{}", p.n, p.alpha, p.p_flip, p.q, p.delta, p.power);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrimReport {
    pub total_docs: usize,
    pub never_flip_docs: usize,
    pub kept_docs: usize,
    pub kept_doc_ids: Vec<String>,
    /// Success count -> number of documents.
    pub success_histogram: BTreeMap<u64, usize>,
}

/// Keep only documents that were answered both correctly and incorrectly
/// across the probe runs; the rest are very unlikely to flip.
pub fn trim_by_flip_likelihood(success_counts: &BTreeMap<String, (u64, u64)>) -> Result<TrimReport> {
    let mut report = TrimReport {
        total_docs: success_counts.len(),
        never_flip_docs: 0,
        kept_docs: 0,
        kept_doc_ids: Vec::new(),
        success_histogram: BTreeMap::new(),
    };
    for (doc_id, &(successes, runs)) in success_counts {
        if runs < 2 {
            return Err(domain(format!("doc {doc_id}: need at least 2 runs, got {runs}")));
        }
        if successes > runs {
            return Err(domain(format!("doc {doc_id}: {successes} successes out of {runs} runs")));
        }
        *report.success_histogram.entry(successes).or_insert(0) += 1;
        if successes == 0 || successes == runs {
            report.never_flip_docs += 1;
        } else {
            report.kept_docs += 1;
            report.kept_doc_ids.push(doc_id.clone());
        }
    }
    Ok(report)
}
