//! Synthetic rejection-rate study for the pooled, Fisher, max-drop and
//! combined tests.
//!
//! Each trial draws `T` tasks with `N ~ U{500..10000}` documents, flips
//! `Binomial(N, p_flip)` of them and marks `Binomial(flips, q)` of those as
//! degradations. Three scenarios differ only in `q`: no degradation anywhere,
//! a small uniform one, and a larger one confined to the first task.
//!
//! Agreements are all placed in `d` (`a = 0`); none of the tests look at how
//! agreements split.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::binary_tests::{combined_decision, MaxDropConfig, DEFAULT_MC_ROUNDS};
use crate::error::domain;
use crate::numerics::{mix64, rng_stream, stable_hash};
use crate::score_model::ContingencyTable;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Null,
    Balanced,
    SingleTask,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Null => "null",
            Scenario::Balanced => "balanced",
            Scenario::SingleTask => "single_task",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "null" => Ok(Scenario::Null),
            "balanced" => Ok(Scenario::Balanced),
            "single_task" => Ok(Scenario::SingleTask),
            other => Err(domain(format!("unknown scenario {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub t_values: Vec<u32>,
    pub n_min: u64,
    pub n_max: u64,
    pub p_flip: f64,
    pub q_null: f64,
    pub q_balanced: f64,
    pub q_single: f64,
    pub trials: u32,
    pub alpha: f64,
    pub mc_rounds: u64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, t_values: Vec<u32>) -> Self {
        Self {
            scenario,
            t_values,
            n_min: 500,
            n_max: 10_000,
            p_flip: 0.1,
            q_null: 0.5,
            q_balanced: 0.52,
            q_single: 0.58,
            trials: 1000,
            alpha: 0.05,
            mc_rounds: DEFAULT_MC_ROUNDS,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        let probs = [self.p_flip, self.q_null, self.q_balanced, self.q_single];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(domain("scenario probabilities must lie in [0, 1]"));
        }
        if self.trials == 0 {
            return Err(domain("trials must be at least 1"));
        }
        if self.t_values.is_empty() || self.t_values.contains(&0) {
            return Err(domain("task counts must be non-empty and positive"));
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(domain("document count range must satisfy 1 <= min <= max"));
        }
        Ok(())
    }

    fn q_for(&self, task: u32) -> f64 {
        match self.scenario {
            Scenario::Null => self.q_null,
            Scenario::Balanced => self.q_balanced,
            Scenario::SingleTask if task == 0 => self.q_single,
            Scenario::SingleTask => self.q_null,
        }
    }
}

/// One synthetic task: flips ~ Binomial(n, p_flip), b ~ Binomial(flips, q).
pub fn simulate_task<R: Rng + ?Sized>(n: u64, p_flip: f64, q: f64, rng: &mut R) -> Result<ContingencyTable> {
    let binom = |n, p| Binomial::new(n, p).map_err(|e| domain(format!("binomial({n}, {p}): {e}")));
    let flips = binom(n, p_flip)?.sample(rng);
    let b = binom(flips, q)?.sample(rng);
    Ok(ContingencyTable::new(0, b, flips - b, n - flips))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMethod {
    Pooled,
    Fisher,
    MaxDrop,
    Combined,
}

impl CurveMethod {
    pub const ALL: [CurveMethod; 4] = [CurveMethod::Pooled, CurveMethod::Fisher, CurveMethod::MaxDrop, CurveMethod::Combined];

    pub fn name(self) -> &'static str {
        match self {
            CurveMethod::Pooled => "pooled",
            CurveMethod::Fisher => "fisher",
            CurveMethod::MaxDrop => "max_drop",
            CurveMethod::Combined => "combined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    #[serde(rename = "T")]
    pub t: u32,
    pub rejections: u32,
    pub rejection_rate: f64,
    /// sqrt(r (1 - r) / trials)
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionCurve {
    pub method: CurveMethod,
    pub points: Vec<CurvePoint>,
}

impl RejectionCurve {
    pub fn at(&self, t: u32) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.t == t)
    }
}

/// Rejections of pooled, Fisher, max-drop and combined in one trial.
fn run_trial(spec: &ScenarioSpec, t: u32, trial: u32) -> Result<[bool; 4]> {
    let trial_key = mix64(mix64(stable_hash(spec.scenario.name()), u64::from(t)), u64::from(trial));
    let tables = (0..t)
        .map(|task| {
            let mut rng = rng_stream(spec.seed, mix64(trial_key, u64::from(task)));
            let n = rng.random_range(spec.n_min..=spec.n_max);
            simulate_task(n, spec.p_flip, spec.q_for(task), &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let mc = MaxDropConfig { rounds: spec.mc_rounds, seed: mix64(spec.seed, trial_key), add_one: false };
    let d = combined_decision(&tables, spec.alpha, &mc)?;
    let rej = |i: usize| d.per_method[i].p_value < spec.alpha;
    Ok([rej(0), rej(1), rej(2), d.reject])
}

/// Rejection rates for every method and every task count in the spec.
/// Trials run in parallel; results do not depend on scheduling.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<Vec<RejectionCurve>> {
    spec.validate()?;
    let mut curves: Vec<RejectionCurve> =
        CurveMethod::ALL.iter().map(|&method| RejectionCurve { method, points: Vec::new() }).collect();
    for &t in &spec.t_values {
        let outcomes = (0..spec.trials)
            .into_par_iter()
            .map(|trial| run_trial(spec, t, trial))
            .collect::<Result<Vec<_>>>()?;
        for (m, curve) in curves.iter_mut().enumerate() {
            let rejections = outcomes.iter().filter(|o| o[m]).count() as u32;
            let r = f64::from(rejections) / f64::from(spec.trials);
            curve.points.push(CurvePoint {
                t,
                rejections,
                rejection_rate: r,
                se: (r * (1.0 - r) / f64::from(spec.trials)).sqrt(),
            });
        }
        log::info!("{} T={t}: {} trials done", spec.scenario.name(), spec.trials);
    }
    Ok(curves)
}

pub const CURVE_CSV_HEADER: &str = "scenario,method,T,rejection_rate,se";

pub fn curves_csv(scenario: Scenario, curves: &[RejectionCurve]) -> String {
    let mut s = String::new();
    s.push_str(CURVE_CSV_HEADER);
    s.push('\n');
    for c in curves {
        for p in &c.points {
            let _ = writeln!(s, "{},{},{},{},{}", scenario.name(), c.method.name(), p.t, p.rejection_rate, p.se);
        }
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport<'a> {
    pub spec: &'a ScenarioSpec,
    pub curves: &'a [RejectionCurve],
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_degradation() {
        let mut rng = rng_stream(1, 2);
        for _ in 0..20 {
            let t = simulate_task(731, 1.0, 1.0, &mut rng).unwrap();
            assert_eq!((t.a, t.b, t.c, t.d), (0, 731, 0, 0));
        }
    }

    #[test]
    fn law_of_large_numbers() {
        let mut rng = rng_stream(3, 0);
        let t = simulate_task(1_000_000, 0.1, 0.5, &mut rng).unwrap();
        let q_hat = t.b as f64 / t.n_flips() as f64;
        assert!((q_hat - 0.5).abs() < 0.01);
        assert!((t.n_flips() as f64 / 1e6 - 0.1).abs() < 0.01);
        assert_eq!(t.n(), 1_000_000);
    }

    #[test]
    fn same_seed_same_table() {
        let a = simulate_task(5000, 0.1, 0.55, &mut rng_stream(9, 9)).unwrap();
        let b = simulate_task(5000, 0.1, 0.55, &mut rng_stream(9, 9)).unwrap();
        assert_eq!(a, b);
    }

    fn small_spec(scenario: Scenario) -> ScenarioSpec {
        let mut spec = ScenarioSpec::new(scenario, vec![1, 3]);
        spec.trials = 40;
        spec.mc_rounds = 500;
        spec.seed = 4;
        spec
    }

    #[test]
    fn combined_dominates_each_method() {
        let curves = run_scenario(&small_spec(Scenario::Balanced)).unwrap();
        for i in 0..2 {
            let combined = curves[3].points[i].rejections;
            for c in &curves[..3] {
                assert!(combined >= c.points[i].rejections);
            }
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let spec = small_spec(Scenario::SingleTask);
        let run = || run_scenario(&spec).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(run);
        assert_eq!(one, four);
        let csv = curves_csv(spec.scenario, &one);
        assert!(csv.starts_with("scenario,method,T,rejection_rate,se\nsingle_task,pooled,1,"));
        assert_eq!(csv.lines().count(), 1 + 4 * 2);
    }

    #[test]
    fn spec_validation() {
        let mut spec = small_spec(Scenario::Null);
        spec.trials = 0;
        assert!(run_scenario(&spec).is_err());
        assert!("bogus".parse::<Scenario>().is_err());
        assert_eq!("single_task".parse::<Scenario>().unwrap(), Scenario::SingleTask);
    }
}
