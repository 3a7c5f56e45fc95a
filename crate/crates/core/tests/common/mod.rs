//! Published per-task disagreement counts for the Open LLM Leaderboard v2
//! suite (BBH, GPQA, IFEval, MATH hard, MMLU-Pro, MuSR), with the statistics
//! printed alongside them: pooled, max-drop and Fisher p-values.
#![allow(dead_code)]

use flipcheck_core::score_model::ContingencyTable;

pub const TASKS: [&str; 6] = ["bbh", "gpqa", "ifeval", "math_hard", "mmlu_pro", "musr"];
pub const TASK_SIZES: [u64; 6] = [5761, 1192, 541, 5000, 12032, 756];
/// The 70B runs skip MATH hard.
pub const TASKS_70B: [usize; 5] = [0, 1, 2, 4, 5];

pub struct Row {
    pub name: &'static str,
    pub b: &'static [u64],
    pub c: &'static [u64],
    pub p_pooled: f64,
    pub p_max_drop: f64,
    pub p_fisher: f64,
}

const fn row(
    name: &'static str,
    b: &'static [u64],
    c: &'static [u64],
    p_pooled: f64,
    p_max_drop: f64,
    p_fisher: f64,
) -> Row {
    Row { name, b, c, p_pooled, p_max_drop, p_fisher }
}

pub const ROWS: &[Row] = &[
    row("8b_rerun", &[0, 0, 1, 162, 0, 0], &[0, 0, 2, 166, 0, 0], 6.29e-1, 8.04e-1, 8.68e-1),
    row("8b_tp1", &[33, 3, 19, 178, 68, 1], &[38, 4, 17, 160, 83, 3], 5.64e-1, 7.58e-1, 8.88e-1),
    row("8b_a100", &[35, 13, 17, 183, 79, 0], &[40, 13, 17, 185, 104, 4], 9.21e-1, 9.93e-1, 9.81e-1),
    row("8b_w4a16", &[395, 49, 50, 573, 712, 37], &[370, 42, 29, 371, 532, 34], 4.80e-15, 0.0, 2.84e-15),
    row("8b_fp8", &[189, 25, 32, 424, 407, 18], &[204, 39, 27, 377, 443, 16], 6.01e-1, 2.82e-1, 5.49e-1),
    row("8b_w8a16", &[79, 17, 30, 303, 138, 10], &[83, 4, 26, 270, 163, 3], 2.11e-1, 1.36e-2, 1.33e-2),
    row("8b_fp8_dynamic", &[207, 21, 23, 379, 322, 12], &[180, 21, 30, 354, 356, 11], 4.01e-1, 4.29e-1, 5.19e-1),
    row("8b_w8a8", &[158, 27, 26, 400, 315, 20], &[176, 24, 32, 357, 342, 10], 4.63e-1, 2.04e-1, 2.74e-1),
    row("8b_kv_fp8", &[250, 25, 23, 448, 479, 16], &[234, 25, 23, 347, 393, 20], 1.69e-5, 9.28e-4, 4.44e-4),
    row("70b_fp8_dynamic", &[83, 14, 11, 230, 8], &[77, 5, 8, 212, 4], 6.33e-2, 1.13e-1, 6.06e-2),
    row("70b_w8a8", &[151, 13, 11, 300, 10], &[129, 8, 11, 210, 4], 1.34e-5, 4.00e-5, 1.83e-4),
    row("70b_kv_fp8", &[118, 14, 5, 310, 6], &[120, 6, 8, 254, 7], 2.51e-2, 4.62e-2, 7.57e-2),
    row("mistral_fp8_dynamic", &[100, 48, 35, 457, 219, 16], &[109, 47, 32, 448, 196, 21], 3.07e-1, 5.69e-1, 6.24e-1),
    row("mistral_w4a16", &[219, 68, 64, 577, 490, 36], &[191, 49, 34, 504, 418, 39], 1.30e-5, 8.04e-3, 2.84e-5),
    row("8b_base_sparse_2_4", &[636, 195, 27, 632, 1428, 63], &[641, 182, 56, 316, 1006, 124], 1.09e-19, 0.0, 1.89e-35),
];

pub fn find(name: &str) -> &'static Row {
    ROWS.iter().find(|r| r.name == name).expect("known row")
}

impl Row {
    fn sizes(&self) -> Vec<u64> {
        if self.b.len() == 5 {
            TASKS_70B.iter().map(|&i| TASK_SIZES[i]).collect()
        } else {
            TASK_SIZES.to_vec()
        }
    }

    pub fn task_names(&self) -> Vec<&'static str> {
        if self.b.len() == 5 {
            TASKS_70B.iter().map(|&i| TASKS[i]).collect()
        } else {
            TASKS.to_vec()
        }
    }

    /// Full tables; agreements are all placed in `d`.
    pub fn tables(&self) -> Vec<ContingencyTable> {
        self.b
            .iter()
            .zip(self.c)
            .zip(self.sizes())
            .map(|((&b, &c), n)| ContingencyTable::new(0, b, c, n - b - c))
            .collect()
    }
}

/// Exact max-drop p-value under independent Binomial(n_t, 1/2) nulls:
/// 1 - prod_t P(z_t < z_obs), with z computed exactly as the test does.
pub fn exact_max_drop(tables: &[ContingencyTable]) -> f64 {
    use flipcheck_core::numerics::binomial_sf;
    let z = |k: u64, n: u64| {
        let nf = n as f64;
        (k as f64 / nf - 0.5) / (0.25 / nf).sqrt()
    };
    let live: Vec<_> = tables.iter().filter(|t| t.n_flips() > 0).collect();
    let z_obs = live.iter().map(|t| z(t.b, t.n_flips())).fold(f64::NEG_INFINITY, f64::max);
    let mut log_none = 0.0;
    for t in live {
        let n = t.n_flips();
        let k_min = (0..=n).find(|&k| z(k, n) >= z_obs);
        let tail = k_min.map_or(0.0, |k| binomial_sf(k, n, 0.5).unwrap());
        log_none += (-tail).ln_1p();
    }
    -log_none.exp_m1()
}
