//! Published p-values and descriptive statistics recomputed from the
//! published per-task counts.

mod common;

use common::{exact_max_drop, find, ROWS};
use flipcheck_core::binary_tests::{fisher_test, max_drop_test, mcnemar_exact, pooled_test, MaxDropConfig};
use flipcheck_core::score_model::{table_stats, ContingencyTable};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn mcnemar_headline_value() {
    let p = mcnemar_exact(1241, 1042).p_value;
    assert!(rel(p, 1.69e-5) < 0.02, "{p}");
}

#[test]
fn pooled_matches_every_row() {
    for r in ROWS {
        let p = pooled_test(&r.tables()).unwrap().p_value;
        assert!(rel(p, r.p_pooled) < 0.02, "{}: {p:e} vs {:e}", r.name, r.p_pooled);
    }
}

#[test]
fn fisher_matches_every_row() {
    for r in ROWS {
        let p = fisher_test(&r.tables()).unwrap().p_value;
        assert!(rel(p, r.p_fisher) < 0.05, "{}: {p:e} vs {:e}", r.name, r.p_fisher);
    }
}

#[test]
fn max_drop_within_monte_carlo_error() {
    let cfg = MaxDropConfig { rounds: 100_000, seed: 0, add_one: false };
    for r in ROWS {
        let tables = r.tables();
        let p = max_drop_test(&tables, &cfg).unwrap().p_value;
        let exact = exact_max_drop(&tables);
        if r.p_max_drop == 0.0 {
            assert!(exact < 1e-6 && p == 0.0, "{}: {p} (exact {exact})", r.name);
            continue;
        }
        // both the published value and ours carry Monte Carlo noise
        let se = (r.p_max_drop * (1.0 - r.p_max_drop) / 100_000.0).sqrt();
        assert!((p - r.p_max_drop).abs() <= 3.0 * 2f64.sqrt() * se, "{}: {p} vs {}", r.name, r.p_max_drop);
        let se_exact = (exact * (1.0 - exact) / 100_000.0).sqrt();
        assert!((p - exact).abs() <= 4.0 * se_exact, "{}: {p} vs exact {exact}", r.name);
    }
}

#[test]
fn kv_fp8_descriptive_statistics() {
    let total = ContingencyTable::sum(&find("8b_kv_fp8").tables());
    assert_eq!((total.b, total.c, total.n()), (1241, 1042, 25282));
    let s = table_stats(&total).unwrap();
    assert_eq!(format!("{:.2}", 100.0 * s.delta), "0.79");
    assert_eq!(format!("{:.2}", 100.0 * s.se_delta), "0.19");
    assert_eq!(format!("{:.2}", 100.0 * s.flip_rate), "9.03");
}

#[test]
fn sparse_descriptive_statistics() {
    let s = table_stats(&ContingencyTable::sum(&find("8b_base_sparse_2_4").tables())).unwrap();
    assert_eq!(format!("{:.2}", 100.0 * s.delta), "2.59");
    assert_eq!(format!("{:.2}", 100.0 * s.flip_rate), "20.99");
    assert_eq!(format!("{:.2}", 100.0 * s.se_delta), "0.29");
}

#[test]
fn flip_rates_match_every_row() {
    let printed = [
        ("8b_rerun", "1.31"),
        ("8b_fp8", "8.71"),
        ("8b_w8a16", "4.45"),
        ("70b_kv_fp8", "4.18"),
        ("mistral_w4a16", "10.64"),
    ];
    for (name, want) in printed {
        let s = table_stats(&ContingencyTable::sum(&find(name).tables())).unwrap();
        assert_eq!(format!("{:.2}", 100.0 * s.flip_rate), want, "{name}");
    }
}
