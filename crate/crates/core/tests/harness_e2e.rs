mod common;

use std::io::Write;
use std::path::Path;

use common::find;
use flipcheck_core::harness::{ingest, render_csv, render_json, run_compare, Input, RunConfig, TestFamily};
use flipcheck_core::score_model::ContingencyTable;

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
    path
}

/// Binary score dumps realising the given per-task tables.
fn dumps(tasks: &[&str], tables: &[ContingencyTable]) -> (String, String) {
    let (mut base, mut cand) = (String::new(), String::new());
    for (task, t) in tasks.iter().zip(tables) {
        let cells = [(t.a, 0, 0), (t.b, 1, 0), (t.c, 0, 1), (t.d, 1, 1)];
        let mut id = 0u64;
        for (count, sb, sc) in cells {
            for _ in 0..count {
                base.push_str(&format!("{{\"task\":\"{task}\",\"doc_id\":{id},\"score\":{sb}}}\n"));
                cand.push_str(&format!("{{\"task\":\"{task}\",\"doc_id\":\"{id}\",\"score\":{sc}.0}}\n"));
                id += 1;
            }
        }
    }
    (base, cand)
}

#[test]
fn kv_fp8_from_synthesized_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let row = find("8b_kv_fp8");
    let (b, c) = dumps(&row.task_names(), &row.tables());
    let report = run_compare(&write(dir.path(), "b.jsonl", &b), Some(&write(dir.path(), "c.jsonl", &c)), &RunConfig::default())
        .unwrap();
    let a = &report.aggregate;
    assert_eq!(a.tests, TestFamily::Exact);
    assert!(((a.p_pooled.0 - 1.69e-5) / 1.69e-5).abs() < 0.02);
    assert!(((a.p_fisher.0 - 4.44e-4) / 4.44e-4).abs() < 0.05);
    assert!(report.decision.reject);
    assert_eq!(a.delta, (1241.0 - 1042.0) / 25282.0);
}

#[test]
fn identical_dumps_pass() {
    let dir = tempfile::tempdir().unwrap();
    let row = find("8b_fp8");
    let (b, _) = dumps(&row.task_names(), &row.tables());
    let p = write(dir.path(), "b.jsonl", &b);
    let report = run_compare(&p, Some(&p), &RunConfig::default()).unwrap();
    assert_eq!(report.aggregate.delta, 0.0);
    assert!(!report.decision.reject);
    for p in [report.aggregate.p_pooled, report.aggregate.p_fisher, report.aggregate.p_max_drop] {
        assert!(p.0 >= 0.5);
    }
}

#[test]
fn csv_round_trip_reproduces_p_values() {
    let dir = tempfile::tempdir().unwrap();
    let row = find("70b_kv_fp8");
    let (b, c) = dumps(&row.task_names(), &row.tables());
    let cfg = RunConfig::default();
    let first = run_compare(&write(dir.path(), "b.jsonl", &b), Some(&write(dir.path(), "c.jsonl", &c)), &cfg).unwrap();
    let csv = write(dir.path(), "t.csv", &render_csv(&first).unwrap());
    let Input::Tables(tables) = ingest(&csv).unwrap() else { panic!("expected tables") };
    assert_eq!(tables.len(), 5);
    let second = run_compare(&csv, None, &cfg).unwrap();
    assert_eq!(first.aggregate.p_pooled, second.aggregate.p_pooled);
    assert_eq!(first.aggregate.p_fisher, second.aggregate.p_fisher);
    assert_eq!(first.aggregate.p_max_drop, second.aggregate.p_max_drop);
    assert_eq!(render_json(&first).unwrap(), render_json(&second).unwrap());
}

#[test]
fn repeated_runs_are_averaged_before_testing() {
    let dir = tempfile::tempdir().unwrap();
    let (mut b, mut c) = (String::new(), String::new());
    for doc in 0..40 {
        for run in 0..3 {
            let sb = if (doc + run) % 3 == 0 { 0 } else { 1 };
            let sc = if doc % 4 == 0 { 0 } else { sb };
            b.push_str(&format!("{{\"task\":\"gsm\",\"doc_id\":{doc},\"run\":{run},\"score\":{sb}}}\n"));
            c.push_str(&format!("{{\"task\":\"gsm\",\"doc_id\":{doc},\"run\":{run},\"score\":{sc}}}\n"));
        }
    }
    let cfg = RunConfig { permutations: 5000, ..RunConfig::default() };
    let r = run_compare(&write(dir.path(), "b.jsonl", &b), Some(&write(dir.path(), "c.jsonl", &c)), &cfg).unwrap();
    assert_eq!(r.aggregate.tests, TestFamily::Permutation);
    assert_eq!(r.per_task[0].n, 40);
}

#[test]
fn strict_pairing_reports_missing_docs() {
    let dir = tempfile::tempdir().unwrap();
    let b = write(dir.path(), "b.jsonl", "{\"task\":\"t\",\"doc_id\":1,\"score\":1}\n{\"task\":\"t\",\"doc_id\":2,\"score\":0}\n");
    let c = write(dir.path(), "c.jsonl", "{\"task\":\"t\",\"doc_id\":1,\"score\":1}\n");
    let err = run_compare(&b, Some(&c), &RunConfig::default()).unwrap_err();
    assert_eq!(err.kind(), "mismatch");
    assert!(err.to_string().contains("t:2"));
    let cfg = RunConfig { pairing: flipcheck_core::score_model::PairingPolicy::Intersect, ..RunConfig::default() };
    assert_eq!(run_compare(&b, Some(&c), &cfg).unwrap().aggregate.unpaired_docs, 1);
}
