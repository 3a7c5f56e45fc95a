use std::fmt::Write as _;

use super::{DegradationReport, TestFamily};
use crate::error::domain;
use crate::Result;

/// Six significant digits in scientific notation with a signed two-digit
/// exponent: `1.68886e-05`, `1.00000e+00`.
pub fn format_p(p: f64) -> String {
    let s = format!("{p:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn render_json(report: &DegradationReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| domain(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Contingency rows in the same format the ingester accepts.
pub fn render_csv(report: &DegradationReport) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| domain(e.to_string());
    w.write_record(["task", "a", "b", "c", "d"]).map_err(io)?;
    for row in &report.per_task {
        let t = row.table;
        w.write_record([row.task.clone(), t.a.to_string(), t.b.to_string(), t.c.to_string(), t.d.to_string()])
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| domain(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| domain(e.to_string()))
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Drop binary-representation noise such as 3 * 0.05 = 0.15000000000000002.
fn tidy(x: f64) -> f64 {
    format!("{x:.12}").parse().unwrap_or(x)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_owned(), |v| format!("{v:.3}"))
}

/// Human-readable summary, one line per task plus the aggregate.
pub fn render_table(report: &DegradationReport) -> String {
    let width = report.per_task.iter().map(|r| r.task.len()).max().unwrap_or(0).max(9);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$} {:>8} {:>7} {:>7} {:>8} {:>8} {:>8} {:>7} {:>8} {:>6} {:>12}",
        "task", "N", "b", "c", "acc_b%", "acc_c%", "delta%", "SE%", "p_flip%", "q", "p"
    );
    for r in &report.per_task {
        let _ = writeln!(
            s,
            "{:<width$} {:>8} {:>7} {:>7} {:>8} {:>8} {:>8} {:>7} {:>8} {:>6} {:>12}",
            r.task,
            r.n,
            r.b,
            r.c,
            pct(r.accuracy_baseline),
            pct(r.accuracy_candidate),
            pct(r.delta),
            pct(r.se),
            pct(r.p_flip),
            opt(r.q),
            format_p(r.p_value.0)
        );
    }
    let a = &report.aggregate;
    let _ = writeln!(
        s,
        "{:<width$} {:>8} {:>7} {:>7} {:>8} {:>8} {:>8} {:>7} {:>8} {:>6}",
        "aggregate",
        a.n,
        a.b,
        a.c,
        pct(a.accuracy_baseline),
        pct(a.accuracy_candidate),
        pct(a.delta),
        pct(a.se),
        pct(a.p_flip),
        opt(a.q)
    );
    let family = match a.tests {
        TestFamily::Exact => "exact",
        TestFamily::Permutation => "permutation",
    };
    let _ = writeln!(s);
    let _ = writeln!(s, "tests:    {family}");
    let _ = writeln!(s, "pooled:   {}", format_p(a.p_pooled.0));
    let _ = writeln!(s, "fisher:   {}", format_p(a.p_fisher.0));
    let _ = writeln!(s, "max_drop: {}", format_p(a.p_max_drop.0));
    if a.unpaired_docs > 0 {
        let _ = writeln!(s, "unpaired documents dropped: {}", a.unpaired_docs);
    }
    let verdict = if report.decision.reject { "DEGRADED" } else { "no degradation detected" };
    let _ = writeln!(
        s,
        "decision: {verdict} at alpha={} (combined type-I error <= {})",
        report.decision.alpha,
        tidy(report.decision.bonferroni_bound)
    );
    s
}
