//! Quick numerical sanity checks against closed forms and published values.

use serde::Serialize;

use crate::binary_tests::mcnemar_exact;
use crate::numerics::{binomial_sf_beta, binomial_sf_summation, chi2_sf, log_gamma, normal_cdf, normal_quantile};
use crate::power::{asymptotic_power, Effect};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check { name, passed: worst <= tol, detail: format!("worst error {worst:.3e} (tolerance {tol:.0e})") }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Chi-squared tail for even df: e^{-x/2} sum_{k<df/2} (x/2)^k / k!.
fn chi2_even_closed(x: f64, df: u32) -> f64 {
    let h = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..df / 2 {
        term *= h / f64::from(k);
        sum += term;
    }
    (-h).exp() * sum
}

pub fn selftest() -> Vec<Check> {
    let mut out = Vec::new();

    let p = mcnemar_exact(1241, 1042).p_value;
    out.push(check("mcnemar_exact(1241, 1042) ~ 1.69e-05", rel(p, 1.69e-5), 0.02));

    let mut worst: f64 = 0.0;
    for n in [10u64, 97, 500, 1000] {
        for k in (0..=n).step_by(7) {
            for p in [0.5, 0.1, 0.83] {
                let s = binomial_sf_summation(k, n, p).unwrap_or(f64::NAN);
                let b = binomial_sf_beta(k, n, p).unwrap_or(f64::NAN);
                if s > 1e-280 {
                    worst = worst.max(rel(b, s));
                }
            }
        }
    }
    out.push(check("binomial tail: summation vs incomplete beta", worst, 1e-10));

    let mut worst: f64 = 0.0;
    for df in (2..=40).step_by(2) {
        for i in 1..=60 {
            let x = 0.5 * f64::from(i);
            let closed = chi2_even_closed(x, df);
            worst = worst.max(rel(chi2_sf(x, df).unwrap_or(f64::NAN), closed));
        }
    }
    out.push(check("chi2_sf vs even-df closed form", worst, 1e-12));

    let mut worst: f64 = 0.0;
    for i in 1..2000 {
        let p = f64::from(i) / 2000.0;
        let z = normal_quantile(p).unwrap_or(f64::NAN);
        worst = worst.max((normal_cdf(z) - p).abs());
    }
    out.push(check("normal quantile/cdf round trip", worst, 1e-9));

    let mut worst: f64 = 0.0;
    let mut fact = 1.0f64;
    for n in 2..=20u32 {
        fact *= f64::from(n - 1);
        worst = worst.max(rel(log_gamma(f64::from(n)).unwrap_or(f64::NAN), fact.ln()));
    }
    out.push(check("log_gamma vs exact factorials", worst, 1e-14));

    let pw = asymptotic_power(25282, 0.09, Effect::Delta(0.0), 0.05).map_or(f64::NAN, |p| p.power);
    out.push(check("asymptotic power at zero effect equals alpha", (pw - 0.05).abs(), 1e-9));

    out
}
