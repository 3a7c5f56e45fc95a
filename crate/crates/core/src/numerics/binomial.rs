use std::f64::consts::PI;

use super::gamma::log_gamma_unchecked;
use super::KahanSum;
use crate::error::domain;
use crate::Result;

/// Above this many trials the tail is evaluated through the incomplete beta function.
const SUMMATION_MAX_N: u64 = 1000;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn check(k: u64, n: u64, p: f64) -> Result<()> {
    if k > n {
        return Err(domain(format!("binomial: k={k} exceeds n={n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("binomial: p={p} outside [0, 1]")));
    }
    Ok(())
}

/// P(X >= k) for X ~ Binomial(n, p).
///
/// Uses compensated log-space summation for `n <= 1000` and the regularized
/// incomplete beta function beyond that.
pub fn binomial_sf(k: u64, n: u64, p: f64) -> Result<f64> {
    check(k, n, p)?;
    if n <= SUMMATION_MAX_N {
        binomial_sf_summation(k, n, p)
    } else {
        binomial_sf_beta(k, n, p)
    }
}

/// Upper tail by summing PMF terms built from log-gamma values.
pub fn binomial_sf_summation(k: u64, n: u64, p: f64) -> Result<f64> {
    check(k, n, p)?;
    if let Some(v) = trivial_tail(k, n, p) {
        return Ok(v);
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let ln_n_fact = log_gamma_unchecked(n as f64 + 1.0);
    let term = |j: u64| {
        (ln_n_fact - log_gamma_unchecked(j as f64 + 1.0) - log_gamma_unchecked((n - j) as f64 + 1.0)
            + j as f64 * ln_p
            + (n - j) as f64 * ln_q)
            .exp()
    };
    let mode = ((n + 1) as f64 * p).floor() as u64;
    let mut acc = KahanSum::default();
    if k > mode {
        for j in k..=n {
            let t = term(j);
            acc.add(t);
            if t <= acc.total() * 1e-18 {
                break;
            }
        }
        Ok(acc.total().clamp(0.0, 1.0))
    } else {
        // the upper tail holds most of the mass; sum the lower one instead
        for j in (0..k).rev() {
            let t = term(j);
            acc.add(t);
            if t <= acc.total() * 1e-18 {
                break;
            }
        }
        Ok((1.0 - acc.total()).clamp(0.0, 1.0))
    }
}

/// Upper tail via I_p(k, n - k + 1), with the continued fraction evaluated
/// on whichever side converges.
pub fn binomial_sf_beta(k: u64, n: u64, p: f64) -> Result<f64> {
    check(k, n, p)?;
    if let Some(v) = trivial_tail(k, n, p) {
        return Ok(v);
    }
    let a = k as f64;
    let b = (n - k + 1) as f64;
    let q = 1.0 - p;
    let sf = if p < (a + 1.0) / (a + b + 2.0) {
        // x^a (1-x)^b / (a B(a, b)) == (1 - p) * pmf(k)
        q * binomial_pmf_raw(k, n, p, q) * beta_continued_fraction(a, b, p)
    } else {
        // 1 - I_{1-p}(b, a); the prefactor equals p * pmf(k - 1)
        1.0 - p * binomial_pmf_raw(k - 1, n, p, q) * beta_continued_fraction(b, a, q)
    };
    Ok(sf.clamp(0.0, 1.0))
}

fn trivial_tail(k: u64, n: u64, p: f64) -> Option<f64> {
    if k == 0 || p == 1.0 {
        Some(1.0)
    } else if p == 0.0 {
        Some(0.0)
    } else if k == n {
        Some((n as f64 * p.ln()).exp())
    } else {
        None
    }
}

/// Binomial probability mass, via the saddle-point expansion (Loader's method).
pub fn binomial_pmf(k: u64, n: u64, p: f64) -> Result<f64> {
    check(k, n, p)?;
    Ok(binomial_pmf_raw(k, n, p, 1.0 - p))
}

fn binomial_pmf_raw(k: u64, n: u64, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    if k == 0 {
        return (nf * (-p).ln_1p()).exp();
    }
    if k == n {
        return (nf * p.ln()).exp();
    }
    let kf = k as f64;
    let lc = stirling_error(nf) - stirling_error(kf) - stirling_error(nf - kf)
        - deviance_term(kf, nf * p)
        - deviance_term(nf - kf, nf * q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// ln(n!) - [(n + 1/2) ln n - n + ln sqrt(2 pi)] for integer-valued n >= 1.
fn stirling_error(n: f64) -> f64 {
    if n <= 15.0 {
        let mut fact = 1.0;
        let mut i = 2.0;
        while i <= n {
            fact *= i;
            i += 1.0;
        }
        fact.ln() - (n + 0.5) * n.ln() + n - LN_SQRT_2PI
    } else {
        const S0: f64 = 1.0 / 12.0;
        const S1: f64 = 1.0 / 360.0;
        const S2: f64 = 1.0 / 1260.0;
        const S3: f64 = 1.0 / 1680.0;
        const S4: f64 = 1.0 / 1188.0;
        let nn = n * n;
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// x ln(x / m) + m - x, evaluated without cancellation when x is close to m.
fn deviance_term(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let v2 = v * v;
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..100_000 {
        let m = f64::from(m);
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}
