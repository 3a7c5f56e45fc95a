//! Special functions, distribution tails and reproducible random streams.
//!
//! Everything here is pure and deterministic. No statistical policy lives in
//! this module; the tests built on top decide which tail to evaluate.

mod binomial;
mod gamma;
mod normal;
mod rng;

pub use binomial::{binomial_pmf, binomial_sf, binomial_sf_beta, binomial_sf_summation};
pub use gamma::{chi2_sf, gamma_q, log_gamma};
pub use normal::{normal_cdf, normal_quantile};
pub use rng::{mix64, rng_stream, stable_hash, RngStream};

/// A natural-log probability. `-inf` encodes probability zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub const ZERO_PROB: LogProb = LogProb(f64::NEG_INFINITY);

    pub fn new(value: f64) -> crate::Result<Self> {
        if value.is_nan() || value > 0.0 {
            return Err(crate::error::domain(format!("log-probability {value} must be <= 0")));
        }
        Ok(LogProb(value))
    }

    pub fn from_prob(p: f64) -> crate::Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(crate::error::domain(format!("probability {p} outside [0, 1]")));
        }
        Ok(LogProb(p.ln()))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp()
    }
}

/// Compensated (Kahan-Babuska) summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_prob_bounds() {
        assert!(LogProb::new(0.1).is_err());
        assert!(LogProb::new(f64::NAN).is_err());
        assert_eq!(LogProb::from_prob(0.0).unwrap(), LogProb::ZERO_PROB);
        assert_eq!(LogProb::ZERO_PROB.prob(), 0.0);
        assert!((LogProb::from_prob(0.25).unwrap().prob() - 0.25).abs() < 1e-16);
    }

    #[test]
    fn kahan_recovers_small_terms() {
        let mut s = KahanSum::default();
        s.add(1.0);
        for _ in 0..1_000_000 {
            s.add(1e-16);
        }
        assert!((s.total() - (1.0 + 1e-10)).abs() < 1e-20 + 1e-16);
    }
}
