//! Deformed logarithm and exponential.
//!
//! `ln_q x = (x^(1-q) - 1) / (1 - q)` and its inverse
//! `e_q x = [1 + (1-q) x]^(1/(1-q))`. Both collapse to `ln`/`exp` inside a
//! small band around `q = 1`.
//!
//! The general branch is evaluated through `exp_m1`/`ln_1p` so that the
//! round trip `e_q(ln_q x)` keeps full relative precision even a hair
//! outside the classical band.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default half-width of the band around `q = 1` treated as classical.
pub const DEFAULT_CLASSICAL_EPSILON: f64 = 1e-9;

/// An entropic index (`q` for Tsallis, `alpha` for Rényi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationIndex {
    q: f64,
    classical_epsilon: f64,
}

impl DeformationIndex {
    pub fn new(q: f64) -> Result<Self> {
        Self::with_epsilon(q, DEFAULT_CLASSICAL_EPSILON)
    }

    pub fn with_epsilon(q: f64, classical_epsilon: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "entropic index must be a positive real, got {q}"
            )));
        }
        if !(classical_epsilon > 0.0 && classical_epsilon < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "classical band half-width must lie in (0, 0.5), got {classical_epsilon}"
            )));
        }
        Ok(Self { q, classical_epsilon })
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.q
    }

    #[inline]
    pub fn classical_epsilon(&self) -> f64 {
        self.classical_epsilon
    }

    /// Whether `|q - 1| <= classical_epsilon`.
    #[inline]
    pub fn is_classical(&self) -> bool {
        (self.q - 1.0).abs() <= self.classical_epsilon
    }

    /// `1 - q`.
    #[inline]
    pub fn one_minus(&self) -> f64 {
        1.0 - self.q
    }
}

/// q-logarithm. Fails on nonpositive `x`.
pub fn q_log(x: f64, q: DeformationIndex) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("q-logarithm needs x > 0, got {x}")));
    }
    Ok(q_log_unchecked(x, q))
}

/// q-logarithm without the domain check; `x` must be positive.
#[inline]
pub(crate) fn q_log_unchecked(x: f64, q: DeformationIndex) -> f64 {
    if q.is_classical() {
        return x.ln();
    }
    let k = q.one_minus();
    (k * x.ln()).exp_m1() / k
}

/// q-exponential with the Tsallis cutoff.
///
/// Where `1 + (1-q) x <= 0` the result is `0` for `q < 1`. For `q > 1` the
/// same region lies beyond the pole of the power law and the result is
/// `+inf`.
pub fn q_exp(x: f64, q: DeformationIndex) -> f64 {
    if q.is_classical() {
        return x.exp();
    }
    let k = q.one_minus();
    let kx = k * x;
    if kx <= -1.0 {
        return if k > 0.0 { 0.0 } else { f64::INFINITY };
    }
    (kx.ln_1p() / k).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(q: f64) -> DeformationIndex {
        DeformationIndex::new(q).unwrap()
    }

    #[test]
    fn q_log_examples() {
        assert_eq!(q_log(1.0, idx(0.5)).unwrap(), 0.0);
        assert!((q_log(4.0, idx(2.0)).unwrap() - 0.75).abs() < 1e-15);
        assert!((q_log(std::f64::consts::E, idx(1.0)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn q_log_rejects_nonpositive() {
        assert!(matches!(q_log(0.0, idx(2.0)), Err(Error::Domain(_))));
        assert!(matches!(q_log(-1.0, idx(0.5)), Err(Error::Domain(_))));
        assert!(q_log(f64::NAN, idx(0.5)).is_err());
    }

    #[test]
    fn q_exp_examples() {
        assert_eq!(q_exp(0.0, idx(0.7)), 1.0);
        let y = q_log(3.0, idx(0.7)).unwrap();
        assert!((q_exp(y, idx(0.7)) - 3.0).abs() < 1e-14);
        assert_eq!(q_exp(-10.0, idx(0.5)), 0.0);
    }

    #[test]
    fn q_exp_pole_above_one() {
        // 1 + (1 - 2) * 1 = 0
        assert_eq!(q_exp(1.0, idx(2.0)), f64::INFINITY);
        assert!((q_exp(0.5, idx(2.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn index_validation() {
        assert!(DeformationIndex::new(0.0).is_err());
        assert!(DeformationIndex::new(-1.0).is_err());
        assert!(DeformationIndex::new(f64::INFINITY).is_err());
        assert!(DeformationIndex::with_epsilon(2.0, 0.5).is_err());
        assert!(DeformationIndex::with_epsilon(2.0, 0.0).is_err());
        assert!(idx(1.0 + 1e-10).is_classical());
        assert!(!idx(1.0 + 1e-6).is_classical());
    }
}
