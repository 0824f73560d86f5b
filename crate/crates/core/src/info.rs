//! Entropy and relative-entropy functionals against an explicit reference measure.
//!
//! Conventions: `0 ln 0 = 0`, `a / 0 = +inf` for `a > 0`, `0 * (+-inf) = 0`.
//! Every sum skips cells where the first argument has no mass, and absolute
//! continuity is checked before any power is taken.
//!
//! The generalized functionals are evaluated from
//! `sum_k P_k expm1((t - 1) ln(P_k / R_k))`, which is `sum P^t R^(1-t) - 1`
//! without the cancellation that ruins the naive form near `t = 1`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measure::{absolute_continuity_violation, DensityVector, ProbabilityVector, WeightedPartition};
use crate::qcalc::DeformationIndex;

/// A real number or one of the two infinities produced by divergence branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
    NegInfinity,
}

impl ExtendedReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    /// Value as an `f64`, mapping the markers to `+-inf`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::PosInfinity => f64::INFINITY,
            ExtendedReal::NegInfinity => f64::NEG_INFINITY,
        }
    }

    /// Finite value or the given error.
    pub fn expect_finite(self, what: &str) -> Result<f64> {
        self.finite()
            .ok_or_else(|| Error::Domain(format!("{what} is infinite ({self})")))
    }
}

impl std::ops::Neg for ExtendedReal {
    type Output = ExtendedReal;

    fn neg(self) -> ExtendedReal {
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(-v),
            ExtendedReal::PosInfinity => ExtendedReal::NegInfinity,
            ExtendedReal::NegInfinity => ExtendedReal::PosInfinity,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PosInfinity => f.write_str("inf"),
            ExtendedReal::NegInfinity => f.write_str("-inf"),
        }
    }
}

// JSON has no infinity literal.
impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
            ExtendedReal::PosInfinity => s.serialize_str("inf"),
            ExtendedReal::NegInfinity => s.serialize_str("-inf"),
        }
    }
}

/// `S(p) = -sum p_k ln(p_k) mu_k`.
pub fn shannon_entropy(p: &DensityVector) -> f64 {
    let sum: f64 = p
        .iter_weighted()
        .filter(|&(v, w)| v > 0.0 && w > 0.0)
        .map(|(v, w)| v * v.ln() * w)
        .sum();
    // Subtracting from +0 keeps a zero entropy from printing as -0.
    0.0 - sum
}

/// `sum p^t mu - 1`, computed without cancellation.
pub(crate) fn power_moment_minus_one(p: &DensityVector, t: f64) -> f64 {
    let mut mass = 0.0;
    let mut excess = 0.0;
    for (v, w) in p.iter_weighted() {
        if v > 0.0 && w > 0.0 {
            mass += v * w;
            excess += v * w * ((t - 1.0) * v.ln()).exp_m1();
        }
    }
    (mass - 1.0) + excess
}

/// `integral p^q dmu`.
pub fn power_moment(p: &DensityVector, q: f64) -> f64 {
    p.iter_weighted()
        .filter(|&(v, w)| v > 0.0 && w > 0.0)
        .map(|(v, w)| (q * v.ln()).exp() * w)
        .sum()
}

fn check_pair(p: &ProbabilityVector, r: &ProbabilityVector) -> Result<()> {
    if p.len() != r.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            found: r.len(),
        });
    }
    Ok(())
}

fn dominated(p: &ProbabilityVector, r: &ProbabilityVector) -> bool {
    p.masses()
        .iter()
        .zip(r.masses())
        .all(|(&pk, &rk)| pk == 0.0 || rk > 0.0)
}

/// `sum P^t R^(1-t) - 1` for `P << R` of equal total mass, summed as
/// per-cell terms `R g(P/R)` with `g(x) = x^t - 1 - t (x - 1)`. Every term
/// has the sign of `t - 1`; roundoff of the wrong sign is clamped to zero.
fn divergence_moment_minus_one(p: &ProbabilityVector, r: &ProbabilityVector, t: f64) -> f64 {
    let sign = (t - 1.0).signum();
    p.masses()
        .iter()
        .zip(r.masses())
        .filter(|(_, &rk)| rk > 0.0)
        .map(|(&pk, &rk)| {
            let g = if pk == 0.0 {
                t - 1.0
            } else {
                let d = (pk - rk) / rk;
                (t * d.ln_1p()).exp_m1() - t * d
            };
            rk * (sign * g).max(0.0) * sign
        })
        .sum()
}

/// Kullback-Leibler divergence `sum P_k ln(P_k / R_k)`, `+inf` unless `P << R`.
///
/// Evaluated as `sum R_k phi(P_k / R_k)` with `phi(x) = x ln x - x + 1 >= 0`,
/// which agrees with the plain sum for normalized inputs and keeps the sign
/// exact for nearly equal pairs.
pub fn kl_divergence(p: &ProbabilityVector, r: &ProbabilityVector) -> Result<ExtendedReal> {
    check_pair(p, r)?;
    if !dominated(p, r) {
        return Ok(ExtendedReal::PosInfinity);
    }
    let value = p
        .masses()
        .iter()
        .zip(r.masses())
        .filter(|(_, &rk)| rk > 0.0)
        .map(|(&pk, &rk)| {
            if pk == 0.0 {
                return rk;
            }
            let d = (pk - rk) / rk;
            rk * ((1.0 + d) * d.ln_1p() - d).max(0.0)
        })
        .sum();
    Ok(ExtendedReal::Finite(value))
}

/// Entropy of a probability measure relative to the reference measure,
/// `-sum P_k ln(P_k / mu_k)`. Returns `-inf` when `P` is not `mu`-continuous.
pub fn measure_entropy(p: &ProbabilityVector, partition: &WeightedPartition) -> Result<ExtendedReal> {
    if p.len() != partition.len() {
        return Err(Error::LengthMismatch {
            expected: partition.len(),
            found: p.len(),
        });
    }
    if let Some(cell) = absolute_continuity_violation(p, partition) {
        log::warn!(
            "measure entropy: P has mass {} on mu-null cell {cell}; returning -inf",
            p.masses()[cell]
        );
        return Ok(ExtendedReal::NegInfinity);
    }
    let value = -p
        .masses()
        .iter()
        .zip(partition.weights())
        .filter(|(&pk, _)| pk > 0.0)
        .map(|(&pk, &w)| pk * (pk / w).ln())
        .sum::<f64>();
    Ok(ExtendedReal::Finite(value))
}

/// Rényi entropy `ln(sum p^a mu) / (1 - a)`; Shannon inside the classical band.
pub fn renyi_entropy(p: &DensityVector, alpha: DeformationIndex) -> f64 {
    if alpha.is_classical() {
        return shannon_entropy(p);
    }
    power_moment_minus_one(p, alpha.value()).ln_1p() / alpha.one_minus()
}

/// Rényi divergence `ln(sum P^a / R^(a-1)) / (a - 1)`, `+inf` unless `P << R`.
pub fn renyi_divergence(p: &ProbabilityVector, r: &ProbabilityVector, alpha: DeformationIndex) -> Result<ExtendedReal> {
    check_pair(p, r)?;
    if alpha.is_classical() {
        return kl_divergence(p, r);
    }
    if !dominated(p, r) {
        return Ok(ExtendedReal::PosInfinity);
    }
    let a = alpha.value();
    let value = divergence_moment_minus_one(p, r, a).ln_1p() / (a - 1.0);
    Ok(ExtendedReal::Finite(value))
}

/// Tsallis entropy `(1 - sum p^q mu) / (q - 1)`; Shannon inside the classical band.
pub fn tsallis_entropy(p: &DensityVector, q: DeformationIndex) -> f64 {
    if q.is_classical() {
        return shannon_entropy(p);
    }
    power_moment_minus_one(p, q.value()) / q.one_minus()
}

/// Tsallis divergence `(sum P^q / R^(q-1) - 1) / (q - 1)`, `+inf` unless `P << R`.
pub fn tsallis_divergence(p: &ProbabilityVector, r: &ProbabilityVector, q: DeformationIndex) -> Result<ExtendedReal> {
    check_pair(p, r)?;
    if q.is_classical() {
        return kl_divergence(p, r);
    }
    if !dominated(p, r) {
        return Ok(ExtendedReal::PosInfinity);
    }
    let t = q.value();
    Ok(ExtendedReal::Finite(divergence_moment_minus_one(p, r, t) / (t - 1.0)))
}
