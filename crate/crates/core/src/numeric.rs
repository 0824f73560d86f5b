//! Small numeric helpers shared by the discretization and solver modules.

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `ln sum_k exp(x_k) w_k` over cells with `w_k > 0`, shifted by the maximum exponent.
pub fn log_sum_exp_weighted(exponents: &[f64], weights: &[f64]) -> Option<f64> {
    let shift = exponents
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&x, _)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return None;
    }
    let total: f64 = exponents
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&x, &w)| (x - shift).exp() * w)
        .sum();
    Some(shift + total.ln())
}

/// Infinity norm.
pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0];
        assert!((compensated_sum(xs) - 4e-16).abs() < 1e-30);
    }

    #[test]
    fn log_sum_exp_handles_large_exponents() {
        let v = log_sum_exp_weighted(&[1000.0, 1000.0], &[1.0, 1.0]).unwrap();
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!(log_sum_exp_weighted(&[1.0], &[0.0]).is_none());
    }
}
