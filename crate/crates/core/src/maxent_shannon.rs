//! Classical maximum entropy under expectation constraints.
//!
//! The maximizer is the Gibbs density `p = exp(-sum_m beta_m u_m) / Z(beta)`
//! with respect to the reference measure. The normalization multiplier is
//! folded into `ln Z`, leaving the convex dual `ln Z(beta) + beta . <u>` in
//! the `M` multipliers. It is minimized by damped Newton from `beta = 0`;
//! the gradient is `<u> - E_p[u]` and the Hessian the covariance of `u`
//! under `p`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::shannon_entropy;
use crate::measure::{DensityVector, WeightedPartition};
use crate::numeric::{log_sum_exp_weighted, max_abs};
use crate::qcalc::DeformationIndex;

/// Which expectation the targets refer to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintKind {
    /// `integral u p dmu`.
    Ordinary,
    /// Normalized q-expectation under the escort density `p^q / integral p^q dmu`.
    Escort(DeformationIndex),
}

/// Moment functions sampled per cell together with their target values.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    functions: Vec<Vec<f64>>,
    targets: Vec<f64>,
    kind: ConstraintKind,
}

impl ConstraintSet {
    pub fn new(functions: Vec<Vec<f64>>, targets: Vec<f64>, kind: ConstraintKind) -> Result<Self> {
        if functions.len() != targets.len() {
            return Err(Error::LengthMismatch {
                expected: functions.len(),
                found: targets.len(),
            });
        }
        if let Some(first) = functions.first() {
            if let Some(bad) = functions.iter().find(|f| f.len() != first.len()) {
                return Err(Error::LengthMismatch {
                    expected: first.len(),
                    found: bad.len(),
                });
            }
        }
        for (m, (f, &t)) in functions.iter().zip(&targets).enumerate() {
            if f.iter().any(|v| !v.is_finite()) || !t.is_finite() {
                return Err(Error::InvalidArgument(format!("constraint {m} has non-finite values")));
            }
            let (lo, hi) = min_max(f.iter().copied());
            if t < lo || t > hi {
                return Err(Error::Infeasible {
                    constraint: m,
                    target: t,
                    min: lo,
                    max: hi,
                });
            }
        }
        Ok(Self {
            functions,
            targets,
            kind,
        })
    }

    pub fn ordinary(functions: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        Self::new(functions, targets, ConstraintKind::Ordinary)
    }

    pub fn escort(functions: Vec<Vec<f64>>, targets: Vec<f64>, q: DeformationIndex) -> Result<Self> {
        Self::new(functions, targets, ConstraintKind::Escort(q))
    }

    /// No moment constraints, only normalization.
    pub fn unconstrained(kind: ConstraintKind) -> Self {
        Self {
            functions: Vec::new(),
            targets: Vec::new(),
            kind,
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn functions(&self) -> &[Vec<f64>] {
        &self.functions
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    /// Same functions, new targets.
    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Self> {
        Self::new(self.functions.clone(), targets, self.kind)
    }

    /// Same functions and targets, different kind.
    pub fn with_kind(&self, kind: ConstraintKind) -> Self {
        Self { kind, ..self.clone() }
    }

    /// Length check against a partition plus the strict-interior
    /// feasibility test over cells of positive weight.
    pub fn check_against(&self, partition: &WeightedPartition) -> Result<()> {
        for f in &self.functions {
            if f.len() != partition.len() {
                return Err(Error::LengthMismatch {
                    expected: partition.len(),
                    found: f.len(),
                });
            }
        }
        for (m, (f, &t)) in self.functions.iter().zip(&self.targets).enumerate() {
            let (lo, hi) = min_max(
                f.iter()
                    .zip(partition.weights())
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(&v, _)| v),
            );
            if !(t > lo && t < hi) {
                return Err(Error::Infeasible {
                    constraint: m,
                    target: t,
                    min: lo,
                    max: hi,
                });
            }
        }
        Ok(())
    }

    /// `sum_m beta_m (u_m(k) - shift_m)` for every cell.
    pub(crate) fn weighted_sum(&self, beta: &[f64], shift: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for ((f, &b), &s) in self.functions.iter().zip(beta).zip(shift) {
            for (o, &v) in out.iter_mut().zip(f) {
                *o += b * (v - s);
            }
        }
        out
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Tolerance and iteration cap shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Infinity-norm bound on the moment residual.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

/// Maximum-entropy density with its multipliers and diagnostics.
#[derive(Debug, Clone)]
pub struct GibbsSolution {
    pub beta: Vec<f64>,
    pub log_z: f64,
    pub density: DensityVector,
    pub achieved_moments: Vec<f64>,
    /// Shannon entropy of `density` against the reference measure.
    pub entropy: f64,
    /// `entropy - (ln Z + sum beta_m <u_m>)`.
    pub max_entropy_residual: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// `ln Z(beta) = ln sum_k exp(-sum_m beta_m u_m(k)) mu_k`.
pub fn partition_function(beta: &[f64], constraints: &ConstraintSet, partition: &WeightedPartition) -> Result<f64> {
    if beta.len() != constraints.len() {
        return Err(Error::LengthMismatch {
            expected: constraints.len(),
            found: beta.len(),
        });
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidArgument("multipliers must be finite".into()));
    }
    for f in constraints.functions() {
        if f.len() != partition.len() {
            return Err(Error::LengthMismatch {
                expected: partition.len(),
                found: f.len(),
            });
        }
    }
    let exponents = exponents(beta, constraints, partition.len());
    log_sum_exp_weighted(&exponents, partition.weights()).ok_or(Error::DegenerateMeasure)
}

fn exponents(beta: &[f64], constraints: &ConstraintSet, n: usize) -> Vec<f64> {
    let zero = vec![0.0; beta.len()];
    constraints
        .weighted_sum(beta, &zero, n)
        .into_iter()
        .map(|s| -s)
        .collect()
}

struct DualPoint {
    log_z: f64,
    masses: Vec<f64>,
    moments: Vec<f64>,
    objective: f64,
}

fn dual_point(beta: &[f64], constraints: &ConstraintSet, partition: &WeightedPartition) -> Result<DualPoint> {
    let ex = exponents(beta, constraints, partition.len());
    let log_z = log_sum_exp_weighted(&ex, partition.weights()).ok_or(Error::DegenerateMeasure)?;
    let masses: Vec<f64> = ex
        .iter()
        .zip(partition.weights())
        .map(|(&e, &w)| if w > 0.0 { (e - log_z).exp() * w } else { 0.0 })
        .collect();
    let moments: Vec<f64> = constraints
        .functions()
        .iter()
        .map(|f| f.iter().zip(&masses).map(|(u, p)| u * p).sum())
        .collect();
    let objective = log_z + beta.iter().zip(constraints.targets()).map(|(b, t)| b * t).sum::<f64>();
    Ok(DualPoint {
        log_z,
        masses,
        moments,
        objective,
    })
}

fn covariance(constraints: &ConstraintSet, masses: &[f64], means: &[f64]) -> DMatrix<f64> {
    let m = constraints.len();
    let f = constraints.functions();
    DMatrix::from_fn(m, m, |i, j| {
        f[i].iter()
            .zip(&f[j])
            .zip(masses)
            .map(|((a, b), p)| p * (a - means[i]) * (b - means[j]))
            .sum()
    })
}

/// Maximizes Shannon entropy relative to the partition's weights subject to
/// ordinary expectation constraints.
pub fn solve_maxent(
    constraints: &ConstraintSet,
    partition: Arc<WeightedPartition>,
    options: SolverOptions,
) -> Result<GibbsSolution> {
    if constraints.kind() != ConstraintKind::Ordinary {
        return Err(Error::InvalidArgument(
            "the classical solver takes ordinary expectation constraints".into(),
        ));
    }
    constraints.check_against(&partition)?;

    let m = constraints.len();
    let mut beta = vec![0.0; m];
    let mut point = dual_point(&beta, constraints, &partition)?;
    let mut iterations = 0;

    loop {
        let grad: Vec<f64> = constraints
            .targets()
            .iter()
            .zip(&point.moments)
            .map(|(t, e)| t - e)
            .collect();
        let residual = max_abs(&grad);
        if residual <= options.tolerance {
            break;
        }
        if iterations >= options.max_iterations {
            return Err(Error::NonConvergence {
                iterations,
                residual,
                residuals: grad.iter().map(|g| -g).collect(),
            });
        }
        iterations += 1;

        let hessian = covariance(constraints, &point.masses, &point.moments);
        let g = DVector::from_vec(grad.clone());
        let step = hessian
            .clone()
            .lu()
            .solve(&(-&g))
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .unwrap_or_else(|| -&g);

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + t * s).collect();
            let next = dual_point(&trial, constraints, &partition)?;
            let next_res = max_abs(
                &constraints
                    .targets()
                    .iter()
                    .zip(&next.moments)
                    .map(|(t, e)| t - e)
                    .collect::<Vec<_>>(),
            );
            if next.objective < point.objective || next_res < residual {
                accepted = Some((trial, next));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((b, p)) => {
                beta = b;
                point = p;
            }
            None => {
                return Err(Error::NonConvergence {
                    iterations,
                    residual,
                    residuals: grad.iter().map(|g| -g).collect(),
                })
            }
        }
    }

    let values = point
        .masses
        .iter()
        .zip(partition.weights())
        .map(|(&p, &w)| if w > 0.0 { p / w } else { 0.0 })
        .collect();
    let density = DensityVector::renormalized(values, Arc::clone(&partition))?.0;
    let entropy = shannon_entropy(&density);
    let residual_norm = max_abs(
        &constraints
            .targets()
            .iter()
            .zip(&point.moments)
            .map(|(t, e)| t - e)
            .collect::<Vec<_>>(),
    );
    Ok(GibbsSolution {
        max_entropy_residual: entropy - point.objective,
        beta,
        log_z: point.log_z,
        density,
        achieved_moments: point.moments,
        entropy,
        residual_norm,
        iterations,
    })
}

/// Finite-difference checks of the two thermodynamic relations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoResiduals {
    /// `d ln Z / d beta_m + <u_m>`.
    pub grad_residual: Vec<f64>,
    /// `d S / d <u_m> - beta_m`.
    pub sensitivity_residual: Vec<f64>,
    pub fd_step: f64,
}

/// Central differences of `ln Z` in `beta`, and of the maximum entropy in the
/// targets (each perturbed target is re-solved). If a perturbed target is
/// infeasible the step is shrunk tenfold once.
pub fn thermo_residuals(
    solution: &GibbsSolution,
    constraints: &ConstraintSet,
    partition: Arc<WeightedPartition>,
    fd_step: f64,
    options: SolverOptions,
) -> Result<ThermoResiduals> {
    if !(fd_step > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let m = constraints.len();
    let mut grad_residual = Vec::with_capacity(m);
    for j in 0..m {
        let mut hi = solution.beta.clone();
        let mut lo = solution.beta.clone();
        hi[j] += fd_step;
        lo[j] -= fd_step;
        let d = (partition_function(&hi, constraints, &partition)? - partition_function(&lo, constraints, &partition)?)
            / (2.0 * fd_step);
        grad_residual.push(d + constraints.targets()[j]);
    }

    let mut step = fd_step;
    let sensitivity_residual = match sensitivities(solution, constraints, &partition, step, options) {
        Err(Error::Infeasible { .. }) => {
            step /= 10.0;
            sensitivities(solution, constraints, &partition, step, options)?
        }
        other => other?,
    };
    Ok(ThermoResiduals {
        grad_residual,
        sensitivity_residual,
        fd_step: step,
    })
}

fn sensitivities(
    solution: &GibbsSolution,
    constraints: &ConstraintSet,
    partition: &Arc<WeightedPartition>,
    h: f64,
    options: SolverOptions,
) -> Result<Vec<f64>> {
    (0..constraints.len())
        .map(|j| {
            let mut hi = constraints.targets().to_vec();
            let mut lo = hi.clone();
            hi[j] += h;
            lo[j] -= h;
            let s_hi = solve_maxent(&constraints.with_targets(hi)?, Arc::clone(partition), options)?.entropy;
            let s_lo = solve_maxent(&constraints.with_targets(lo)?, Arc::clone(partition), options)?.entropy;
            Ok((s_hi - s_lo) / (2.0 * h) - solution.beta[j])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{induced_pmf, uniform_partition, ReferenceMeasure};

    fn counting(n: usize) -> Arc<WeightedPartition> {
        Arc::new(uniform_partition(n, ReferenceMeasure::Counting).unwrap())
    }

    fn dice(target: f64) -> ConstraintSet {
        ConstraintSet::ordinary(vec![(1..=6).map(f64::from).collect()], vec![target]).unwrap()
    }

    #[test]
    fn log_partition_examples() {
        let u = uniform_partition(5, ReferenceMeasure::UniformProbability).unwrap();
        let none = ConstraintSet::unconstrained(ConstraintKind::Ordinary);
        assert!(partition_function(&[], &none, &u).unwrap().abs() < 1e-15);
        assert!((partition_function(&[], &none, &counting(7)).unwrap() - 7f64.ln()).abs() < 1e-15);
        let z = partition_function(&[0.5], &dice(3.5), &counting(6)).unwrap().exp();
        assert!((z - 1.464_747_611_260_881).abs() < 1e-14);
    }

    #[test]
    fn partition_function_checks_lengths() {
        assert!(partition_function(&[0.5, 0.1], &dice(3.5), &counting(6)).is_err());
        assert!(partition_function(&[0.5], &dice(3.5), &counting(5)).is_err());
        assert!(partition_function(&[f64::NAN], &dice(3.5), &counting(6)).is_err());
    }

    #[test]
    fn unconstrained_is_uniform() {
        let sol = solve_maxent(
            &ConstraintSet::unconstrained(ConstraintKind::Ordinary),
            counting(5),
            SolverOptions::default(),
        )
        .unwrap();
        assert!((sol.entropy - 5f64.ln()).abs() < 1e-14);
        assert!(induced_pmf(&sol.density)
            .masses()
            .iter()
            .all(|m| (m - 0.2).abs() < 1e-15));
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn two_point_closed_form() {
        let c = ConstraintSet::ordinary(vec![vec![0.0, 1.0]], vec![0.3]).unwrap();
        let sol = solve_maxent(&c, counting(2), SolverOptions::default()).unwrap();
        assert!((sol.beta[0] - (7.0f64 / 3.0).ln()).abs() < 1e-10);
        let pmf = induced_pmf(&sol.density);
        assert!((pmf.masses()[0] - 0.7).abs() < 1e-10);
        assert!(sol.max_entropy_residual.abs() < 1e-12);
    }

    #[test]
    fn dice_matches_reference_value() {
        let sol = solve_maxent(&dice(4.5), counting(6), SolverOptions::default()).unwrap();
        assert!((sol.beta[0] + 0.371_048_938_081_033_34).abs() < 1e-10);
        assert!(sol.residual_norm <= 1e-10);
    }

    #[test]
    fn boundary_targets_are_rejected() {
        let c = ConstraintSet::ordinary(vec![vec![0.0, 1.0]], vec![1.0]).unwrap();
        assert!(matches!(
            solve_maxent(&c, counting(2), SolverOptions::default()),
            Err(Error::Infeasible { .. })
        ));
        assert!(ConstraintSet::ordinary(vec![vec![0.0, 1.0]], vec![1.5]).is_err());
    }

    #[test]
    fn null_cells_do_not_count_for_feasibility() {
        let part = Arc::new(WeightedPartition::from_weights(vec![1.0, 1.0, 0.0]).unwrap());
        let c = ConstraintSet::ordinary(vec![vec![0.0, 1.0, 5.0]], vec![2.0]).unwrap();
        assert!(matches!(
            solve_maxent(&c, part, SolverOptions::default()),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let opts = SolverOptions {
            tolerance: 1e-10,
            max_iterations: 1,
        };
        match solve_maxent(&dice(5.9), counting(6), opts) {
            Err(Error::NonConvergence { residuals, .. }) => assert_eq!(residuals.len(), 1),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn thermo_residuals_small_for_dice() {
        let part = counting(6);
        let c = dice(4.5);
        let sol = solve_maxent(&c, Arc::clone(&part), SolverOptions::default()).unwrap();
        let r = thermo_residuals(&sol, &c, part, 1e-4, SolverOptions::default()).unwrap();
        assert!(max_abs(&r.grad_residual) < 1e-6);
        assert!(max_abs(&r.sensitivity_residual) < 1e-6);
    }

    #[test]
    fn thermo_residuals_empty_without_constraints() {
        let part = counting(3);
        let c = ConstraintSet::unconstrained(ConstraintKind::Ordinary);
        let sol = solve_maxent(&c, Arc::clone(&part), SolverOptions::default()).unwrap();
        let r = thermo_residuals(&sol, &c, part, 1e-4, SolverOptions::default()).unwrap();
        assert!(r.grad_residual.is_empty() && r.sensitivity_residual.is_empty());
    }

    #[test]
    fn sensitivity_step_shrinks_near_the_boundary() {
        let part = counting(2);
        let c = ConstraintSet::ordinary(vec![vec![0.0, 1.0]], vec![0.99995]).unwrap();
        let sol = solve_maxent(&c, Arc::clone(&part), SolverOptions::default()).unwrap();
        let r = thermo_residuals(&sol, &c, part, 1e-4, SolverOptions::default()).unwrap();
        assert_eq!(r.fd_step, 1e-5);
    }

    #[test]
    fn two_constraints_on_a_grid() {
        let part = Arc::new(uniform_partition(50, ReferenceMeasure::Lebesgue { a: -3.0, b: 3.0 }).unwrap());
        let xs: Vec<f64> = part
            .cells()
            .iter()
            .map(|c| 0.5 * (c.left.unwrap() + c.right.unwrap()))
            .collect();
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let c = ConstraintSet::ordinary(vec![xs, sq], vec![0.2, 1.0]).unwrap();
        let sol = solve_maxent(&c, part, SolverOptions::default()).unwrap();
        assert!(sol.residual_norm <= 1e-10);
        assert!(sol.max_entropy_residual.abs() < 1e-10);
    }
}
