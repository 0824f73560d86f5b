//! Tsallis maximum entropy under normalized q-expectation (escort) constraints.
//!
//! The maximizer has the self-referential form
//!
//! ```text
//! p(x) = e_q( -(integral p^q dmu)^-1 sum_m beta_m (u_m(x) - <<u_m>>_q) ) / Zbar_q
//! ```
//!
//! which is solved with two nested loops: an inner damped fixed point on the
//! q-mass `integral p^q dmu` for fixed multipliers, and an outer Newton
//! iteration (finite-difference Jacobian) on `beta` that drives the escort
//! moments to their targets.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::{power_moment, tsallis_entropy};
use crate::maxent_shannon::{solve_maxent, ConstraintKind, ConstraintSet, SolverOptions};
use crate::measure::{
    induced_pmf, uniform_partition, DensityVector, ProbabilityVector, ReferenceMeasure, WeightedPartition,
};
use crate::numeric::max_abs;
use crate::qcalc::{q_exp, q_log, q_log_unchecked, DeformationIndex};

/// Escort weights `p_k^q mu_k / sum_j p_j^q mu_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EscortView {
    pub q: DeformationIndex,
    pub weights: Vec<f64>,
    /// `integral p^q dmu`.
    pub q_mass: f64,
}

fn escort_exponent(q: DeformationIndex) -> f64 {
    if q.is_classical() {
        1.0
    } else {
        q.value()
    }
}

pub fn escort_view(p: &DensityVector, q: DeformationIndex) -> EscortView {
    let t = escort_exponent(q);
    let raw: Vec<f64> = p
        .iter_weighted()
        .map(|(v, w)| {
            if v > 0.0 && w > 0.0 {
                (t * v.ln()).exp() * w
            } else {
                0.0
            }
        })
        .collect();
    let q_mass: f64 = raw.iter().sum();
    EscortView {
        q,
        weights: raw.into_iter().map(|r| r / q_mass).collect(),
        q_mass,
    }
}

/// `<<u>>_q`, the expectation of `u` under the escort weights of `p`.
pub fn escort_expectation(p: &DensityVector, u: &[f64], q: DeformationIndex) -> Result<f64> {
    if u.len() != p.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            found: u.len(),
        });
    }
    let view = escort_view(p, q);
    Ok(view.weights.iter().zip(u).map(|(w, x)| w * x).sum())
}

fn escort_index(constraints: &ConstraintSet) -> Result<DeformationIndex> {
    match constraints.kind() {
        ConstraintKind::Escort(q) => Ok(q),
        ConstraintKind::Ordinary => Err(Error::InvalidArgument(
            "the Tsallis solver takes escort constraints".into(),
        )),
    }
}

/// Evaluates the q-exponential maximum-entropy form for given multipliers
/// and a guess of the q-mass, centred on the constraint targets. Returns the
/// normalized density and `Zbar_q = sum_k e_q(..) mu_k`.
pub fn q_maxent_density(
    beta: &[f64],
    q_mass_guess: f64,
    constraints: &ConstraintSet,
    partition: Arc<WeightedPartition>,
) -> Result<(DensityVector, f64)> {
    let q = escort_index(constraints)?;
    if beta.len() != constraints.len() {
        return Err(Error::LengthMismatch {
            expected: constraints.len(),
            found: beta.len(),
        });
    }
    if !(q_mass_guess > 0.0 && q_mass_guess.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "q-mass guess must be positive, got {q_mass_guess}"
        )));
    }
    for f in constraints.functions() {
        if f.len() != partition.len() {
            return Err(Error::LengthMismatch {
                expected: partition.len(),
                found: f.len(),
            });
        }
    }
    let centred = constraints.weighted_sum(beta, constraints.targets(), partition.len());
    let mut values = Vec::with_capacity(partition.len());
    let mut zbar = 0.0;
    for (k, (s, &w)) in centred.iter().zip(partition.weights()).enumerate() {
        if w == 0.0 {
            values.push(0.0);
            continue;
        }
        let e = q_exp(-s / q_mass_guess, q);
        if !e.is_finite() {
            return Err(Error::Pole { cell: k });
        }
        zbar += e * w;
        values.push(e);
    }
    if !(zbar > 0.0) {
        return Err(Error::EmptySupport);
    }
    values.iter_mut().for_each(|v| *v /= zbar);
    let density = DensityVector::renormalized(values, partition)?.0;
    Ok((density, zbar))
}

/// Controls for [`solve_tsallis_maxent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsallisOptions {
    /// Infinity-norm bound on the escort-moment residual.
    pub tolerance: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Relative tolerance of the inner q-mass fixed point.
    pub inner_tolerance: f64,
    /// Weight of the new iterate in the inner update.
    pub damping: f64,
}

impl Default for TsallisOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_outer: 200,
            max_inner: 10_000,
            inner_tolerance: 1e-12,
            damping: 0.5,
        }
    }
}

/// A Tsallis maximum-entropy solution and its identity checks.
#[derive(Debug, Clone)]
pub struct TsallisSolution {
    pub q: DeformationIndex,
    /// True Lagrange multipliers.
    pub beta: Vec<f64>,
    /// `beta_m / integral p^q dmu`.
    pub beta_q: Vec<f64>,
    pub zbar: f64,
    /// `integral p^q dmu` of the returned density.
    pub q_mass: f64,
    pub density: DensityVector,
    pub escort_moments: Vec<f64>,
    pub entropy_q: f64,
    pub identity_residuals: BTreeMap<String, f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Whether the classical solver produced this solution.
    pub classical: bool,
    pub warnings: Vec<String>,
}

struct InnerState {
    density: DensityVector,
    zbar: f64,
    q_mass: f64,
    moments: Vec<f64>,
    iterations: usize,
}

fn inner_solve(
    beta: &[f64],
    q_mass_start: f64,
    constraints: &ConstraintSet,
    partition: &Arc<WeightedPartition>,
    q: DeformationIndex,
    options: &TsallisOptions,
) -> Result<InnerState> {
    let mut q_mass = q_mass_start;
    let mut gap = f64::INFINITY;
    for i in 0..options.max_inner {
        let (density, zbar) = q_maxent_density(beta, q_mass, constraints, Arc::clone(partition))?;
        let fresh = power_moment(&density, q.value());
        gap = (fresh - q_mass).abs();
        if gap <= options.inner_tolerance * q_mass {
            let moments = escort_moments(&density, constraints, q);
            return Ok(InnerState {
                density,
                zbar,
                q_mass,
                moments,
                iterations: i + 1,
            });
        }
        q_mass = (1.0 - options.damping) * q_mass + options.damping * fresh;
        if !(q_mass > 0.0 && q_mass.is_finite()) {
            break;
        }
    }
    Err(Error::InnerNonConvergence {
        iterations: options.max_inner,
        gap,
        damping: options.damping,
    })
}

fn escort_moments(density: &DensityVector, constraints: &ConstraintSet, q: DeformationIndex) -> Vec<f64> {
    let view = escort_view(density, q);
    constraints
        .functions()
        .iter()
        .map(|f| view.weights.iter().zip(f).map(|(w, u)| w * u).sum())
        .collect()
}

fn moment_gap(moments: &[f64], targets: &[f64]) -> Vec<f64> {
    moments.iter().zip(targets).map(|(m, t)| m - t).collect()
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Maximizes Tsallis entropy relative to the partition's weights under
/// escort constraints. Inside the classical band the problem is handed to
/// [`solve_maxent`] with ordinary constraints.
///
/// The primary method iterates `q_mass` to its fixed point for each trial
/// `beta`. When that fails, typically because the target lies past a fold of
/// the `beta -> q_mass` branch near the q-exponential cutoff, the moments are
/// matched in the ratio `beta / q_mass`, on which the density depends alone.
pub fn solve_tsallis_maxent(
    constraints: &ConstraintSet,
    partition: Arc<WeightedPartition>,
    options: TsallisOptions,
) -> Result<TsallisSolution> {
    let q = escort_index(constraints)?;
    if !(options.damping > 0.0 && options.damping <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "damping must lie in (0, 1], got {}",
            options.damping
        )));
    }
    constraints.check_against(&partition)?;
    if q.is_classical() {
        return delegate_classical(constraints, partition, q, options);
    }

    match solve_double_loop(constraints, &partition, q, &options) {
        Ok(sol) => Ok(sol),
        Err(primary @ (Error::InnerNonConvergence { .. } | Error::NonConvergence { .. })) => {
            match solve_in_ratio(constraints, &partition, q, &options) {
                Ok(mut sol) => {
                    let note = format!("fixed-point iteration failed ({primary}); solved in beta / q_mass");
                    log::warn!("{note}");
                    sol.warnings.push(note);
                    Ok(sol)
                }
                Err(_) => Err(primary),
            }
        }
        Err(e) => Err(e),
    }
}

fn solve_double_loop(
    constraints: &ConstraintSet,
    partition: &Arc<WeightedPartition>,
    q: DeformationIndex,
    options: &TsallisOptions,
) -> Result<TsallisSolution> {
    let beta = vec![0.0; constraints.len()];
    let uniform = DensityVector::uniform(Arc::clone(partition));
    let state = inner_solve(
        &beta,
        power_moment(&uniform, q.value()),
        constraints,
        partition,
        q,
        options,
    )?;
    let mut inner_total = state.iterations;
    let (beta, state, outer) = newton(beta, state, constraints, options, |b, warm| {
        let s = inner_solve(b, warm, constraints, partition, q, options)?;
        inner_total += s.iterations;
        Ok(s)
    })?;
    Ok(assemble(q, beta, state, constraints, outer, inner_total, false))
}

fn solve_in_ratio(
    constraints: &ConstraintSet,
    partition: &Arc<WeightedPartition>,
    q: DeformationIndex,
    options: &TsallisOptions,
) -> Result<TsallisSolution> {
    let evaluate = |gamma: &[f64], _: f64| -> Result<InnerState> {
        let (density, zbar) = q_maxent_density(gamma, 1.0, constraints, Arc::clone(partition))?;
        let q_mass = power_moment(&density, q.value());
        let moments = escort_moments(&density, constraints, q);
        Ok(InnerState {
            density,
            zbar,
            q_mass,
            moments,
            iterations: 0,
        })
    };
    let gamma = vec![0.0; constraints.len()];
    let state = evaluate(&gamma, 1.0)?;
    let (gamma, state, outer) = newton(gamma, state, constraints, options, evaluate)?;
    let beta = gamma.iter().map(|g| g * state.q_mass).collect();
    Ok(assemble(q, beta, state, constraints, outer, 0, false))
}

/// Newton iteration on the escort-moment residual with a finite-difference
/// Jacobian and step halving. `evaluate` receives the trial parameters and
/// the current `q_mass` as a warm start.
fn newton(
    mut params: Vec<f64>,
    mut state: InnerState,
    constraints: &ConstraintSet,
    options: &TsallisOptions,
    mut evaluate: impl FnMut(&[f64], f64) -> Result<InnerState>,
) -> Result<(Vec<f64>, InnerState, usize)> {
    let mut outer = 0;
    loop {
        let gap = moment_gap(&state.moments, constraints.targets());
        let residual = max_abs(&gap);
        if residual <= options.tolerance {
            return Ok((params, state, outer));
        }
        let iterations = outer;
        let stuck = move |gap: Vec<f64>| Error::NonConvergence {
            iterations,
            residual,
            residuals: gap,
        };
        if outer >= options.max_outer {
            return Err(stuck(gap));
        }
        outer += 1;

        let jacobian = fd_jacobian(&params, &state, &mut evaluate)?;
        let step = match jacobian
            .lu()
            .solve(&(-DVector::from_vec(gap.clone())))
            .filter(|s| s.iter().all(|v| v.is_finite()))
        {
            Some(step) => step,
            None => return Err(stuck(gap)),
        };

        // Trials that cut off cells flatten the moment map, so they are only
        // a fallback when no support-preserving trial improves the residual.
        let current = sum_sq(&gap);
        let support = support_size(&state.density);
        let mut t = 1.0;
        let mut accepted = None;
        let mut fallback = None;
        for _ in 0..60 {
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(b, s)| b + t * s).collect();
            match evaluate(&trial, state.q_mass) {
                Ok(next) => {
                    if sum_sq(&moment_gap(&next.moments, constraints.targets())) < current {
                        if support_size(&next.density) >= support {
                            accepted = Some((trial, next));
                            break;
                        }
                        if fallback.is_none() {
                            fallback = Some((trial, next));
                        }
                    }
                }
                Err(Error::Pole { .. }) | Err(Error::EmptySupport) => {}
                Err(e) => return Err(e),
            }
            t *= 0.5;
        }
        match accepted.or(fallback) {
            Some((p, s)) => {
                params = p;
                state = s;
            }
            None => return Err(stuck(gap)),
        }
    }
}

fn support_size(density: &DensityVector) -> usize {
    density.values().iter().filter(|&&v| v > 0.0).count()
}

fn fd_jacobian(
    params: &[f64],
    state: &InnerState,
    evaluate: &mut impl FnMut(&[f64], f64) -> Result<InnerState>,
) -> Result<DMatrix<f64>> {
    let m = params.len();
    let mut jac = DMatrix::zeros(m, m);
    for j in 0..m {
        let h = 1e-6 * params[j].abs().max(1.0);
        let mut shifted = |delta: f64| -> Result<Option<Vec<f64>>> {
            let mut b = params.to_vec();
            b[j] += delta;
            match evaluate(&b, state.q_mass) {
                Ok(s) => Ok(Some(s.moments)),
                Err(Error::Pole { .. }) | Err(Error::EmptySupport) => Ok(None),
                Err(e) => Err(e),
            }
        };
        let column: Vec<f64> = match (shifted(h)?, shifted(-h)?) {
            (Some(hi), Some(lo)) => hi.iter().zip(&lo).map(|(a, b)| (a - b) / (2.0 * h)).collect(),
            (Some(hi), None) => hi.iter().zip(&state.moments).map(|(a, b)| (a - b) / h).collect(),
            (None, Some(lo)) => state.moments.iter().zip(&lo).map(|(a, b)| (a - b) / h).collect(),
            (None, None) => return Err(Error::Pole { cell: usize::MAX }),
        };
        for (i, v) in column.into_iter().enumerate() {
            jac[(i, j)] = v;
        }
    }
    Ok(jac)
}

fn delegate_classical(
    constraints: &ConstraintSet,
    partition: Arc<WeightedPartition>,
    q: DeformationIndex,
    options: TsallisOptions,
) -> Result<TsallisSolution> {
    let ordinary = constraints.with_kind(ConstraintKind::Ordinary);
    let sol = solve_maxent(
        &ordinary,
        partition,
        SolverOptions {
            tolerance: options.tolerance,
            max_iterations: options.max_outer,
        },
    )?;
    let shift: f64 = sol.beta.iter().zip(constraints.targets()).map(|(b, t)| b * t).sum();
    let state = InnerState {
        zbar: (sol.log_z + shift).exp(),
        q_mass: power_moment(&sol.density, escort_exponent(q)),
        moments: sol.achieved_moments.clone(),
        density: sol.density,
        iterations: 0,
    };
    Ok(assemble(q, sol.beta, state, constraints, sol.iterations, 0, true))
}

fn assemble(
    q: DeformationIndex,
    beta: Vec<f64>,
    state: InnerState,
    constraints: &ConstraintSet,
    outer: usize,
    inner: usize,
    classical: bool,
) -> TsallisSolution {
    let exponent = escort_exponent(q);
    let q_mass = power_moment(&state.density, exponent);
    let beta_q: Vec<f64> = beta.iter().map(|b| b / q_mass).collect();
    let entropy_q = tsallis_entropy(&state.density, q);
    let lnq_zbar = q_log_unchecked(state.zbar, q);
    let zbar_power = if classical {
        1.0
    } else {
        (q.one_minus() * state.zbar.ln()).exp()
    };

    let mut residuals = BTreeMap::new();
    residuals.insert(
        "escort_moments".to_string(),
        max_abs(&moment_gap(&state.moments, constraints.targets())),
    );
    residuals.insert("q_mass_fixed_point".to_string(), (q_mass - state.q_mass).abs());
    residuals.insert("q_mass_vs_zbar".to_string(), (q_mass - zbar_power).abs());
    residuals.insert("entropy_vs_lnq_zbar".to_string(), (entropy_q - lnq_zbar).abs());
    residuals.insert(
        "beta_q_bookkeeping".to_string(),
        beta_q
            .iter()
            .zip(&beta)
            .map(|(bq, b)| (bq * q_mass - b).abs())
            .fold(0.0, f64::max),
    );

    let mut warnings = Vec::new();
    let cut: Vec<usize> = state
        .density
        .iter_weighted()
        .enumerate()
        .filter(|(_, (v, w))| *w > 0.0 && *v == 0.0)
        .map(|(k, _)| k)
        .collect();
    if !cut.is_empty() {
        warnings.push(format!(
            "q-exponential cutoff removed {} cell(s) of positive weight from the support: {:?}",
            cut.len(),
            cut
        ));
        log::warn!("{}", warnings[0]);
    }

    TsallisSolution {
        q,
        beta,
        beta_q,
        zbar: state.zbar,
        q_mass,
        density: state.density,
        escort_moments: state.moments,
        entropy_q,
        identity_residuals: residuals,
        outer_iterations: outer,
        inner_iterations: inner,
        classical,
        warnings,
    }
}

/// Thermodynamic checks of a Tsallis solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TsallisThermo {
    /// `ln_q Zbar_q - sum_m beta_m <<u_m>>_q`.
    pub lnq_zq: f64,
    /// `Z_q` recovered from `lnq_zq` through the q-exponential, when defined.
    pub zq: Option<f64>,
    /// `|ln_q(Z_q) - lnq_zq|`.
    pub lnq_zq_residual: f64,
    /// `d ln_q Z_q / d beta_m + <<u_m>>_q`.
    pub grad_residual: Vec<f64>,
    /// `d S_q / d <<u_m>>_q - beta_m`.
    pub sensitivity_residual: Vec<f64>,
    pub fd_step: f64,
}

/// Evaluates `ln_q Z_q` and checks both thermodynamic relations by
/// re-solving at perturbed targets. Moving target `j` by `+-h` moves the
/// solved multipliers along the solution family; the `beta`-gradient of
/// `ln_q Z_q` follows from the target Jacobian of `beta`.
pub fn tsallis_thermo(
    solution: &TsallisSolution,
    constraints: &ConstraintSet,
    partition: Arc<WeightedPartition>,
    fd_step: f64,
    options: TsallisOptions,
) -> Result<TsallisThermo> {
    if !(fd_step > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let q = solution.q;
    let lnq_zq = lnq_zq(solution.zbar, &solution.beta, constraints.targets(), q);
    let zq = zq_from_lnq(lnq_zq, q);
    let lnq_zq_residual = match zq {
        Some(z) => (q_log_unchecked(z, q) - lnq_zq).abs(),
        None => f64::NAN,
    };

    let mut step = fd_step;
    let (grad_residual, sensitivity_residual) =
        match target_sensitivities(solution, constraints, &partition, step, options) {
            Err(Error::Infeasible { .. }) => {
                step /= 10.0;
                target_sensitivities(solution, constraints, &partition, step, options)?
            }
            other => other?,
        };
    Ok(TsallisThermo {
        lnq_zq,
        zq,
        lnq_zq_residual,
        grad_residual,
        sensitivity_residual,
        fd_step: step,
    })
}

fn lnq_zq(zbar: f64, beta: &[f64], targets: &[f64], q: DeformationIndex) -> f64 {
    let shift: f64 = beta.iter().zip(targets).map(|(b, t)| b * t).sum();
    q_log_unchecked(zbar, q) - shift
}

// Inverse of ln_q on its range: Z = e_q(L) when 1 + (1-q) L > 0.
fn zq_from_lnq(lnq: f64, q: DeformationIndex) -> Option<f64> {
    if q.is_classical() {
        return Some(lnq.exp());
    }
    let base = 1.0 + q.one_minus() * lnq;
    (base > 0.0).then(|| q_exp(lnq, q))
}

fn target_sensitivities(
    solution: &TsallisSolution,
    constraints: &ConstraintSet,
    partition: &Arc<WeightedPartition>,
    h: f64,
    options: TsallisOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = constraints.len();
    if m == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let q = solution.q;
    let mut beta_jac = DMatrix::zeros(m, m);
    let mut dl = DVector::zeros(m);
    let mut sensitivity = Vec::with_capacity(m);
    for j in 0..m {
        let mut hi = constraints.targets().to_vec();
        let mut lo = hi.clone();
        hi[j] += h;
        lo[j] -= h;
        let c_hi = constraints.with_targets(hi)?;
        let c_lo = constraints.with_targets(lo)?;
        let s_hi = solve_tsallis_maxent(&c_hi, Arc::clone(partition), options)?;
        let s_lo = solve_tsallis_maxent(&c_lo, Arc::clone(partition), options)?;
        let l_hi = lnq_zq(s_hi.zbar, &s_hi.beta, c_hi.targets(), q);
        let l_lo = lnq_zq(s_lo.zbar, &s_lo.beta, c_lo.targets(), q);
        dl[j] = (l_hi - l_lo) / (2.0 * h);
        for i in 0..m {
            beta_jac[(i, j)] = (s_hi.beta[i] - s_lo.beta[i]) / (2.0 * h);
        }
        sensitivity.push((s_hi.entropy_q - s_lo.entropy_q) / (2.0 * h) - solution.beta[j]);
    }
    // dL/du = J^T dL/dbeta with J = dbeta/du.
    let grad_beta = beta_jac
        .transpose()
        .lu()
        .solve(&dl)
        .ok_or_else(|| Error::Domain("multiplier Jacobian is singular".into()))?;
    let grad_residual = grad_beta
        .iter()
        .zip(constraints.targets())
        .map(|(g, t)| g + t)
        .collect();
    Ok((grad_residual, sensitivity))
}

/// Discrete-form identities for a probability vector against the uniform
/// probability reference `mu_k = 1/n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteConsistencyReport {
    pub n: usize,
    /// `sum_k P_k ln_q(mu_k / P_k)`.
    pub measure_entropy: f64,
    /// Tsallis entropy of the density `P_k / mu_k`, computed by the functional.
    pub measure_entropy_functional: f64,
    /// `(1 - sum P_k^q) / (q - 1)`.
    pub discrete_entropy: f64,
    /// `sum_k P_k^q`.
    pub power_sum: f64,
    /// `discrete_entropy - n^(q-1) ln_q(n) power_sum`.
    pub shifted_discrete_entropy: f64,
    /// `|measure_entropy - shifted_discrete_entropy|`.
    pub entropy_shift_residual: f64,
    /// `n^(1-q) Zbar^(1-q)` when a partition function is supplied.
    pub predicted_power_sum: Option<f64>,
    /// `|power_sum - predicted_power_sum|`.
    pub power_sum_residual: Option<f64>,
}

/// Checks that the Tsallis entropy relative to the uniform probability
/// measure equals the discrete Tsallis entropy up to a term proportional to
/// `sum P^q`, and, given `Zbar_q` of a maximum-entropy solution, that this
/// sum equals `n^(1-q) Zbar_q^(1-q)`.
pub fn discrete_consistency_report(
    p: &ProbabilityVector,
    q: DeformationIndex,
    zbar: Option<f64>,
) -> Result<DiscreteConsistencyReport> {
    let n = p.len();
    let mu = 1.0 / n as f64;
    let t = escort_exponent(q);
    let support = p.masses().iter().copied().filter(|&m| m > 0.0);

    let measure_entropy: f64 = support.clone().map(|m| m * q_log_unchecked(mu / m, q)).sum();
    let power_sum: f64 = support.clone().map(|m| (t * m.ln()).exp()).sum();
    // Discrete Tsallis entropy as sum P ln_q(1/P); equals (1 - sum P^q)/(q - 1).
    let discrete_entropy: f64 = support.map(|m| m * q_log_unchecked(1.0 / m, q)).sum();
    let n_f = n as f64;
    let coefficient = if q.is_classical() {
        n_f.ln()
    } else {
        ((q.value() - 1.0) * n_f.ln()).exp() * q_log(n_f, q)?
    };
    let shifted = discrete_entropy - coefficient * power_sum;

    let uniform = Arc::new(uniform_partition(n, ReferenceMeasure::UniformProbability)?);
    let density = crate::measure::radon_nikodym(p, uniform)?;
    let functional = tsallis_entropy(&density, q);

    let predicted = zbar.map(|z| {
        if q.is_classical() {
            1.0
        } else {
            (q.one_minus() * (n_f * z).ln()).exp()
        }
    });
    Ok(DiscreteConsistencyReport {
        n,
        measure_entropy,
        measure_entropy_functional: functional,
        discrete_entropy,
        power_sum,
        shifted_discrete_entropy: shifted,
        entropy_shift_residual: (measure_entropy - shifted).abs(),
        predicted_power_sum: predicted,
        power_sum_residual: predicted.map(|s| (power_sum - s).abs()),
    })
}

/// Solutions of the same escort-constrained problem against the counting
/// measure (discrete Tsallis entropy) and the uniform probability measure
/// (measure-theoretic Tsallis entropy).
#[derive(Debug, Clone)]
pub struct MeConsistency {
    pub discrete: TsallisSolution,
    pub measure: TsallisSolution,
    pub discrete_pmf: ProbabilityVector,
    pub measure_pmf: ProbabilityVector,
    /// Largest per-cell difference of the two maximizing pmfs.
    pub max_mass_gap: f64,
    pub report: DiscreteConsistencyReport,
}

pub fn me_consistency(
    functions: Vec<Vec<f64>>,
    targets: Vec<f64>,
    q: DeformationIndex,
    options: TsallisOptions,
) -> Result<MeConsistency> {
    let n = functions
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidArgument("at least one constraint function is needed".into()))?;
    let constraints = ConstraintSet::escort(functions, targets, q)?;
    let counting = Arc::new(uniform_partition(n, ReferenceMeasure::Counting)?);
    let uniform = Arc::new(uniform_partition(n, ReferenceMeasure::UniformProbability)?);
    let discrete = solve_tsallis_maxent(&constraints, counting, options)?;
    let measure = solve_tsallis_maxent(&constraints, uniform, options)?;
    let discrete_pmf = induced_pmf(&discrete.density);
    let measure_pmf = induced_pmf(&measure.density);
    let max_mass_gap = discrete_pmf
        .masses()
        .iter()
        .zip(measure_pmf.masses())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let report = discrete_consistency_report(&measure_pmf, q, Some(measure.zbar))?;
    Ok(MeConsistency {
        discrete,
        measure,
        discrete_pmf,
        measure_pmf,
        max_mass_gap,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(q: f64) -> DeformationIndex {
        DeformationIndex::new(q).unwrap()
    }

    fn counting(n: usize) -> Arc<WeightedPartition> {
        Arc::new(uniform_partition(n, ReferenceMeasure::Counting).unwrap())
    }

    fn two_point(q: f64, target: f64) -> ConstraintSet {
        ConstraintSet::escort(vec![vec![0.0, 1.0]], vec![target], idx(q)).unwrap()
    }

    #[test]
    fn escort_expectation_examples() {
        let part = counting(2);
        let p = DensityVector::new(vec![0.8, 0.2], Arc::clone(&part)).unwrap();
        let u = [0.0, 1.0];
        let ordinary = escort_expectation(&p, &u, idx(1.0)).unwrap();
        assert!((ordinary - 0.2).abs() < 1e-15);
        let e2 = escort_expectation(&p, &u, idx(2.0)).unwrap();
        assert!((e2 - 0.04 / 0.68).abs() < 1e-15);

        let uni = DensityVector::uniform(Arc::new(
            uniform_partition(4, ReferenceMeasure::UniformProbability).unwrap(),
        ));
        let avg = escort_expectation(&uni, &[1.0, 2.0, 3.0, 6.0], idx(0.3)).unwrap();
        assert!((avg - 3.0).abs() < 1e-14);
        assert!(escort_expectation(&uni, &[1.0], idx(0.3)).is_err());
    }

    #[test]
    fn escort_view_weights_sum_to_one() {
        let part = counting(3);
        let p = DensityVector::new(vec![0.5, 0.3, 0.2], part).unwrap();
        let view = escort_view(&p, idx(2.5));
        assert!((view.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(view.q_mass > 0.0);
    }

    #[test]
    fn zero_multipliers_give_uniform_density() {
        let part = counting(4);
        let c = ConstraintSet::escort(vec![vec![0.0, 1.0, 2.0, 3.0]], vec![1.0], idx(0.6)).unwrap();
        let (p, zbar) = q_maxent_density(&[0.0], 0.7, &c, part).unwrap();
        assert_eq!(zbar, 4.0);
        assert!(p.values().iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn classical_band_density_is_gibbs() {
        let part = counting(6);
        let u: Vec<f64> = (1..=6).map(f64::from).collect();
        let q = DeformationIndex::new(1.0 + 1e-9 / 2.0).unwrap();
        let c = ConstraintSet::escort(vec![u.clone()], vec![4.5], q).unwrap();
        let beta = -0.37;
        let (p, _) = q_maxent_density(&[beta], 1.0, &c, Arc::clone(&part)).unwrap();
        let z: f64 = u.iter().map(|x| (-beta * x).exp()).sum();
        for (v, x) in p.values().iter().zip(&u) {
            assert!((v - (-beta * x).exp() / z).abs() < 1e-14);
        }
    }

    // q = 2 on {0, 1}: e_2(x) = 1 / (1 - x), hand-evaluated.
    #[test]
    fn two_point_density_by_hand() {
        let c = two_point(2.0, 0.3);
        let (beta, qm) = (0.4, 0.5);
        let (p, zbar) = q_maxent_density(&[beta], qm, &c, counting(2)).unwrap();
        let e0 = 1.0 / (1.0 - beta * 0.3 / qm);
        let e1 = 1.0 / (1.0 + beta * 0.7 / qm);
        assert!((zbar - (e0 + e1)).abs() < 1e-14);
        assert!((p.values()[0] - e0 / (e0 + e1)).abs() < 1e-14);
    }

    #[test]
    fn cutoff_and_pole_errors() {
        let c = two_point(0.5, 0.3);
        // q < 1: a huge multiplier cuts off the cell with u above target.
        let (p, _) = q_maxent_density(&[10.0], 1.0, &c, counting(2)).unwrap();
        assert_eq!(p.values()[1], 0.0);
        let c2 = two_point(2.0, 0.3);
        assert!(matches!(
            q_maxent_density(&[-10.0], 1.0, &c2, counting(2)),
            Err(Error::Pole { .. })
        ));
        assert!(q_maxent_density(&[0.0], 0.0, &c2, counting(2)).is_err());
    }

    #[test]
    fn unconstrained_solution_is_uniform() {
        let q = idx(2.0);
        let c = ConstraintSet::unconstrained(ConstraintKind::Escort(q));
        let sol = solve_tsallis_maxent(&c, counting(5), TsallisOptions::default()).unwrap();
        assert!((sol.zbar - 5.0).abs() < 1e-12);
        assert!((sol.entropy_q - q_log(5.0, q).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn two_point_q2_closed_form() {
        let sol = solve_tsallis_maxent(&two_point(2.0, 0.3), counting(2), TsallisOptions::default()).unwrap();
        let p1 = 0.3f64.sqrt() / (0.3f64.sqrt() + 0.7f64.sqrt());
        let pmf = induced_pmf(&sol.density);
        assert!((pmf.masses()[1] - p1).abs() < 1e-10, "{:?}", pmf);
        for (name, r) in &sol.identity_residuals {
            assert!(*r < 1e-8, "{name} = {r}");
        }
    }

    #[test]
    fn target_past_the_fold_uses_ratio_parametrization() {
        let sol = solve_tsallis_maxent(&two_point(0.3, 0.05), counting(2), TsallisOptions::default()).unwrap();
        let ratio = (0.05f64 / 0.95).powf(1.0 / 0.3);
        let pmf = induced_pmf(&sol.density);
        assert!((pmf.masses()[1] - ratio / (1.0 + ratio)).abs() < 1e-10, "{:?}", pmf);
        assert!(sol.warnings.iter().any(|w| w.contains("beta / q_mass")));
        for (name, r) in &sol.identity_residuals {
            assert!(*r < 1e-8, "{name} = {r}");
        }
    }

    #[test]
    fn rejects_ordinary_constraints() {
        let c = ConstraintSet::ordinary(vec![vec![0.0, 1.0]], vec![0.3]).unwrap();
        assert!(solve_tsallis_maxent(&c, counting(2), TsallisOptions::default()).is_err());
    }

    #[test]
    fn classical_band_delegates() {
        let q = idx(1.0);
        let c = ConstraintSet::escort(vec![(1..=6).map(f64::from).collect()], vec![4.5], q).unwrap();
        let sol = solve_tsallis_maxent(&c, counting(6), TsallisOptions::default()).unwrap();
        assert!(sol.classical);
        assert!((sol.beta[0] + 0.371_048_938_081_033_34).abs() < 1e-10);
        for (name, r) in &sol.identity_residuals {
            assert!(*r < 1e-10, "{name} = {r}");
        }
    }

    #[test]
    fn discrete_report_uniform() {
        let q = idx(2.0);
        let r = discrete_consistency_report(&ProbabilityVector::uniform(4).unwrap(), q, None).unwrap();
        assert!(r.measure_entropy.abs() < 1e-15);
        assert!(r.entropy_shift_residual < 1e-15);
        assert!(r.power_sum_residual.is_none());
    }

    #[test]
    fn thermo_without_constraints() {
        let q = idx(2.0);
        let c = ConstraintSet::unconstrained(ConstraintKind::Escort(q));
        let part = counting(3);
        let sol = solve_tsallis_maxent(&c, Arc::clone(&part), TsallisOptions::default()).unwrap();
        let t = tsallis_thermo(&sol, &c, part, 1e-4, TsallisOptions::default()).unwrap();
        assert!((t.lnq_zq - q_log(3.0, q).unwrap()).abs() < 1e-12);
        assert!(t.grad_residual.is_empty());
    }

    #[test]
    fn thermo_two_point_q2() {
        let c = two_point(2.0, 0.3);
        let part = counting(2);
        let sol = solve_tsallis_maxent(&c, Arc::clone(&part), TsallisOptions::default()).unwrap();
        let t = tsallis_thermo(&sol, &c, part, 1e-4, TsallisOptions::default()).unwrap();
        assert!(max_abs(&t.sensitivity_residual) < 1e-4, "{t:?}");
        assert!(max_abs(&t.grad_residual) < 1e-4, "{t:?}");
    }

    fn dice_escort(q: f64) -> ConstraintSet {
        ConstraintSet::escort(vec![(1..=6).map(f64::from).collect()], vec![4.5], idx(q)).unwrap()
    }

    #[test]
    fn near_classical_index_is_continuous() {
        let classical = solve_tsallis_maxent(&dice_escort(1.0), counting(6), TsallisOptions::default()).unwrap();
        for q in [1.0 - 1e-4, 1.0 + 1e-4] {
            let sol = solve_tsallis_maxent(&dice_escort(q), counting(6), TsallisOptions::default()).unwrap();
            assert!(!sol.classical);
            let gap = induced_pmf(&sol.density)
                .masses()
                .iter()
                .zip(induced_pmf(&classical.density).masses())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(gap < 1e-3, "q = {q}: {gap}");
        }
    }

    #[test]
    fn classical_thermo_matches_shannon_module() {
        use crate::maxent_shannon::thermo_residuals;
        let c = dice_escort(1.0);
        let part = counting(6);
        let sol = solve_tsallis_maxent(&c, Arc::clone(&part), TsallisOptions::default()).unwrap();
        let t = tsallis_thermo(&sol, &c, Arc::clone(&part), 1e-4, TsallisOptions::default()).unwrap();
        let ordinary = c.with_kind(ConstraintKind::Ordinary);
        let gibbs = solve_maxent(&ordinary, Arc::clone(&part), SolverOptions::default()).unwrap();
        let r = thermo_residuals(&gibbs, &ordinary, part, 1e-4, SolverOptions::default()).unwrap();
        assert!((t.grad_residual[0] - r.grad_residual[0]).abs() < 1e-6, "{t:?} {r:?}");
        assert!((t.sensitivity_residual[0] - r.sensitivity_residual[0]).abs() < 1e-6);
    }

    #[test]
    fn discrete_report_random_pmf_q2() {
        let p = ProbabilityVector::new(vec![0.1, 0.25, 0.05, 0.4, 0.2]).unwrap();
        let q = idx(2.0);
        let r = discrete_consistency_report(&p, q, None).unwrap();
        // Independent evaluation of both sides.
        // ln_2(x) = 1 - 1/x, so ln_2(mu / P) = 1 - P / mu.
        let lhs: f64 = p.masses().iter().map(|m| m * (1.0 - m / 0.2)).sum();
        let sum_sq: f64 = p.masses().iter().map(|m| m * m).sum();
        let rhs = (1.0 - sum_sq) - 5.0 * (1.0 - 1.0 / 5.0) * sum_sq;
        assert!((r.measure_entropy - lhs).abs() < 1e-12);
        assert!((lhs - rhs).abs() < 1e-12);
        assert!(r.entropy_shift_residual < 1e-12);
    }

    #[test]
    fn solved_problem_power_sum_matches_zbar() {
        let part = Arc::new(uniform_partition(2, ReferenceMeasure::UniformProbability).unwrap());
        let sol = solve_tsallis_maxent(&two_point(2.0, 0.3), part, TsallisOptions::default()).unwrap();
        let r = discrete_consistency_report(&induced_pmf(&sol.density), idx(2.0), Some(sol.zbar)).unwrap();
        assert!(r.power_sum_residual.unwrap() < 1e-8, "{r:?}");
    }

    #[test]
    fn me_consistency_two_point() {
        let r = me_consistency(vec![vec![0.0, 1.0]], vec![0.3], idx(2.0), TsallisOptions::default()).unwrap();
        assert!(r.max_mass_gap < 2e-10, "{}", r.max_mass_gap);
    }
}
