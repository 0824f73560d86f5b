//! Seeded randomized checks of the library's invariants, reported as a
//! pass/fail table.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::info::{
    kl_divergence, measure_entropy, renyi_divergence, renyi_entropy, shannon_entropy, tsallis_divergence,
    tsallis_entropy,
};
use crate::maxent_tsallis::discrete_consistency_report;
use crate::measure::{
    induced_pmf, radon_nikodym, uniform_partition, DensityVector, ProbabilityVector, ReferenceMeasure,
    WeightedPartition,
};
use crate::qcalc::{q_exp, q_log, DeformationIndex};

/// Indices used by the divergence property suites.
pub const PROPERTY_INDICES: [f64; 4] = [0.5, 0.9, 2.0, 3.0];

/// Offset of the near-classical indices in the limit suites.
pub const LIMIT_OFFSET: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random instances per suite.
    pub samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 10_000,
        }
    }
}

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub samples: usize,
    pub failures: usize,
    /// Largest observed error (or violation) over all samples.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

struct Tally {
    samples: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            samples: 0,
            failures: 0,
            worst: 0.0,
        }
    }

    fn record(&mut self, error: f64, ok: bool) {
        self.samples += 1;
        if !ok {
            self.failures += 1;
        }
        if error.is_nan() || error > self.worst {
            self.worst = error;
        }
    }

    // Records `error <= tolerance`.
    fn within(&mut self, error: f64, tolerance: f64) {
        self.record(error, error <= tolerance);
    }

    fn finish(self, suite: &'static str, tolerance: f64) -> SuiteReport {
        SuiteReport {
            suite,
            samples: self.samples,
            failures: self.failures,
            worst: self.worst,
            tolerance,
            passed: self.failures == 0,
        }
    }
}

fn idx(q: f64) -> DeformationIndex {
    DeformationIndex::new(q).expect("suite indices are positive")
}

/// Log-uniform sample on `[1e-3, 1e3]`.
pub fn sample_positive(rng: &mut impl Rng) -> f64 {
    10f64.powf(rng.random_range(-3.0..=3.0))
}

/// Uniform sample on `(0, 3]`.
pub fn sample_index(rng: &mut impl Rng) -> f64 {
    3.0 * (1.0 - rng.random::<f64>())
}

/// Flat-Dirichlet probability vector with `n` cells.
pub fn sample_pmf(rng: &mut impl Rng, n: usize) -> ProbabilityVector {
    let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1) + 1e-300).collect();
    ProbabilityVector::renormalized(raw).expect("positive masses").0
}

/// Random partition with weights in `[0.1, 2)`.
pub fn sample_partition(rng: &mut impl Rng, n: usize) -> WeightedPartition {
    let weights = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
    WeightedPartition::from_weights(weights).expect("positive weights")
}

/// Random density on a random partition.
pub fn sample_density(rng: &mut impl Rng, n: usize) -> DensityVector {
    let partition = Arc::new(sample_partition(rng, n));
    let pmf = sample_pmf(rng, n);
    radon_nikodym(&pmf, partition).expect("positive weights")
}

/// Absolute gap for `|b| <= 1`, relative beyond.
fn scaled_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn qlog_inverse(rng: &mut impl Rng, samples: usize) -> SuiteReport {
    let mut t = Tally::new();
    for _ in 0..samples {
        let q = idx(sample_index(rng));
        let x = sample_positive(rng);
        let y = q_exp(q_log(x, q).expect("positive x"), q);
        t.within(rel(y, x), 1e-12);
    }
    t.finish("qlog_inverse", 1e-12)
}

pub fn qlog_monotone(rng: &mut impl Rng, samples: usize) -> SuiteReport {
    let mut t = Tally::new();
    for _ in 0..samples {
        let q = idx(sample_index(rng));
        let (a, b) = (sample_positive(rng), sample_positive(rng));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if lo == hi {
            continue;
        }
        let gap = q_log(hi, q).expect("positive") - q_log(lo, q).expect("positive");
        t.record((-gap).max(0.0), gap > 0.0);
    }
    t.finish("qlog_monotone", 0.0)
}

pub fn qlog_ratio_identity(rng: &mut impl Rng, samples: usize) -> SuiteReport {
    let mut t = Tally::new();
    for _ in 0..samples {
        let q = idx(sample_index(rng));
        let (x, y) = (sample_positive(rng), sample_positive(rng));
        let lhs = q_log(x / y, q).expect("positive");
        let rhs = y.powf(q.value() - 1.0) * (q_log(x, q).expect("positive") - q_log(y, q).expect("positive"));
        t.within(rel(rhs, lhs), 1e-12);
    }
    t.finish("qlog_ratio_identity", 1e-12)
}

pub fn qlog_classical_limit(rng: &mut impl Rng, samples: usize) -> SuiteReport {
    let mut t = Tally::new();
    for i in 0..samples {
        let q = if i.is_multiple_of(2) {
            1.0 + LIMIT_OFFSET
        } else {
            1.0 - LIMIT_OFFSET
        };
        let x = sample_positive(rng);
        t.within((q_log(x, idx(q)).expect("positive") - x.ln()).abs(), 1e-5);
    }
    t.finish("qlog_classical_limit", 1e-5)
}

fn near_classical(i: usize) -> DeformationIndex {
    idx(if i.is_multiple_of(2) {
        1.0 + LIMIT_OFFSET
    } else {
        1.0 - LIMIT_OFFSET
    })
}

pub fn renyi_entropy_limit(rng: &mut impl Rng, samples: usize) -> SuiteReport {
    let mut t = Tally::new();
    for i in 0..samples {
        let n = rng.random_range(2..=10);
        let p = sample_density(rng, n);
        t.within((renyi_entropy(&p, near_classical(i)) - shannon_entropy(&p)).abs(), 1e-5);
    }
    t.finish("renyi_entropy_limit", 1e-5)
}

pub fn tsallis_entropy_limit(rng: &mut impl Rng, samples: usize) -> SuiteReport {
    let mut t = Tally::new();
    for i in 0..samples {
        let n = rng.random_range(2..=10);
        let p = sample_density(rng, n);
        t.within(
            (tsallis_entropy(&p, near_classical(i)) - shannon_entropy(&p)).abs(),
            1e-5,
        );
    }
    t.finish("tsallis_entropy_limit", 1e-5)
}

fn finite(v: crate::info::ExtendedReal) -> f64 {
    v.finite().unwrap_or(f64::INFINITY)
}

pub fn renyi_divergence_limit(rng: &mut impl Rng, samples: usize) -> SuiteReport {
    let mut t = Tally::new();
    for i in 0..samples {
        let n = rng.random_range(2..=10);
        let (p, r) = (sample_pmf(rng, n), sample_pmf(rng, n));
        let kl = finite(kl_divergence(&p, &r).expect("same length"));
        let ra = finite(renyi_divergence(&p, &r, near_classical(i)).expect("same length"));
        t.within((ra - kl).abs(), 1e-5);
    }
    t.finish("renyi_divergence_limit", 1e-5)
}

pub fn tsallis_divergence_limit(rng: &mut impl Rng, samples: usize) -> SuiteReport {
    let mut t = Tally::new();
    for i in 0..samples {
        let n = rng.random_range(2..=10);
        let (p, r) = (sample_pmf(rng, n), sample_pmf(rng, n));
        let kl = finite(kl_divergence(&p, &r).expect("same length"));
        let ts = finite(tsallis_divergence(&p, &r, near_classical(i)).expect("same length"));
        t.within((ts - kl).abs(), 1e-5);
    }
    t.finish("tsallis_divergence_limit", 1e-5)
}

/// KL and every Rényi and Tsallis divergence in [`PROPERTY_INDICES`] on one pair.
pub fn all_divergences(p: &ProbabilityVector, r: &ProbabilityVector) -> Vec<f64> {
    let mut out = vec![finite(kl_divergence(p, r).expect("same length"))];
    for a in PROPERTY_INDICES {
        out.push(finite(renyi_divergence(p, r, idx(a)).expect("same length")));
        out.push(finite(tsallis_divergence(p, r, idx(a)).expect("same length")));
    }
    out
}

pub fn divergence_nonnegativity(rng: &mut impl Rng, samples: usize) -> SuiteReport {
    let mut t = Tally::new();
    for _ in 0..samples {
        let n = rng.random_range(2..=10);
        let (p, r) = (sample_pmf(rng, n), sample_pmf(rng, n));
        for d in all_divergences(&p, &r) {
            t.record((-d).max(0.0), d >= 0.0);
        }
    }
    t.finish("divergence_nonnegativity", 0.0)
}

/// Moves `eps` of mass from one cell to another.
pub fn nudge(p: &ProbabilityVector, eps: f64, rng: &mut impl Rng) -> ProbabilityVector {
    let mut m = p.masses().to_vec();
    let n = m.len();
    let from = (0..n).max_by(|&a, &b| m[a].total_cmp(&m[b])).expect("nonempty");
    let to = (from + rng.random_range(1..n)) % n;
    m[from] -= eps;
    m[to] += eps;
    ProbabilityVector::new(m).expect("mass preserved")
}

/// Zero on identical pairs and strictly positive on pairs at infinity-norm
/// distance of at least `1e-9`, including nearly equal ones.
pub fn divergence_zero_iff_equal(rng: &mut impl Rng, samples: usize) -> SuiteReport {
    let mut t = Tally::new();
    for i in 0..samples {
        let n = rng.random_range(2..=10);
        let p = sample_pmf(rng, n);
        for d in all_divergences(&p, &p) {
            t.record(d.abs(), d == 0.0);
        }
        let r = if i.is_multiple_of(2) {
            sample_pmf(rng, n)
        } else {
            nudge(&p, 10f64.powf(rng.random_range(-9.0..-6.0)), rng)
        };
        let distance = p
            .masses()
            .iter()
            .zip(r.masses())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if distance >= 1e-9 {
            for d in all_divergences(&p, &r) {
                t.record(if d > 0.0 { 0.0 } else { 1.0 }, d > 0.0);
            }
        }
    }
    t.finish("divergence_zero_iff_equal", 0.0)
}

/// `S_a(p) = -I_a(P || mu)` and `S_q(p) = -I_q(P || mu)` for a probability
/// reference `mu`, relative to the magnitude once it exceeds one.
pub fn entropy_divergence_duality(rng: &mut impl Rng, samples: usize) -> SuiteReport {
    let mut t = Tally::new();
    for _ in 0..samples {
        let n = rng.random_range(2..=10);
        let mu = sample_pmf(rng, n);
        let partition = Arc::new(WeightedPartition::from_weights(mu.masses().to_vec()).expect("positive"));
        let pmf = sample_pmf(rng, n);
        let p = radon_nikodym(&pmf, partition).expect("positive weights");
        let induced = induced_pmf(&p);
        for a in [0.5, 2.0, 3.0] {
            let a = idx(a);
            let renyi = finite(renyi_divergence(&induced, &mu, a).expect("same length"));
            let tsallis = finite(tsallis_divergence(&induced, &mu, a).expect("same length"));
            t.within(scaled_gap(renyi_entropy(&p, a), -renyi), 1e-10);
            t.within(scaled_gap(tsallis_entropy(&p, a), -tsallis), 1e-10);
        }
    }
    t.finish("entropy_divergence_duality", 1e-10)
}

/// `I_q = (exp((q - 1) I_a) - 1) / (q - 1)` at `a = q`, relative to the
/// magnitude once it exceeds one.
pub fn renyi_tsallis_bijection(rng: &mut impl Rng, samples: usize) -> SuiteReport {
    let mut t = Tally::new();
    for _ in 0..samples {
        let n = rng.random_range(2..=10);
        let (p, r) = (sample_pmf(rng, n), sample_pmf(rng, n));
        for q in PROPERTY_INDICES {
            let renyi = finite(renyi_divergence(&p, &r, idx(q)).expect("same length"));
            let tsallis = finite(tsallis_divergence(&p, &r, idx(q)).expect("same length"));
            let mapped = ((q - 1.0) * renyi).exp_m1() / (q - 1.0);
            t.within(scaled_gap(mapped, tsallis), 1e-10);
        }
    }
    t.finish("renyi_tsallis_bijection", 1e-10)
}

/// Entropy against the uniform probability measure equals `S_n - ln n`.
pub fn measure_entropy_discrete(rng: &mut impl Rng, samples: usize) -> SuiteReport {
    let mut t = Tally::new();
    for _ in 0..samples {
        let n = rng.random_range(2..=64);
        let pmf = sample_pmf(rng, n);
        let partition = uniform_partition(n, ReferenceMeasure::UniformProbability).expect("n > 0");
        let measure = finite(measure_entropy(&pmf, &partition).expect("same length"));
        let counting = Arc::new(uniform_partition(n, ReferenceMeasure::Counting).expect("n > 0"));
        let discrete = shannon_entropy(&radon_nikodym(&pmf, counting).expect("positive weights"));
        t.within((measure - (discrete - (n as f64).ln())).abs(), 1e-12);
    }
    t.finish("measure_entropy_discrete", 1e-12)
}

/// Tsallis entropy against the uniform probability measure equals
/// `S_q^n - n^(q-1) ln_q(n) sum P^q`, evaluated on both sides independently.
pub fn tsallis_discrete_shift(rng: &mut impl Rng, samples: usize) -> SuiteReport {
    let mut t = Tally::new();
    for _ in 0..samples {
        let n = rng.random_range(2..=10);
        let pmf = sample_pmf(rng, n);
        for q in [0.5, 2.0, 3.0] {
            let report = discrete_consistency_report(&pmf, idx(q), None).expect("valid pmf");
            t.within(report.entropy_shift_residual, 1e-12);
            t.within(
                (report.measure_entropy - report.measure_entropy_functional).abs(),
                1e-12,
            );
        }
    }
    t.finish("tsallis_discrete_shift", 1e-12)
}

type Suite = fn(&mut ChaCha8Rng, usize) -> SuiteReport;

const SUITES: [(&str, Suite); 14] = [
    ("qlog_inverse", qlog_inverse),
    ("qlog_monotone", qlog_monotone),
    ("qlog_ratio_identity", qlog_ratio_identity),
    ("qlog_classical_limit", qlog_classical_limit),
    ("renyi_entropy_limit", renyi_entropy_limit),
    ("tsallis_entropy_limit", tsallis_entropy_limit),
    ("renyi_divergence_limit", renyi_divergence_limit),
    ("tsallis_divergence_limit", tsallis_divergence_limit),
    ("divergence_nonnegativity", divergence_nonnegativity),
    ("divergence_zero_iff_equal", divergence_zero_iff_equal),
    ("entropy_divergence_duality", entropy_divergence_duality),
    ("renyi_tsallis_bijection", renyi_tsallis_bijection),
    ("measure_entropy_discrete", measure_entropy_discrete),
    ("tsallis_discrete_shift", tsallis_discrete_shift),
];

/// Names of the suites run by [`run_suites`], in order.
pub fn suite_names() -> impl Iterator<Item = &'static str> {
    SUITES.iter().map(|(name, _)| *name)
}

/// Runs every suite. Each suite draws from its own stream derived from the
/// seed, so results do not depend on which other suites ran.
pub fn run_suites(options: VerifyOptions) -> Vec<SuiteReport> {
    SUITES
        .iter()
        .enumerate()
        .map(|(i, (_, suite))| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(i as u64);
            suite(&mut rng, options.samples)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_are_deterministic() {
        let opts = VerifyOptions { seed: 7, samples: 50 };
        assert_eq!(run_suites(opts), run_suites(opts));
        assert_eq!(run_suites(opts).len(), suite_names().count());
    }

    #[test]
    fn nudge_preserves_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = sample_pmf(&mut rng, 5);
        let r = nudge(&p, 1e-9, &mut rng);
        assert!((r.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(r.masses() != p.masses());
    }

    #[test]
    fn divergence_suites_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(divergence_nonnegativity(&mut rng, 500).passed);
        assert!(divergence_zero_iff_equal(&mut rng, 500).passed);
        assert!(entropy_divergence_duality(&mut rng, 200).passed);
        assert!(renyi_tsallis_bijection(&mut rng, 200).passed);
    }
}
