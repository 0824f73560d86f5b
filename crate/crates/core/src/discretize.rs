//! Dyadic mean-value approximation of bounded densities on an interval.
//!
//! A density is held on `2^B` uniform base cells of `[a, b]`. At level `n`
//! the base cells are grouped into the level sets
//! `E_{n,k} = { p in [k/2^n, (k+1)/2^n) }` for `k < n 2^n` and the overflow
//! set `F_n = { p >= n }`. The approximating simple function takes the
//! `mu`-mean of `p` on each level set, so every integral below is an exact
//! finite sum over base cells.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::{self, ExtendedReal};
use crate::measure::{uniform_partition, DensityVector, ProbabilityVector, ReferenceMeasure};
use crate::numeric::compensated_sum;
use crate::qcalc::{q_log, DeformationIndex};

/// Base resolution used by acceptance runs.
pub const DEFAULT_BASE_EXPONENT: u32 = 20;
/// Largest supported base exponent (cell indices are stored as `u32`).
pub const MAX_BASE_EXPONENT: u32 = 28;

const GRID_NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// A bounded density sampled on `2^B` uniform cells of `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseGridDensity {
    a: f64,
    b: f64,
    base_exponent: u32,
    values: Vec<f64>,
    bound: f64,
    renormalization_factor: f64,
}

impl BaseGridDensity {
    /// Evaluates `f` at base-cell midpoints and renormalizes.
    pub fn from_fn(a: f64, b: f64, base_exponent: u32, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        check_grid(a, b, base_exponent)?;
        let cells = 1usize << base_exponent;
        let width = (b - a) / cells as f64;
        let values = (0..cells).map(|k| f(a + (k as f64 + 0.5) * width)).collect();
        Self::build(a, b, base_exponent, values, true)
    }

    /// Wraps raw per-cell values. The length must be a power of two.
    pub fn from_values(a: f64, b: f64, values: Vec<f64>, renormalize: bool) -> Result<Self> {
        let n = values.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "base grid needs a power-of-two cell count, got {n}"
            )));
        }
        let base_exponent = n.trailing_zeros();
        check_grid(a, b, base_exponent)?;
        Self::build(a, b, base_exponent, values, renormalize)
    }

    fn build(a: f64, b: f64, base_exponent: u32, mut values: Vec<f64>, renormalize: bool) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "density must be finite and nonnegative; base cell {k} has {}",
                values[k]
            )));
        }
        let width = (b - a) / values.len() as f64;
        let total = compensated_sum(values.iter().map(|v| v * width));
        let mut factor = 1.0;
        if renormalize {
            if !(total > 0.0) {
                return Err(Error::NotNormalized {
                    what: "base-grid density",
                    total,
                });
            }
            factor = 1.0 / total;
            values.iter_mut().for_each(|v| *v *= factor);
        } else if (total - 1.0).abs() > GRID_NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized {
                what: "base-grid density",
                total,
            });
        }
        let bound = values.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            a,
            b,
            base_exponent,
            values,
            bound,
            renormalization_factor: factor,
        })
    }

    /// Declares a known supremum; fails if the samples exceed it.
    pub fn with_bound(mut self, bound: f64) -> Result<Self> {
        if self.bound > bound {
            return Err(Error::InvalidArgument(format!(
                "sampled maximum {} exceeds the declared bound {bound}",
                self.bound
            )));
        }
        self.bound = bound;
        Ok(self)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn base_exponent(&self) -> u32 {
        self.base_exponent
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_width(&self) -> f64 {
        (self.b - self.a) / self.values.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn renormalization_factor(&self) -> f64 {
        self.renormalization_factor
    }

    pub fn same_grid(&self, other: &BaseGridDensity) -> bool {
        self.a == other.a && self.b == other.b && self.base_exponent == other.base_exponent
    }

    /// Masses `p_k * width` of the base cells.
    pub fn base_pmf(&self) -> Result<ProbabilityVector> {
        let w = self.cell_width();
        ProbabilityVector::new(self.values.iter().map(|v| v * w).collect())
    }

    /// The samples as a density on a Lebesgue partition of `[a, b]`.
    pub fn to_density(&self) -> Result<DensityVector> {
        let part = uniform_partition(self.len(), ReferenceMeasure::Lebesgue { a: self.a, b: self.b })?;
        DensityVector::new(self.values.clone(), Arc::new(part))
    }
}

fn check_grid(a: f64, b: f64, base_exponent: u32) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::InvalidArgument(format!("degenerate interval [{a}, {b}]")));
    }
    if base_exponent > MAX_BASE_EXPONENT {
        return Err(Error::InvalidArgument(format!(
            "base exponent {base_exponent} exceeds the supported maximum {MAX_BASE_EXPONENT}"
        )));
    }
    Ok(())
}

/// Which level set a cell of a [`DyadicApproximation`] is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum LevelBin {
    /// `p in [k/2^n, (k+1)/2^n)`.
    Dyadic(u64),
    /// `p >= n`.
    Overflow,
}

/// A nonempty level set with its base-cell members.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCell {
    pub bin: LevelBin,
    pub members: Vec<u32>,
    /// `mu(E)`.
    pub measure: f64,
    /// `integral_E p dmu`.
    pub mass: f64,
    /// `mass / measure`, the value of the simple function on `E`.
    pub mean: f64,
}

/// The level-`n` approximating simple function of a base-grid density.
#[derive(Debug, Clone)]
pub struct DyadicApproximation {
    level: u32,
    a: f64,
    b: f64,
    base_exponent: u32,
    cells: Vec<LevelCell>,
    cell_of: Vec<u32>,
}

/// Builds the level-`n` approximation. Empty level sets are dropped; their
/// indices are available from [`DyadicApproximation::empty_bins`].
pub fn dyadic_approximation(p: &BaseGridDensity, level: u32) -> Result<DyadicApproximation> {
    if level == 0 {
        return Err(Error::InvalidArgument("approximation level must be at least 1".into()));
    }
    if level > p.base_exponent() {
        return Err(Error::Resolution {
            level,
            base_exponent: p.base_exponent(),
        });
    }
    let scale = (1u64 << level) as f64;
    let cap = level as f64;
    let width = p.cell_width();

    let mut bins: BTreeMap<LevelBin, Vec<u32>> = BTreeMap::new();
    for (i, &v) in p.values().iter().enumerate() {
        let bin = if v >= cap {
            LevelBin::Overflow
        } else {
            // v * 2^n is exact, so floor picks the half-open dyadic bin.
            LevelBin::Dyadic((v * scale).floor() as u64)
        };
        bins.entry(bin).or_default().push(i as u32);
    }

    let mut cell_of = vec![0u32; p.len()];
    let cells = bins
        .into_iter()
        .enumerate()
        .map(|(id, (bin, members))| {
            for &m in &members {
                cell_of[m as usize] = id as u32;
            }
            let measure = members.len() as f64 * width;
            let mass = compensated_sum(members.iter().map(|&m| p.values()[m as usize] * width));
            LevelCell {
                bin,
                mean: mass / measure,
                members,
                measure,
                mass,
            }
        })
        .collect();

    Ok(DyadicApproximation {
        level,
        a: p.a,
        b: p.b,
        base_exponent: p.base_exponent,
        cells,
        cell_of,
    })
}

impl DyadicApproximation {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cells(&self) -> &[LevelCell] {
        &self.cells
    }

    /// `m(n)`, the number of nonempty level sets.
    pub fn nonempty_count(&self) -> usize {
        self.cells.len()
    }

    /// Index of the level set containing each base cell.
    pub fn cell_of(&self) -> &[u32] {
        &self.cell_of
    }

    /// Number of dyadic bins `n 2^n` (the overflow set excluded).
    pub fn dyadic_bin_count(&self) -> u64 {
        self.level as u64 * (1u64 << self.level)
    }

    /// Dyadic bins that received no base cell.
    pub fn empty_bins(&self) -> Vec<u64> {
        let present: std::collections::HashSet<u64> = self
            .cells
            .iter()
            .filter_map(|c| match c.bin {
                LevelBin::Dyadic(k) => Some(k),
                LevelBin::Overflow => None,
            })
            .collect();
        (0..self.dyadic_bin_count()).filter(|k| !present.contains(k)).collect()
    }

    /// The simple function evaluated on every base cell.
    pub fn simple_function(&self) -> Vec<f64> {
        self.cell_of.iter().map(|&c| self.cells[c as usize].mean).collect()
    }

    /// `max |f_n - p|` over base cells outside the overflow set.
    pub fn sup_error(&self, p: &BaseGridDensity) -> f64 {
        self.cell_of
            .iter()
            .zip(p.values())
            .filter(|(&c, _)| self.cells[c as usize].bin != LevelBin::Overflow)
            .map(|(&c, &v)| (self.cells[c as usize].mean - v).abs())
            .fold(0.0, f64::max)
    }

    fn same_grid(&self, other: &DyadicApproximation) -> bool {
        self.a == other.a && self.b == other.b && self.base_exponent == other.base_exponent
    }
}

/// Masses of the level sets, the level-`n` approximating pmf.
pub fn approximating_pmf(approx: &DyadicApproximation) -> Result<ProbabilityVector> {
    ProbabilityVector::new(approx.cells.iter().map(|c| c.mass).collect())
}

/// A cell `E_i ∩ F_j` of a common refinement, carrying both simple-function values.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedCell {
    pub f_cell: usize,
    pub g_cell: usize,
    pub measure: f64,
    /// Value of the first simple function on this cell.
    pub f_value: f64,
    /// Value of the second simple function on this cell.
    pub g_value: f64,
}

/// Nonempty pairwise intersections of two level-set partitions.
#[derive(Debug, Clone)]
pub struct CommonRefinement {
    cells: Vec<RefinedCell>,
    cell_of: Vec<u32>,
}

impl CommonRefinement {
    pub fn cells(&self) -> &[RefinedCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_of(&self) -> &[u32] {
        &self.cell_of
    }

    /// The pmfs `a_k mu(E_k)` and `b_k mu(E_k)` on the refined cells.
    pub fn pmfs(&self) -> Result<(ProbabilityVector, ProbabilityVector)> {
        let p = self.cells.iter().map(|c| c.f_value * c.measure).collect();
        let r = self.cells.iter().map(|c| c.g_value * c.measure).collect();
        Ok((ProbabilityVector::new(p)?, ProbabilityVector::new(r)?))
    }
}

pub fn common_refinement(f: &DyadicApproximation, g: &DyadicApproximation) -> Result<CommonRefinement> {
    if !f.same_grid(g) {
        return Err(Error::InvalidArgument(
            "approximations live on different base grids".into(),
        ));
    }
    let width = (f.b - f.a) / f.cell_of.len() as f64;
    let g_len = g.cells.len() as u64;
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for (&fi, &gi) in f.cell_of.iter().zip(&g.cell_of) {
        *counts.entry(fi as u64 * g_len + gi as u64).or_default() += 1;
    }
    let mut index_of = std::collections::HashMap::with_capacity(counts.len());
    let cells = counts
        .iter()
        .enumerate()
        .map(|(id, (&key, &count))| {
            index_of.insert(key, id as u32);
            let f_cell = (key / g_len) as usize;
            let g_cell = (key % g_len) as usize;
            RefinedCell {
                f_cell,
                g_cell,
                measure: count as f64 * width,
                f_value: f.cells[f_cell].mean,
                g_value: g.cells[g_cell].mean,
            }
        })
        .collect();
    let cell_of = f
        .cell_of
        .iter()
        .zip(&g.cell_of)
        .map(|(&fi, &gi)| index_of[&(fi as u64 * g_len + gi as u64)])
        .collect();
    Ok(CommonRefinement { cells, cell_of })
}

/// Which generalized relative entropy a convergence table tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceKind {
    Renyi,
    Tsallis,
}

impl DivergenceKind {
    pub fn evaluate(
        self,
        p: &ProbabilityVector,
        r: &ProbabilityVector,
        index: DeformationIndex,
    ) -> Result<ExtendedReal> {
        match self {
            DivergenceKind::Renyi => info::renyi_divergence(p, r, index),
            DivergenceKind::Tsallis => info::tsallis_divergence(p, r, index),
        }
    }
}

/// One level of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: u32,
    pub discrete_divergence: ExtendedReal,
    pub reference_divergence: ExtendedReal,
    pub abs_error: f64,
}

/// Divergence of the approximating pmfs at each level against the
/// base-resolution divergence. Levels run in parallel; rows come back in
/// the order given.
pub fn convergence_table(
    p: &BaseGridDensity,
    r: &BaseGridDensity,
    index: DeformationIndex,
    kind: DivergenceKind,
    levels: &[u32],
) -> Result<Vec<ConvergenceRow>> {
    if !p.same_grid(r) {
        return Err(Error::InvalidArgument("densities live on different base grids".into()));
    }
    let reference = kind.evaluate(&p.base_pmf()?, &r.base_pmf()?, index)?;
    levels
        .par_iter()
        .map(|&level| {
            let f = dyadic_approximation(p, level)?;
            let g = dyadic_approximation(r, level)?;
            let (pn, rn) = common_refinement(&f, &g)?.pmfs()?;
            let discrete = kind.evaluate(&pn, &rn, index)?;
            Ok(ConvergenceRow {
                level,
                discrete_divergence: discrete,
                reference_divergence: reference,
                abs_error: extended_gap(discrete, reference),
            })
        })
        .collect()
}

fn extended_gap(x: ExtendedReal, y: ExtendedReal) -> f64 {
    match (x, y) {
        (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => (a - b).abs(),
        (a, b) if a == b => 0.0,
        _ => f64::INFINITY,
    }
}

/// CSV header of a convergence table.
pub const CONVERGENCE_CSV_HEADER: &str = "level,discrete_divergence,reference_divergence,abs_error";

pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CONVERGENCE_CSV_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{}",
            row.level,
            row.discrete_divergence,
            row.reference_divergence,
            ExtendedReal::Finite(row.abs_error)
        )?;
    }
    Ok(())
}

/// One row of the discrete-versus-continuous entropy comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonextensionRow {
    pub n: usize,
    /// Entropy of the uniform pmf on `n` points.
    pub discrete_entropy: f64,
    /// Entropy of the uniform density on `[a, b]` against Lebesgue measure.
    pub continuous_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonextensionTable {
    pub interval: (f64, f64),
    pub rows: Vec<NonextensionRow>,
    /// Whether the continuous entropy is negative (`b - a < 1`).
    pub continuous_negative: bool,
}

/// Shows that the entropies `ln n` of finer and finer uniform pmfs diverge
/// while the continuous entropy of the uniform density stays at `ln(b - a)`.
pub fn entropy_nonextension_demo(a: f64, b: f64, n_list: &[usize]) -> Result<NonextensionTable> {
    let leb = |n| uniform_partition(n, ReferenceMeasure::Lebesgue { a, b });
    let rows = n_list
        .iter()
        .map(|&n| {
            let counting = Arc::new(uniform_partition(n, ReferenceMeasure::Counting)?);
            let pmf_density = DensityVector::uniform(counting);
            let continuous = DensityVector::uniform(Arc::new(leb(n)?));
            Ok(NonextensionRow {
                n,
                discrete_entropy: info::shannon_entropy(&pmf_density),
                continuous_entropy: info::shannon_entropy(&continuous),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let continuous = info::shannon_entropy(&DensityVector::uniform(Arc::new(leb(1)?)));
    Ok(NonextensionTable {
        interval: (a, b),
        rows,
        continuous_negative: continuous < 0.0,
    })
}

/// Rényi and Tsallis analogue of [`entropy_nonextension_demo`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralizedNonextensionRow {
    pub n: usize,
    pub discrete_renyi: f64,
    pub continuous_renyi: f64,
    pub discrete_tsallis: f64,
    pub continuous_tsallis: f64,
}

pub fn generalized_nonextension_demo(
    a: f64,
    b: f64,
    n_list: &[usize],
    index: DeformationIndex,
) -> Result<Vec<GeneralizedNonextensionRow>> {
    n_list
        .iter()
        .map(|&n| {
            let counting = DensityVector::uniform(Arc::new(uniform_partition(n, ReferenceMeasure::Counting)?));
            let continuous =
                DensityVector::uniform(Arc::new(uniform_partition(n, ReferenceMeasure::Lebesgue { a, b })?));
            Ok(GeneralizedNonextensionRow {
                n,
                discrete_renyi: info::renyi_entropy(&counting, index),
                continuous_renyi: info::renyi_entropy(&continuous, index),
                discrete_tsallis: info::tsallis_entropy(&counting, index),
                continuous_tsallis: info::tsallis_entropy(&continuous, index),
            })
        })
        .collect()
}

/// `ln_q(b - a)`, the continuous Tsallis entropy of the uniform density.
pub fn uniform_tsallis_entropy(a: f64, b: f64, index: DeformationIndex) -> Result<f64> {
    q_log(b - a, index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(b: u32) -> BaseGridDensity {
        BaseGridDensity::from_fn(0.0, 1.0, b, |x| 2.0 * x).unwrap()
    }

    fn flat(b: u32) -> BaseGridDensity {
        BaseGridDensity::from_fn(0.0, 1.0, b, |_| 1.0).unwrap()
    }

    #[test]
    fn constant_density_has_one_level_set() {
        let p = flat(10);
        for n in 2..=6 {
            let approx = dyadic_approximation(&p, n).unwrap();
            assert_eq!(approx.nonempty_count(), 1);
            assert_eq!(approx.cells()[0].mean, 1.0);
            assert_eq!(approx_pmf(&approx), vec![1.0]);
        }
    }

    fn approx_pmf(a: &DyadicApproximation) -> Vec<f64> {
        approximating_pmf(a).unwrap().into_inner()
    }

    // Exact masses of 2x over the level sets, by direct integration.
    #[test]
    fn linear_density_level_one() {
        let p = linear(12);
        let approx = dyadic_approximation(&p, 1).unwrap();
        let bins: Vec<_> = approx.cells().iter().map(|c| c.bin).collect();
        assert_eq!(bins, vec![LevelBin::Dyadic(0), LevelBin::Dyadic(1), LevelBin::Overflow]);
        let masses = approx_pmf(&approx);
        for (m, e) in masses.iter().zip([0.0625, 0.1875, 0.75]) {
            assert!((m - e).abs() < 1e-12, "{m} vs {e}");
        }
    }

    #[test]
    fn linear_density_level_two_quarters() {
        // Level 2 bins have width 1/4 in p, i.e. 1/8 in x, below the cap p < 2.
        let p = linear(12);
        let approx = dyadic_approximation(&p, 2).unwrap();
        assert_eq!(approx.nonempty_count(), 8);
        for (k, cell) in approx.cells().iter().enumerate() {
            let (lo, hi) = (k as f64 / 8.0, (k + 1) as f64 / 8.0);
            assert!((cell.mass - (hi * hi - lo * lo)).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_values_stay_in_their_bins() {
        let p = BaseGridDensity::from_fn(0.0, 1.0, 14, |x| 1.0 + 0.5 * (6.0 * x).sin()).unwrap();
        for n in 1..=8 {
            let approx = dyadic_approximation(&p, n).unwrap();
            let scale = (1u64 << n) as f64;
            for cell in approx.cells() {
                if let LevelBin::Dyadic(k) = cell.bin {
                    assert!(k as f64 / scale <= cell.mean && cell.mean < (k + 1) as f64 / scale);
                }
            }
            assert!(approx.sup_error(&p) < 1.0 / scale);
            let total: f64 = approx_pmf(&approx).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            let members: usize = approx.cells().iter().map(|c| c.members.len()).sum();
            assert_eq!(members, p.len());
        }
    }

    #[test]
    fn empty_bins_are_recorded() {
        let p = flat(8);
        let approx = dyadic_approximation(&p, 2).unwrap();
        assert_eq!(approx.empty_bins().len() as u64, approx.dyadic_bin_count() - 1);
        assert!(!approx.empty_bins().contains(&4));
    }

    #[test]
    fn level_above_resolution_is_rejected() {
        let p = flat(6);
        assert!(matches!(dyadic_approximation(&p, 7), Err(Error::Resolution { .. })));
        assert!(dyadic_approximation(&p, 0).is_err());
    }

    #[test]
    fn refinement_cases() {
        let p = linear(12);
        let r = flat(12);
        let f = dyadic_approximation(&p, 3).unwrap();
        let g = dyadic_approximation(&r, 3).unwrap();
        // r has one level set, so the refinement is p's partition.
        let fg = common_refinement(&f, &g).unwrap();
        assert_eq!(fg.len(), f.nonempty_count());
        let ff = common_refinement(&f, &f).unwrap();
        assert_eq!(ff.len(), f.nonempty_count());
        let gf = common_refinement(&g, &f).unwrap();
        assert_eq!(gf.len(), f.nonempty_count());
        assert!(fg.len() <= f.nonempty_count() * g.nonempty_count());

        let other = BaseGridDensity::from_fn(0.0, 2.0, 12, |_| 0.5).unwrap();
        let h = dyadic_approximation(&other, 3).unwrap();
        assert!(common_refinement(&f, &h).is_err());
    }

    #[test]
    fn refinement_count_matches_enumeration() {
        let p = linear(10);
        let r = BaseGridDensity::from_fn(0.0, 1.0, 10, |x| 1.5 - x).unwrap();
        let f = dyadic_approximation(&p, 3).unwrap();
        let g = dyadic_approximation(&r, 3).unwrap();
        let mut pairs: Vec<(u32, u32)> = f.cell_of().iter().copied().zip(g.cell_of().iter().copied()).collect();
        pairs.sort_unstable();
        pairs.dedup();
        let fg = common_refinement(&f, &g).unwrap();
        assert_eq!(fg.len(), pairs.len());
        let (pn, rn) = fg.pmfs().unwrap();
        assert!((pn.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((rn.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_densities_give_zero_rows() {
        let p = linear(12);
        let rows = convergence_table(
            &p,
            &p,
            DeformationIndex::new(2.0).unwrap(),
            DivergenceKind::Renyi,
            &[2, 4, 6],
        )
        .unwrap();
        assert_eq!(rows.iter().map(|r| r.level).collect::<Vec<_>>(), vec![2, 4, 6]);
        for row in rows {
            assert!(row.discrete_divergence.to_f64().abs() < 1e-14);
            assert!(row.abs_error < 1e-14);
        }
    }

    #[test]
    fn divergent_reference_is_reported() {
        let p = BaseGridDensity::from_fn(0.0, 1.0, 8, |_| 1.0).unwrap();
        let r = BaseGridDensity::from_fn(0.0, 1.0, 8, |x| if x < 0.5 { 2.0 } else { 0.0 }).unwrap();
        let rows = convergence_table(
            &p,
            &r,
            DeformationIndex::new(2.0).unwrap(),
            DivergenceKind::Tsallis,
            &[3],
        )
        .unwrap();
        assert_eq!(rows[0].reference_divergence, ExtendedReal::PosInfinity);
        assert_eq!(rows[0].discrete_divergence, ExtendedReal::PosInfinity);
        assert_eq!(rows[0].abs_error, 0.0);
    }

    #[test]
    fn csv_layout() {
        let rows = vec![ConvergenceRow {
            level: 2,
            discrete_divergence: ExtendedReal::Finite(0.25),
            reference_divergence: ExtendedReal::PosInfinity,
            abs_error: f64::INFINITY,
        }];
        let mut buf = Vec::new();
        write_convergence_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "level,discrete_divergence,reference_divergence,abs_error\n2,0.25,inf,inf\n"
        );
    }

    #[test]
    fn nonextension_rows() {
        let t = entropy_nonextension_demo(0.0, 1.0, &[1, 8]).unwrap();
        assert_eq!(t.rows[0].discrete_entropy, 0.0);
        assert!((t.rows[1].discrete_entropy - 8f64.ln()).abs() < 1e-15);
        assert_eq!(t.rows[1].continuous_entropy, 0.0);
        assert!(!t.continuous_negative);
        let t = entropy_nonextension_demo(0.0, 0.5, &[4]).unwrap();
        assert!((t.rows[0].continuous_entropy - 0.5f64.ln()).abs() < 1e-15);
        assert!(t.continuous_negative);
    }

    #[test]
    fn generalized_nonextension_matches_closed_forms() {
        let q = DeformationIndex::new(2.0).unwrap();
        let rows = generalized_nonextension_demo(0.0, 3.0, &[16], q).unwrap();
        assert!((rows[0].discrete_renyi - 16f64.ln()).abs() < 1e-13);
        assert!((rows[0].continuous_renyi - 3f64.ln()).abs() < 1e-13);
        assert!((rows[0].continuous_tsallis - uniform_tsallis_entropy(0.0, 3.0, q).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn raw_values_must_be_power_of_two() {
        assert!(BaseGridDensity::from_values(0.0, 1.0, vec![1.0; 3], true).is_err());
        assert!(BaseGridDensity::from_values(0.0, 1.0, vec![1.0; 4], false).is_ok());
        assert!(BaseGridDensity::from_values(0.0, 1.0, vec![2.0; 4], false).is_err());
        let (g, f) = {
            let g = BaseGridDensity::from_values(0.0, 1.0, vec![2.0; 4], true).unwrap();
            let f = g.renormalization_factor();
            (g, f)
        };
        assert_eq!(f, 0.5);
        assert!(g.clone().with_bound(0.5).is_err());
        assert_eq!(g.with_bound(3.0).unwrap().bound(), 3.0);
    }
}
