//! Finite weighted partitions standing in for a measure space, plus the
//! densities and probability vectors that live on them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum p_k mu_k = 1` and `sum P_k = 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// One cell of a partition. `left`/`right` are present for interval cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<f64>,
}

impl Cell {
    pub fn labelled(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            left: None,
            right: None,
        }
    }

    pub fn interval(label: impl Into<String>, left: f64, right: f64) -> Self {
        Self {
            label: label.into(),
            left: Some(left),
            right: Some(right),
        }
    }
}

/// How [`uniform_partition`] assigns weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceMeasure {
    /// `mu_k = 1`.
    Counting,
    /// `mu_k = (b - a) / n`, with interval descriptors.
    Lebesgue { a: f64, b: f64 },
    /// `mu_k = 1 / n`.
    UniformProbability,
}

#[derive(Deserialize)]
struct RawPartition {
    cells: Option<Vec<Cell>>,
    weights: Vec<f64>,
}

/// A finite measurable partition with reference-measure weights `mu_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPartition")]
pub struct WeightedPartition {
    cells: Vec<Cell>,
    weights: Vec<f64>,
    #[serde(skip)]
    total_mass: f64,
}

impl TryFrom<RawPartition> for WeightedPartition {
    type Error = Error;

    fn try_from(raw: RawPartition) -> Result<Self> {
        match raw.cells {
            Some(cells) => Self::new(cells, raw.weights),
            None => Self::from_weights(raw.weights),
        }
    }
}

impl WeightedPartition {
    pub fn new(cells: Vec<Cell>, weights: Vec<f64>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidArgument("a partition needs at least one cell".into()));
        }
        if cells.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: cells.len(),
                found: weights.len(),
            });
        }
        if let Some(k) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "weight {k} must be finite and nonnegative, got {}",
                weights[k]
            )));
        }
        let total_mass: f64 = weights.iter().sum();
        if total_mass <= 0.0 {
            return Err(Error::DegenerateMeasure);
        }
        check_intervals(&cells)?;
        Ok(Self {
            cells,
            weights,
            total_mass,
        })
    }

    /// Partition with cells labelled `0..n`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let cells = (0..weights.len()).map(|k| Cell::labelled(k.to_string())).collect();
        Self::new(cells, weights)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    #[inline]
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Whether the weights themselves form a probability vector.
    pub fn is_probability(&self) -> bool {
        (self.total_mass - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    /// The weights viewed as a probability vector. Requires total mass 1.
    pub fn as_probability(&self) -> Result<ProbabilityVector> {
        ProbabilityVector::new(self.weights.clone())
    }
}

fn check_intervals(cells: &[Cell]) -> Result<()> {
    let mut previous_right: Option<f64> = None;
    for (k, cell) in cells.iter().enumerate() {
        match (cell.left, cell.right) {
            (None, None) => continue,
            (Some(l), Some(r)) => {
                if !(l.is_finite() && r.is_finite() && l < r) {
                    return Err(Error::InvalidArgument(format!(
                        "cell {k} has an empty or non-finite interval [{l}, {r})"
                    )));
                }
                if let Some(prev) = previous_right {
                    if l < prev {
                        return Err(Error::InvalidArgument(format!(
                            "cell {k} interval [{l}, {r}) overlaps or precedes its predecessor"
                        )));
                    }
                }
                previous_right = Some(r);
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "cell {k} has only one interval endpoint"
                )))
            }
        }
    }
    Ok(())
}

/// Builds an `n`-cell partition for one of the standard reference measures.
pub fn uniform_partition(n: usize, mode: ReferenceMeasure) -> Result<WeightedPartition> {
    if n == 0 {
        return Err(Error::InvalidArgument("cell count must be at least 1".into()));
    }
    match mode {
        ReferenceMeasure::Counting => WeightedPartition::from_weights(vec![1.0; n]),
        ReferenceMeasure::UniformProbability => WeightedPartition::from_weights(vec![1.0 / n as f64; n]),
        ReferenceMeasure::Lebesgue { a, b } => {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidArgument(format!("degenerate interval [{a}, {b}]")));
            }
            let width = (b - a) / n as f64;
            let cells = (0..n)
                .map(|k| {
                    let left = a + width * k as f64;
                    let right = if k + 1 == n { b } else { a + width * (k + 1) as f64 };
                    Cell::interval(k.to_string(), left, right)
                })
                .collect();
            WeightedPartition::new(cells, vec![width; n])
        }
    }
}

/// Density `p_k` of a probability measure with respect to the partition's weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    values: Vec<f64>,
    partition: Arc<WeightedPartition>,
}

impl DensityVector {
    pub fn new(values: Vec<f64>, partition: Arc<WeightedPartition>) -> Result<Self> {
        validate_density(&values, &partition)?;
        let total = integral(&values, partition.weights());
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized { what: "density", total });
        }
        Ok(Self { values, partition })
    }

    /// Rescales `values` so they integrate to one; returns the applied factor.
    pub fn renormalized(values: Vec<f64>, partition: Arc<WeightedPartition>) -> Result<(Self, f64)> {
        validate_density(&values, &partition)?;
        let total = integral(&values, partition.weights());
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::NotNormalized { what: "density", total });
        }
        let factor = 1.0 / total;
        let values = values.into_iter().map(|v| v * factor).collect();
        Ok((Self { values, partition }, factor))
    }

    /// Density that is constant with respect to the reference measure.
    pub fn uniform(partition: Arc<WeightedPartition>) -> Self {
        let value = 1.0 / partition.total_mass();
        Self {
            values: vec![value; partition.len()],
            partition,
        }
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn partition(&self) -> &WeightedPartition {
        &self.partition
    }

    #[inline]
    pub fn shared_partition(&self) -> Arc<WeightedPartition> {
        Arc::clone(&self.partition)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(p_k, mu_k)` pairs.
    pub fn iter_weighted(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .iter()
            .copied()
            .zip(self.partition.weights().iter().copied())
    }
}

fn validate_density(values: &[f64], partition: &WeightedPartition) -> Result<()> {
    if values.len() != partition.len() {
        return Err(Error::LengthMismatch {
            expected: partition.len(),
            found: values.len(),
        });
    }
    if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "density value {k} must be finite and nonnegative, got {}",
            values[k]
        )));
    }
    Ok(())
}

fn integral(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(p, w)| p * w).sum()
}

/// Masses `P_k` of a probability measure on a finite partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityVector {
    masses: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        validate_masses(&masses)?;
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized {
                what: "probability vector",
                total,
            });
        }
        Ok(Self { masses })
    }

    /// Rescales to unit total; returns the applied factor.
    pub fn renormalized(masses: Vec<f64>) -> Result<(Self, f64)> {
        validate_masses(&masses)?;
        let total: f64 = masses.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::NotNormalized {
                what: "probability vector",
                total,
            });
        }
        let factor = 1.0 / total;
        Ok((
            Self {
                masses: masses.into_iter().map(|m| m * factor).collect(),
            },
            factor,
        ))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("cell count must be at least 1".into()));
        }
        Ok(Self {
            masses: vec![1.0 / n as f64; n],
        })
    }

    #[inline]
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.masses
    }
}

impl<'de> Deserialize<'de> for ProbabilityVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let masses = Vec::<f64>::deserialize(d)?;
        ProbabilityVector::new(masses).map_err(serde::de::Error::custom)
    }
}

fn validate_masses(masses: &[f64]) -> Result<()> {
    if masses.is_empty() {
        return Err(Error::InvalidArgument(
            "a probability vector needs at least one cell".into(),
        ));
    }
    if let Some(k) = masses.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "mass {k} must be finite and nonnegative, got {}",
            masses[k]
        )));
    }
    Ok(())
}

/// `P_k = p_k mu_k`.
pub fn induced_pmf(p: &DensityVector) -> ProbabilityVector {
    ProbabilityVector {
        masses: p.iter_weighted().map(|(v, w)| v * w).collect(),
    }
}

/// `p_k = P_k / mu_k`, zero on null cells. Fails if a null cell carries mass.
pub fn radon_nikodym(pmf: &ProbabilityVector, partition: Arc<WeightedPartition>) -> Result<DensityVector> {
    if pmf.len() != partition.len() {
        return Err(Error::LengthMismatch {
            expected: partition.len(),
            found: pmf.len(),
        });
    }
    let mut values = Vec::with_capacity(pmf.len());
    for (k, (&mass, &w)) in pmf.masses().iter().zip(partition.weights()).enumerate() {
        if w == 0.0 {
            if mass > 0.0 {
                return Err(Error::AbsoluteContinuity { cell: k, mass });
            }
            values.push(0.0);
        } else {
            values.push(mass / w);
        }
    }
    Ok(DensityVector { values, partition })
}

/// First cell where `P` has mass on a `mu`-null cell.
pub fn absolute_continuity_violation(pmf: &ProbabilityVector, partition: &WeightedPartition) -> Option<usize> {
    pmf.masses()
        .iter()
        .zip(partition.weights())
        .position(|(&m, &w)| w == 0.0 && m > 0.0)
}
