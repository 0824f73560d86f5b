//! Measure-theoretic Shannon, Rényi and Tsallis information measures on
//! finite partitions, their dyadic approximation from densities, and
//! maximum-entropy solvers for ordinary and escort (q-expectation)
//! constraints.
//!
//! ```
//! use std::sync::Arc;
//! use qentropy::{q_log, tsallis_entropy, uniform_partition, DeformationIndex, DensityVector, ReferenceMeasure};
//!
//! let q = DeformationIndex::new(2.0)?;
//! assert_eq!(q_log(4.0, q)?, 0.75);
//!
//! let coin = Arc::new(uniform_partition(2, ReferenceMeasure::Counting)?);
//! let p = DensityVector::new(vec![0.5, 0.5], coin)?;
//! assert_eq!(tsallis_entropy(&p, q), 0.5);
//! # Ok::<(), qentropy::Error>(())
//! ```

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod discretize;
pub mod error;
pub mod info;
pub mod maxent_shannon;
pub mod maxent_tsallis;
pub mod measure;
pub mod numeric;
pub mod qcalc;
pub mod verify;

pub use discretize::{
    approximating_pmf, common_refinement, convergence_table, dyadic_approximation, entropy_nonextension_demo,
    BaseGridDensity, ConvergenceRow, DivergenceKind,
};
pub use error::{Error, Result};
pub use info::{
    kl_divergence, measure_entropy, renyi_divergence, renyi_entropy, shannon_entropy, tsallis_divergence,
    tsallis_entropy, ExtendedReal,
};
pub use maxent_shannon::{solve_maxent, thermo_residuals, ConstraintKind, ConstraintSet, GibbsSolution, SolverOptions};
pub use maxent_tsallis::{
    discrete_consistency_report, escort_expectation, me_consistency, solve_tsallis_maxent, tsallis_thermo,
    TsallisOptions, TsallisSolution,
};
pub use measure::{
    induced_pmf, radon_nikodym, uniform_partition, DensityVector, ProbabilityVector, ReferenceMeasure,
    WeightedPartition,
};
pub use qcalc::{q_exp, q_log, DeformationIndex};
