use thiserror::Error;

/// Errors raised by the measure model, the information functionals and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("{what} is not normalized (total = {total})")]
    NotNormalized { what: &'static str, total: f64 },

    #[error("absolute continuity violated: cell {cell} carries mass {mass} but has zero reference weight")]
    AbsoluteContinuity { cell: usize, mass: f64 },

    #[error("reference measure is degenerate (all weights are zero)")]
    DegenerateMeasure,

    #[error("level {level} needs more than the 2^{base_exponent} base cells available; increase the base resolution")]
    Resolution { level: u32, base_exponent: u32 },

    #[error("constraint {constraint}: target {target} is not strictly inside ({min}, {max})")]
    Infeasible {
        constraint: usize,
        target: f64,
        min: f64,
        max: f64,
    },

    #[error("solver stopped after {iterations} iterations with residual {residual:e}")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        residuals: Vec<f64>,
    },

    #[error("q-mass fixed point did not settle after {iterations} iterations (gap {gap:e}); try a smaller damping than {damping}")]
    InnerNonConvergence { iterations: usize, gap: f64, damping: f64 },

    #[error("every cell was cut off by the q-exponential; multipliers are too extreme")]
    EmptySupport,

    #[error("q-exponential argument reached its pole at cell {cell}")]
    Pole { cell: usize },
}

impl Error {
    /// True for errors caused by an iterative solver failing to reach tolerance.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::InnerNonConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
