use thiserror::Error;

/// Failures raised by the geometry, noise, operator and dynamics routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("polar angle {theta} is at a pole; the adapted frame is singular there")]
    PoleSingularity { theta: f64 },

    #[error("curve passes within {margin:e} rad of a pole at sample {index}")]
    PoleCrossing { index: usize, margin: f64 },

    #[error("field sample {index} is the zero vector")]
    DegenerateField { index: usize },

    #[error("cannot parametrize curve by azimuth: {0}")]
    ParametrizationError(String),

    #[error("insufficient resolution: need at least {needed} samples, got {got}")]
    InsufficientResolution { needed: usize, got: usize },

    #[error("invalid noise statistics: {0}")]
    InvalidStatistics(String),

    #[error("invalid angular momentum quantum number {0} (2l must be a nonnegative integer)")]
    InvalidSpin(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("operator is not hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("H_A does not commute with n.L (commutator norm {norm:e})")]
    NonCommutingReference { norm: f64 },

    #[error("no eigenstate tracks the reference: best overlap {best_overlap}")]
    TrackingAmbiguity { best_overlap: f64 },

    #[error("driving field has vanishing expectation value (rho = 0)")]
    DegenerateDrivingField,

    #[error("integrator norm drift {drift:e} exceeds tolerance")]
    IntegratorFailure { drift: f64 },

    #[error("adiabaticity broken: final overlap {overlap} with initial state")]
    AdiabaticityBroken { overlap: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
