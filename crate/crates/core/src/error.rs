use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("fractional order s = {0} is outside the open interval (0, 2)")]
    OrderOutOfRange(f64),
    #[error("quadrature with {nodes} nodes per axis integrates bandwidth {exact} exactly, {required} required")]
    InsufficientQuadrature {
        nodes: usize,
        exact: usize,
        required: usize,
    },
    #[error("time {t} exceeds the cancellation window d(x)^2 = {limit}")]
    OutsideCancellationWindow { t: f64, limit: f64 },
    #[error("point ({x}, {y}) is not in the open square")]
    NotInterior { x: f64, y: f64 },
    #[error("implicit midpoint did not converge after {iterations} iterations (last update {update:e})")]
    NoConvergence { iterations: usize, update: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64, last_good: Vec<f64> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

/// Non-fatal conditions that make a computed quantity less trustworthy.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Requested mode count needs more quadrature exactness than the grid has.
    BandwidthExceeded { required: usize, exact: usize },
    /// Eigen-sum heat kernel ran out of modes before the tail dropped below tolerance.
    EigenSumTruncated { t: f64, modes: usize, last_term: f64 },
    /// Relative L2 mass of a product that the M-mode analysis did not capture.
    OversamplingTail { relative: f64 },
    /// Estimate of the analytically dropped part of a time integral.
    QuadratureTail { estimate: f64 },
    /// A projection error fell to the round-off floor of `‖φ‖² - ‖P_mφ‖²`.
    PrecisionFloor { m: usize, relative: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::BandwidthExceeded { required, exact } => write!(
                f,
                "analysis needs bandwidth {required} but quadrature is exact only to {exact}"
            ),
            Warning::EigenSumTruncated { t, modes, last_term } => write!(
                f,
                "eigen-sum kernel at t = {t} exhausted {modes} modes (last relative term {last_term:e}); use image series"
            ),
            Warning::OversamplingTail { relative } => {
                write!(f, "oversampling tail {relative:e} exceeds 1e-8; bound ratio unreliable")
            }
            Warning::QuadratureTail { estimate } => {
                write!(f, "time-quadrature tail estimate {estimate:e}")
            }
            Warning::PrecisionFloor { m, relative } => {
                write!(f, "projection error at m = {m} ({relative:e} relative) is at the round-off floor")
            }
        }
    }
}
