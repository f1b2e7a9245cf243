use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A coefficient or sequence value was requested outside its domain.
    #[error("{what} undefined at site {index}")]
    Domain { what: &'static str, index: i64 },

    #[error("invalid window [{left}, {right}]: {reason}")]
    InvalidWindow {
        left: i64,
        right: i64,
        reason: &'static str,
    },

    /// The positivity / finiteness hypothesis on the coefficients failed.
    #[error("coefficient hypothesis violated at site {index}: {detail}")]
    InvariantViolation { index: i64, detail: String },

    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),

    /// A meromorphic quantity was evaluated at (or numerically on top of) a pole.
    #[error("pole at z = {z}; nearest zero of the denominator at {near:?}")]
    Pole { z: Complex64, near: Option<f64> },

    #[error("eigensolver failed to converge for eigenvalue {index} after {iterations} sweeps")]
    NoConvergence { index: usize, iterations: usize },

    #[error("{value} is not an eigenvalue of the window (Sturm count jump {jump})")]
    NotEigenvalue { value: f64, jump: usize },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("lists are not strictly interlaced: {0}")]
    NotInterlaced(String),

    #[error("product fit inconsistent: constant drifts by {drift:.3e} (tolerance {tolerance:.1e})")]
    FitFailure { drift: f64, tolerance: f64 },

    #[error("tail sum of order {k} does not converge")]
    DivergentTail { k: usize },

    #[error("degree {degree} exceeds the space bound {bound}")]
    DegreeTooHigh { degree: usize, bound: usize },

    #[error("orthogonality lost during reconstruction (defect {defect:.3e})")]
    LossOfOrthogonality { defect: f64 },

    #[error("measure has {atoms} atoms, cannot produce {sites} sites")]
    NotEnoughAtoms { atoms: usize, sites: usize },

    #[error("Stieltjes inversion did not settle; partial values {partial:?}")]
    StieltjesNoConvergence { partial: Vec<f64> },

    #[error("quadrature did not reach tolerance (estimated error {estimate:.3e})")]
    Quadrature { estimate: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
