//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A physical or controller parameter violates its constraints.
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    /// An input vector contained NaN or infinite entries.
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    /// A matrix required to be symmetric positive definite is not.
    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(&'static str),

    /// Condition estimate of the inertia matrix exceeds the solve ceiling,
    /// which points at bad physical parameters rather than a numerical issue.
    #[error("ill-conditioned matrix (condition estimate {cond:.3e})")]
    IllConditioned { cond: f64 },

    /// A matrix expected to be Hurwitz has an eigenvalue with
    /// non-negative real part.
    #[error("matrix is not Hurwitz: eigenvalue {re:.6e} {im:+.6e}i")]
    NotHurwitz { re: f64, im: f64 },

    /// Two independent computation routes disagree beyond tolerance.
    #[error("consistency check failed: {0}")]
    Inconsistent(String),

    /// The divergence guard tripped during simulation.
    #[error("simulation diverged at t = {t:.6} s (velocity norm {speed:.3e} rad/s)")]
    Diverged { t: f64, speed: f64 },

    /// The state derivative evaluated to NaN or infinity.
    #[error("non-finite state derivative at t = {t:.6} s")]
    NonFiniteDerivative { t: f64 },

    /// A linear system that should be regular came back singular.
    #[error("singular system in {0}")]
    Singular(&'static str),

    /// A run configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation that consumes a trajectory log received an empty one.
    #[error("empty trajectory log")]
    EmptyLog,
}

pub type Result<T> = std::result::Result<T, Error>;
