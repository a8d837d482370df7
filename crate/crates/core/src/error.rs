use thiserror::Error;

use crate::integrator::EventKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid soliton parameters: {0}")]
    InvalidParams(String),

    /// The warp ODE is singular at rho = 0.
    #[error("{what} requires rho > 0, got {rho}")]
    Domain { what: &'static str, rho: f64 },

    #[error("scale factor must be positive, got {0}")]
    InvalidScale(f64),

    #[error("invalid integration options: {0}")]
    InvalidOptions(String),

    #[error("monitor has no sign change on [{a}, {b}] (g(a) = {ga}, g(b) = {gb})")]
    NoSignChange { a: f64, b: f64, ga: f64, gb: f64 },

    #[error("no smooth tip exists for rbar = {0} (need rbar > 0)")]
    NoTip(f64),

    #[error("trajectory has no samples")]
    EmptyTrajectory,

    #[error("trajectory must be integrated in both directions")]
    OneSided,

    #[error("trajectory is not in the {expected} regime: {detail}")]
    WrongRegime { expected: &'static str, detail: String },

    #[error("expected a DDRhoZero event, got {0:?}")]
    WrongEventKind(EventKind),

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("suite not applicable: {0}")]
    NotApplicable(String),

    #[error("r = {r} outside trajectory range [{lo}, {hi}]")]
    OutOfRange { r: f64, lo: f64, hi: f64 },

    #[error("separatrix construction failed: {0}")]
    Separatrix(String),

    /// The orbit grown from the saddle stopped before reaching `rho0`.
    #[error("orbit from the saddle ended {termination} before reaching rho = {rho0}")]
    Unreached { rho0: f64, termination: &'static str },
}
