use thiserror::Error;

/// Errors raised by the simulation and verification API.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("operator is not {kind} (deviation {deviation:.3e})")]
    NotUnitaryOrHermitian { kind: &'static str, deviation: f64 },
    #[error("invalid support: {0}")]
    Support(String),
    #[error("site budget exceeded: {requested} sites requested, cap is {cap}")]
    SiteBudget { requested: usize, cap: usize },
    #[error("outcome {outcome} has zero probability ({probability:.3e})")]
    ZeroProbability { outcome: u8, probability: f64 },
    #[error("time {t} outside schedule horizon [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("tolerance {tolerance:.1e} not reached within {steps} steps")]
    Tolerance { tolerance: f64, steps: usize },
    #[error("invalid model: {0}")]
    Model(String),
    #[error("requested {requested} eigenvalues from a {dim}-dimensional space")]
    SpectrumSize { requested: usize, dim: usize },
    #[error("state has no logical component (leakage {leakage:.3e})")]
    NoLogicalComponent { leakage: f64 },
    #[error("leakage {leakage:.3e} exceeds limit {limit:.1e}")]
    Leakage { leakage: f64, limit: f64 },
    #[error("invalid register: {0}")]
    Register(String),
    #[error("invalid amplitudes: {0}")]
    Amplitudes(String),
    #[error("coupling change rejected: {0}")]
    GapClosure(String),
    #[error("calibration failed: {message}")]
    Calibration { message: String, trace: Vec<(f64, f64)> },
    #[error("adiabaticity violated: leakage {leakage:.3e} with ramp {ramp}")]
    Adiabaticity { leakage: f64, ramp: String },
    #[error("schedule violation: {0}")]
    Schedule(String),
    #[error("pattern violation: {0}")]
    Pattern(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
