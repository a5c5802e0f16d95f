use thiserror::Error;

/// Errors raised by the analytic maps, the averaging machinery and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("forcing variant mismatch: {0}")]
    Variant(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("degenerate case: {0}")]
    Degenerate(String),

    #[error("two-sided value requested at jump point psi = {0}")]
    JumpPoint(f64),

    #[error("state does not reach the limiter (energy below impact threshold)")]
    NonImpacting,

    #[error("state inconsistent with impulse: residual {0:e}")]
    InconsistentState(f64),

    #[error("no resonance: {0}")]
    NoResonance(String),

    #[error("degenerate resonance: frequency does not depend on impulse")]
    DegenerateResonance,

    #[error("no uniform equilibrium branch: max |A_n| = {max_abs_a:.6} >= 1")]
    NoUniformBranch { max_abs_a: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("integration failure at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
