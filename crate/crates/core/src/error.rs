use thiserror::Error;

/// Errors produced by state construction, Hamiltonian evaluation,
/// propagation, and gate analysis.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),

    #[error("unknown basis label {label:?}")]
    UnknownLabel { label: String },

    #[error("state spaces differ ({left} vs {right})")]
    SpaceMismatch { left: String, right: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state is not normalized (|norm - 1| = {deviation:.3e})")]
    NotNormalized { deviation: f64 },

    #[error("Hamiltonian is not Hermitian at t = {t} ns (max |H - H†| = {defect:.3e} rad/ns)")]
    NonHermitian { t: f64, defect: f64 },

    #[error("step size underflow at t = {t} ns (h = {h:.3e} ns)")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("numerical failure at t = {t} ns: {message}")]
    NumericalFailure { t: f64, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mixing angle undefined: pump and Stokes amplitudes are both zero")]
    MixingAngleUndefined,

    #[error("dipole-dipole strength undefined: microwave drive and detuning are both zero")]
    DipoleStrengthUndefined,

    #[error("invalid gate schedule: {0}")]
    InvalidSchedule(String),

    #[error("return population too low in {which} run: {population:.6} < {threshold}")]
    InsufficientReturn {
        which: &'static str,
        population: f64,
        threshold: f64,
    },

    #[error("unknown sweep evaluator {name:?}")]
    UnknownEvaluator { name: String },

    #[error("sweep evaluator {evaluator:?} is missing parameter {parameter:?}")]
    MissingParameter {
        evaluator: &'static str,
        parameter: &'static str,
    },

    #[error("eigensolver failed to converge after {sweeps} sweeps")]
    EighNoConvergence { sweeps: usize },
}
