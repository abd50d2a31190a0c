use thiserror::Error;

/// Errors raised by the solvers and checkers in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MelanError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid load: {0}")]
    InvalidLoad(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("solution formula degenerates: |1 + N*zeta| = {value:e}")]
    SingularResonance { value: f64 },

    #[error("Picard iteration is not contractive: |N*zeta| = {0} >= 1")]
    NotContractive(f64),

    #[error("invalid bound pair: {0}")]
    InvalidPair(String),

    #[error(
        "monotonicity violated on the {side} sequence at iteration {iteration} \
         (x = {x}, excess = {excess:e})"
    )]
    MonotonicityViolation {
        side: String,
        iteration: usize,
        x: f64,
        excess: f64,
    },

    #[error("monotone iteration did not converge after {iterations} iterations (gap {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },

    #[error("error bound unavailable: rho = {0} is not below 1")]
    BoundUnavailable(f64),

    #[error("cable length missing and q/H cannot be derived")]
    MissingCableLength,

    #[error("invalid bridge parameters: {0}")]
    InvalidParams(String),

    #[error("live load {load} exceeds the admissible envelope {envelope} at x = {x}")]
    EnvelopeViolation { x: f64, load: f64, envelope: f64 },

    #[error("monotone iteration not applicable: {0}")]
    NotApplicable(String),

    #[error("finite-difference system is singular at row {0}")]
    SingularSystem(usize),

    #[error("Newton iteration diverged after {iterations} steps (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, MelanError>;
