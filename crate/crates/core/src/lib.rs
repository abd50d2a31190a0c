//! Solvers for the Melan suspension-bridge equation
//!
//! ```text
//! w'''' - (a + b ∫w) w'' + c ∫w = p,   w = w'' = 0 at both ends,
//! ```
//!
//! and its linear "less stiff" counterpart `y'''' - M y'' + N ∫y = p`.

pub mod bridge;
pub mod criteria;
pub mod error;
pub mod kernel;
pub mod linear;
pub mod load;
pub mod monotone;
pub mod oracle;
pub mod quadrature;

pub use bridge::{ApplicabilityReport, BridgeParams, BridgeSolution, BridgeVerdict, Coefficients};
pub use criteria::{ConditionReport, SineConditions};
pub use error::{MelanError, Result};
pub use kernel::KernelParams;
pub use linear::{GridSolution, LinearProblem, SolutionMeta};
pub use load::{LoadSpec, LoadTerm};
pub use monotone::{BoundPair, Candidate, Curve, IterationTrace, MelanProblem, MonotoneOptions, MonotoneRun, Verdict};
pub use oracle::FdConfig;
pub use quadrature::UniformGrid;
