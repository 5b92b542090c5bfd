use std::fmt;

use thiserror::Error;

/// Standing assumptions a lattice must satisfy before a sweeping process can
/// be built for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// Rows of the constraint matrix are linearly independent.
    IndependentConstraints,
    /// The constrained lattice has no nonzero zero modes.
    KinematicDeterminacy,
    /// There is at least one state of self-stress.
    SelfStressExists,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Assumption::IndependentConstraints => "independent constraints (rank R = q)",
            Assumption::KinematicDeterminacy => "kinematic determinacy",
            Assumption::SelfStressExists => "existence of self-stress (dim V > 0)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("constraint set is infeasible")]
    Infeasible,

    #[error("safe load condition violated at t = {time}")]
    SafeLoadViolation { time: f64 },

    #[error("spring {spring} has zero reference length")]
    DegenerateSpring { spring: usize },

    #[error("assumption violated: {which}: {detail}")]
    AssumptionViolated { which: Assumption, detail: String },

    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("unsupported load: {0}")]
    UnsupportedLoad(String),

    #[error("degenerate metrics: {0}")]
    DegenerateMetrics(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("quadratic program did not converge: {0}")]
    NoConvergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
