use thiserror::Error;

use crate::maps::WorkspacePoint;
use crate::monodromy::LoopLift;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown map family `{0}`")]
    UnknownFamily(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("solver did not converge from seed ({:.6}, {:.6})", .0.phi, .0.y)]
    NonConvergence(WorkspacePoint),

    #[error("candidate at ({:.6}, {:.6}) stagnated with residual {residual:.3e}", point.phi, point.y)]
    ToleranceNotMet { point: WorkspacePoint, residual: f64 },

    #[error("tracing step collapsed below {min_step:e} at ({:.6}, {:.6})", at.phi, at.y)]
    StepCollapse { at: WorkspacePoint, min_step: f64 },

    #[error("solution ({:.6}, {:.6}) escaped the search box", .0.phi, .0.y)]
    BoxTooSmall(WorkspacePoint),

    #[error("lift hit the singular set at sample {sample}")]
    SingularEncounter { sample: usize, partial: Box<LoopLift> },

    #[error("lift diverged at sample {sample}")]
    DivergedLift { sample: usize, partial: Box<LoopLift> },

    #[error("lifts {first} and {second} end on the same solution")]
    PermutationInconsistent { first: usize, second: usize },
}
