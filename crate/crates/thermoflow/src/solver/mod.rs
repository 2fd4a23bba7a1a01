//! Sparse direct factorization, preconditioned GMRES, the augmented
//! Lagrangian block preconditioner, Newton iteration and continuation.

pub mod al;
pub mod gmres;
pub mod newton;
pub mod sparse_lu;

pub use al::{build_al_preconditioner, AlPreconditioner, PressureMassInverse};
pub use gmres::{gmres, GmresResult, IdentityOp, KrylovConfig, LinearOperator};
pub use newton::{
    continuation_run, newton_solve, set_parameter, ContinuationParam, ContinuationSchedule,
    LinearStrategy, NewtonConfig, NewtonOutcome, Predictor, SolveReport, StepReport,
};
pub use sparse_lu::{lu_solve, minimum_degree, sparse_lu, LuFactorization};

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("zero pivot encountered at column {0}")]
    SingularMatrix(usize),
}
