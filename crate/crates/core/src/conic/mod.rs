//! Hermitian semi-definite programming: program construction, the bundled
//! interior-point backend and independent feasibility checks.

mod embed;
mod ipm;
mod program;
mod verify;

pub use embed::{
    compress_symmetric, embed_hermitian, hermitian_basis, hermitian_coords, hermitian_from_coords,
    EMBED_INNER_SCALE,
};
pub use ipm::{InteriorPoint, LmiBlock, LmiProblem, RawSolution, SdpBackend, SolverOptions, SparseSym};
pub use program::{AffineExpr, ConicProgram, LinearMap, Relation, Residuals, ScalarExpr, SolverReport, VarId};
pub use verify::{verify_feasible, Verification};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalTrouble,
    IterationLimit,
}
