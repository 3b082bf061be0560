//! Semi-definite upper bounds and Holevo lower bounds on the distillable
//! randomness of bipartite quantum states.
//!
//! Index convention throughout: the basis index of a `d_A x d_B` operator
//! is `a * d_B + b`.

pub mod conic;
pub mod entropic;
pub mod error;
pub mod io;
pub mod measures;
pub mod opalg;
pub mod scalar;
pub mod states;
pub mod suite;
pub mod sweep;

pub use error::{Error, Result};
pub use opalg::{BipartiteOp, DensityMatrix, HermitianOp, Subsystem};
pub use scalar::Real;

pub type HermitianOperator = HermitianOp<f64>;
pub type BipartiteOperator = BipartiteOp<f64>;
pub type Density = DensityMatrix<f64>;

pub type HermitianOperatorF32 = HermitianOp<f32>;
pub type BipartiteOperatorF32 = BipartiteOp<f32>;
pub type DensityF32 = DensityMatrix<f32>;
