//! Scalar abstraction for the operator algebra.
//!
//! Dense Hermitian algebra, state factories and divergence evaluation are
//! written once over [`Real`] and instantiated for `f32` and `f64`. The
//! optimization layers (conic programs, measures, Frank-Wolfe) run in `f64`
//! only: their tolerances sit well below single-precision resolution.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable as the field of a complex Hermitian operator.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Default {
    /// Relative asymmetry accepted (and symmetrized away) on ingest.
    const HERMITIAN_TOL: f64;
    /// Relative slack on the smallest eigenvalue of a positive operator.
    const PSD_TOL: f64;
    /// Absolute slack on the unit-trace condition of a state.
    const TRACE_TOL: f64;
    /// Eigenvalues below this fraction of the largest are outside the support.
    const SUPPORT_REL: f64;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f64 {
    const HERMITIAN_TOL: f64 = 1e-10;
    const PSD_TOL: f64 = 1e-9;
    const TRACE_TOL: f64 = 1e-9;
    const SUPPORT_REL: f64 = 1e-12;
}

impl Real for f32 {
    const HERMITIAN_TOL: f64 = 1e-5;
    const PSD_TOL: f64 = 1e-5;
    const TRACE_TOL: f64 = 1e-5;
    const SUPPORT_REL: f64 = 1e-6;
}
