//! Eigenvalue re-check of a `(K, L, V)` certificate, independent of any solver.

use crate::error::{Error, Result};
use crate::measures::FeasibleTriple;
use crate::opalg::{partial_transpose, tensor, BipartiteOp, Subsystem};

/// Smallest eigenvalues of the four operators that must be PSD.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Verification {
    pub ok: bool,
    pub tol: f64,
    /// `T_B(V + sigma)`
    pub pt_plus: f64,
    /// `T_B(V - sigma)`
    pub pt_minus: f64,
    /// `K (x) L + V`
    pub kl_plus: f64,
    /// `K (x) L - V`
    pub kl_minus: f64,
}

impl Verification {
    pub fn worst(&self) -> f64 {
        self.pt_plus.min(self.pt_minus).min(self.kl_plus).min(self.kl_minus)
    }
}

/// Check `T_B(V +- sigma) >= -tol` and `K (x) L +- V >= -tol`.
pub fn verify_feasible(t: &FeasibleTriple, sigma: &BipartiteOp<f64>, tol: f64) -> Result<Verification> {
    let (da, db) = sigma.dims();
    if t.v.dims() != (da, db) || t.k.dim() != da || t.l.dim() != db {
        return Err(Error::DimensionMismatch(format!(
            "triple on K:{} L:{} V:{:?} checked against sigma {da}x{db}",
            t.k.dim(),
            t.l.dim(),
            t.v.dims()
        )));
    }
    let kl = tensor(&t.k, &t.l);
    let min_eig = |b: BipartiteOp<f64>| b.op().min_eigenvalue();
    let pt_plus = min_eig(partial_transpose(&t.v.plus(sigma), Subsystem::B));
    let pt_minus = min_eig(partial_transpose(&t.v.minus(sigma), Subsystem::B));
    let kl_plus = min_eig(kl.plus(&t.v));
    let kl_minus = min_eig(kl.minus(&t.v));
    let ok = [pt_plus, pt_minus, kl_plus, kl_minus].iter().all(|&m| m >= -tol);
    Ok(Verification {
        ok,
        tol,
        pt_plus,
        pt_minus,
        kl_plus,
        kl_minus,
    })
}
