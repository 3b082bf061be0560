//! Classical-correlation measures defined by the `(K, L, V)` constraint
//! system
//!
//! ```text
//! T_B(V +- sigma) >= 0,    K (x) L +- V >= 0,
//! ```
//!
//! with value `Tr[K] Tr[L]`. `beta` pins one of `K`, `L` and is an SDP;
//! `gamma` optimizes both and is bilinear, so only an alternating heuristic
//! upper bound is provided. The certificate maps below transport feasible
//! triples through local channels, classical registers, tensor products
//! and the exchange of the two parties.

use std::time::Instant;

use serde::Serialize;

use crate::conic::{
    verify_feasible, AffineExpr, ConicProgram, LinearMap, ScalarExpr, SolverOptions, SolverReport, SolverStatus,
    VarId, Verification,
};
use crate::error::{Error, Result};
use crate::opalg::{
    dephase_subsystem, fidelity, partial_trace, partial_transpose, tensor, tensor_bipartite, trace_subsystem,
    BipartiteOp, DensityMatrix, HermitianOp, Subsystem,
};
use crate::states::{apply_local_channels, max_classically_correlated, regroup_a_bx_to_ax_b, QuantumChannel};

/// Tolerance at which emitted certificates are checked.
pub const CERT_TOL: f64 = 1e-7;

/// A certificate `(K, L, V)` with value `Tr[K] Tr[L]`.
#[derive(Clone, Debug)]
pub struct FeasibleTriple {
    pub k: HermitianOp<f64>,
    pub l: HermitianOp<f64>,
    pub v: BipartiteOp<f64>,
    pub value: f64,
    /// Filled by [`FeasibleTriple::verified`].
    pub verification: Option<Verification>,
}

impl FeasibleTriple {
    pub fn new(k: HermitianOp<f64>, l: HermitianOp<f64>, v: BipartiteOp<f64>) -> Result<Self> {
        if v.dims() != (k.dim(), l.dim()) {
            return Err(Error::DimensionMismatch(format!(
                "V on {:?} does not match K:{} L:{}",
                v.dims(),
                k.dim(),
                l.dim()
            )));
        }
        let value = k.trace() * l.trace();
        Ok(Self {
            k,
            l,
            v,
            value,
            verification: None,
        })
    }

    /// Re-check against `sigma` at `tol`; a failed check is an error.
    pub fn verified(mut self, sigma: &BipartiteOp<f64>, tol: f64) -> Result<Self> {
        let rep = verify_feasible(&self, sigma, tol)?;
        self.verification = Some(rep);
        if !rep.ok {
            return Err(Error::ViolationDetected(format!(
                "triple fails verification: worst eigenvalue {:.3e} below -{tol:.1e}",
                rep.worst()
            )));
        }
        Ok(self)
    }

    pub fn is_verified(&self) -> bool {
        self.verification.is_some_and(|v| v.ok)
    }

    /// `(c K, L / c, V)`: same value, same constraints.
    pub fn rebalanced(&self, c: f64) -> Self {
        Self {
            k: self.k.scaled(c),
            l: self.l.scaled(1.0 / c),
            v: self.v.clone(),
            value: self.value,
            verification: self.verification,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Method {
    BetaA,
    BetaB,
    GammaHeuristic,
    UpsilonA,
    UpsilonB,
    UpperBoundMin,
    HolevoLower,
    OneShot,
}

/// A feasible `sigma` for a divergence bound together with its certificate.
#[derive(Clone, Debug)]
pub struct SigmaCertificate {
    pub side: Subsystem,
    pub sigma: BipartiteOp<f64>,
    /// Independently re-solved `beta(sigma, rho_side)`.
    pub beta: f64,
    pub triple: FeasibleTriple,
}

#[derive(Clone, Debug)]
pub enum Certificate {
    None,
    Triple(FeasibleTriple),
    Sigma(Vec<SigmaCertificate>),
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SolverStats {
    /// Interior-point iterations summed over all solves.
    pub iterations: usize,
    pub solves: usize,
    pub elapsed_ms: f64,
}

impl SolverStats {
    pub(crate) fn absorb(&mut self, r: &SolverReport) {
        self.iterations += r.iterations;
        self.solves += 1;
    }

    pub(crate) fn merge(&mut self, o: &SolverStats) {
        self.iterations += o.iterations;
        self.solves += o.solves;
        self.elapsed_ms += o.elapsed_ms;
    }
}

#[derive(Clone, Debug)]
pub struct BoundResult {
    pub method: Method,
    /// Raw value (`beta`, `gamma`) or the bound in bits for divergence methods.
    pub value: f64,
    pub value_bits: f64,
    pub certificate: Certificate,
    pub fw_gap_bits: Option<f64>,
    /// Finite-blocklength penalty already included in `value_bits`.
    pub penalty_bits: Option<f64>,
    pub stats: SolverStats,
    pub certified: bool,
    pub warnings: Vec<String>,
    /// Per-round values of iterative methods.
    pub history: Vec<f64>,
}

fn marginal_op(sigma: &BipartiteOp<f64>, keep: Subsystem) -> HermitianOp<f64> {
    partial_trace(sigma, keep.other())
}

/// The beta program: `fixed` on `side`, the other operator and `V` free.
fn beta_program(
    sigma: &BipartiteOp<f64>,
    side: Subsystem,
    fixed: &HermitianOp<f64>,
) -> (ConicProgram, VarId, VarId) {
    let (da, db) = sigma.dims();
    let n = da * db;
    let mut p = ConicProgram::new();
    let free_dim = match side {
        Subsystem::A => db,
        Subsystem::B => da,
    };
    let free = p.add_variable(if side == Subsystem::A { "L" } else { "K" }, free_dim);
    let v = p.add_variable("V", n);
    let pt = LinearMap::PartialTranspose {
        da,
        db,
        sys: Subsystem::B,
    };
    let tb_sigma = partial_transpose(sigma, Subsystem::B).into_op();
    let kron = match side {
        Subsystem::A => LinearMap::KronLeft(fixed.clone()),
        Subsystem::B => LinearMap::KronRight(fixed.clone()),
    };
    p.minimize(ScalarExpr::new().trace(free, free_dim, fixed.trace()))
        .expect("objective dims");
    p.add_psd("T_B(V+s)", AffineExpr::new(n).term(v, pt.clone(), 1.0).constant(&tb_sigma))
        .expect("dims");
    p.add_psd(
        "T_B(V-s)",
        AffineExpr::new(n).term(v, pt, 1.0).constant(&tb_sigma.scaled(-1.0)),
    )
    .expect("dims");
    p.add_psd(
        "KL+V",
        AffineExpr::new(n).term(free, kron.clone(), 1.0).term(v, LinearMap::Identity, 1.0),
    )
    .expect("dims");
    p.add_psd(
        "KL-V",
        AffineExpr::new(n).term(free, kron, 1.0).term(v, LinearMap::Identity, -1.0),
    )
    .expect("dims");
    (p, free, v)
}

fn assemble(side: Subsystem, fixed: &HermitianOp<f64>, free: HermitianOp<f64>, v: BipartiteOp<f64>) -> Result<FeasibleTriple> {
    match side {
        Subsystem::A => FeasibleTriple::new(fixed.clone(), free, v),
        Subsystem::B => FeasibleTriple::new(free, fixed.clone(), v),
    }
}

/// Push a numerically near-feasible triple strictly inside: `V += e I`
/// lifts both partial-transpose constraints, then the free operator is
/// raised by a multiple of the identity to absorb `e` and any remaining
/// violation of `K (x) L +- V`. Needs the fixed operator to be invertible.
fn repair(t: &FeasibleTriple, sigma: &BipartiteOp<f64>, side: Subsystem) -> Result<Option<FeasibleTriple>> {
    let rep = verify_feasible(t, sigma, CERT_TOL)?;
    let fixed = match side {
        Subsystem::A => &t.k,
        Subsystem::B => &t.l,
    };
    let fmin = fixed.min_eigenvalue();
    if fmin <= 1e-12 {
        return Ok(None);
    }
    let e = (-rep.pt_plus.min(rep.pt_minus)).max(0.0) + 1e-12;
    let f = (-rep.kl_plus.min(rep.kl_minus)).max(0.0) + e + 1e-12;
    let n = sigma.op().dim();
    let v = t.v.with_op(&t.v.op().clone() + &HermitianOp::identity(n).scaled(e));
    let t2 = match side {
        Subsystem::A => {
            let l = &t.l + &HermitianOp::identity(t.l.dim()).scaled(f / fmin);
            FeasibleTriple::new(t.k.clone(), l, v)?
        }
        Subsystem::B => {
            let k = &t.k + &HermitianOp::identity(t.k.dim()).scaled(f / fmin);
            FeasibleTriple::new(k, t.l.clone(), v)?
        }
    };
    Ok(Some(t2))
}

/// Solve the beta program and return a verified triple.
fn solve_beta_triple(
    sigma: &BipartiteOp<f64>,
    side: Subsystem,
    fixed: &HermitianOp<f64>,
    opts: &SolverOptions,
    warnings: &mut Vec<String>,
) -> Result<(FeasibleTriple, SolverReport)> {
    let (p, free, v) = beta_program(sigma, side, fixed);
    let rep = p.solve(opts);
    if !matches!(rep.status, SolverStatus::Optimal | SolverStatus::NumericalTrouble | SolverStatus::IterationLimit) {
        return Err(Error::SolverFailure { status: rep.status });
    }
    let (da, db) = sigma.dims();
    let vop = BipartiteOp::new(rep.value(v).clone(), da, db)?;
    let t = assemble(side, fixed, rep.value(free).clone(), vop)?;
    let checked = verify_feasible(&t, sigma, CERT_TOL)?;
    let t = if checked.ok {
        t
    } else if let Some(r) = repair(&t, sigma, side)? {
        warnings.push(format!(
            "certificate repaired (worst eigenvalue {:.2e}, value {:.3e} -> {:.3e})",
            checked.worst(),
            t.value,
            r.value
        ));
        r
    } else {
        return Err(Error::SolverFailure { status: rep.status });
    };
    if rep.status != SolverStatus::Optimal {
        // a verified certificate is still a valid upper bound
        warnings.push(format!("solver status {:?}; value is a verified upper bound", rep.status));
    }
    let t = t.verified(sigma, CERT_TOL)?;
    Ok((t, rep))
}

/// `beta(sigma, fixed)`: the measure with the operator on `side` pinned.
pub fn beta(
    sigma: &BipartiteOp<f64>,
    side: Subsystem,
    fixed: &HermitianOp<f64>,
    opts: &SolverOptions,
) -> Result<BoundResult> {
    sigma.op().check_psd()?;
    if fixed.dim() != sigma.dim(side) {
        return Err(Error::DimensionMismatch(format!(
            "fixed operator of dim {} on side {side:?} of {:?}",
            fixed.dim(),
            sigma.dims()
        )));
    }
    let start = Instant::now();
    let mut warnings = Vec::new();
    let (t, rep) = solve_beta_triple(sigma, side, fixed, opts, &mut warnings)?;
    let mut stats = SolverStats::default();
    stats.absorb(&rep);
    stats.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    // the verified triple's value is the certified number
    let value = t.value;
    Ok(BoundResult {
        method: match side {
            Subsystem::A => Method::BetaA,
            Subsystem::B => Method::BetaB,
        },
        value,
        value_bits: value.log2(),
        certificate: Certificate::Triple(t),
        fw_gap_bits: None,
        penalty_bits: None,
        stats,
        certified: true,
        warnings,
        history: Vec::new(),
    })
}

/// `beta(sigma, rho_A)` with `K = rho_A` fixed.
pub fn beta_a(sigma: &BipartiteOp<f64>, rho_a: &HermitianOp<f64>) -> Result<BoundResult> {
    beta(sigma, Subsystem::A, rho_a, &SolverOptions::default())
}

/// `beta(sigma, rho_B)` with `L = rho_B` fixed.
pub fn beta_b(sigma: &BipartiteOp<f64>, rho_b: &HermitianOp<f64>) -> Result<BoundResult> {
    beta(sigma, Subsystem::B, rho_b, &SolverOptions::default())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaInit {
    /// Start from the dimension point on the side giving `min(d_A, d_B)`.
    Dimension,
    /// Run from both `K = sigma_A` and `L = sigma_B` and keep the better;
    /// the first half-steps are the two beta programs, so the result never
    /// exceeds either of them.
    Both,
}

#[derive(Clone, Debug)]
pub struct GammaOptions {
    pub max_rounds: usize,
    pub tol: f64,
    pub init: GammaInit,
    pub solver: SolverOptions,
}

impl Default for GammaOptions {
    fn default() -> Self {
        Self {
            max_rounds: 50,
            tol: 1e-7,
            init: GammaInit::Both,
            solver: SolverOptions::default(),
        }
    }
}

struct Alternation {
    best: FeasibleTriple,
    history: Vec<f64>,
    stats: SolverStats,
    warnings: Vec<String>,
}

fn alternate(
    sigma: &BipartiteOp<f64>,
    first: Subsystem,
    init: FeasibleTriple,
    opts: &GammaOptions,
) -> Result<Alternation> {
    let mut best = init;
    let mut history = vec![best.value];
    let mut stats = SolverStats::default();
    let mut warnings = Vec::new();
    let mut side = first;
    let mut prev_round = best.value;
    let mut current = best.clone();
    for _round in 0..opts.max_rounds {
        for _half in 0..2 {
            let fixed = match side {
                Subsystem::A => &current.k,
                Subsystem::B => &current.l,
            };
            let tr = fixed.trace();
            if tr <= 0.0 {
                warnings.push("fixed operator has non-positive trace; stopping".into());
                return Ok(Alternation {
                    best,
                    history,
                    stats,
                    warnings,
                });
            }
            let fixed = fixed.scaled(1.0 / tr);
            match solve_beta_triple(sigma, side, &fixed, &opts.solver, &mut warnings) {
                Ok((t, rep)) => {
                    stats.absorb(&rep);
                    history.push(t.value);
                    if t.value < best.value {
                        best = t.clone();
                    }
                    current = t;
                }
                Err(e) => {
                    warnings.push(format!("half-step on side {side:?} failed: {e}; keeping best so far"));
                    return Ok(Alternation {
                        best,
                        history,
                        stats,
                        warnings,
                    });
                }
            }
            side = side.other();
        }
        if prev_round - current.value < opts.tol {
            break;
        }
        prev_round = current.value;
    }
    Ok(Alternation {
        best,
        history,
        stats,
        warnings,
    })
}

/// Certified upper bound on `gamma(sigma)` by alternating the two beta
/// programs, each time with the pinned operator normalized to unit trace.
pub fn gamma_heuristic(sigma: &BipartiteOp<f64>, opts: &GammaOptions) -> Result<BoundResult> {
    sigma.op().check_psd()?;
    let start = Instant::now();
    let (da, db) = sigma.dims();
    let dim_side = if db <= da { Subsystem::A } else { Subsystem::B };
    let starts: Vec<Subsystem> = match opts.init {
        GammaInit::Dimension => vec![dim_side],
        GammaInit::Both => vec![Subsystem::A, Subsystem::B],
    };
    let mut best: Option<Alternation> = None;
    let mut stats = SolverStats::default();
    for s in starts {
        let init = dimension_point(sigma, s)?;
        let run = alternate(sigma, s, init, opts)?;
        stats.merge(&run.stats);
        if best.as_ref().is_none_or(|b| run.best.value < b.best.value) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one start");
    stats.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let value = run.best.value;
    Ok(BoundResult {
        method: Method::GammaHeuristic,
        value,
        value_bits: value.log2(),
        certified: run.best.is_verified(),
        certificate: Certificate::Triple(run.best),
        fw_gap_bits: None,
        penalty_bits: None,
        stats,
        warnings: run.warnings,
        history: run.history,
    })
}

fn log2_positive(value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value.log2())
    } else {
        Err(Error::Domain(format!("logarithm of non-positive value {value}")))
    }
}

/// `log2 gamma` in bits.
pub fn c_gamma(value: f64) -> Result<f64> {
    log2_positive(value)
}

/// `log2 beta` in bits.
pub fn c_beta(value: f64) -> Result<f64> {
    log2_positive(value)
}

fn dimension_point(sigma: &BipartiteOp<f64>, side: Subsystem) -> Result<FeasibleTriple> {
    let (da, db) = sigma.dims();
    let t = match side {
        Subsystem::A => {
            let k = marginal_op(sigma, Subsystem::A);
            let l = HermitianOp::identity(db);
            let v = tensor(&k, &l);
            FeasibleTriple::new(k, l, v)?
        }
        Subsystem::B => {
            let k = HermitianOp::identity(da);
            let l = marginal_op(sigma, Subsystem::B);
            let v = tensor(&k, &l);
            FeasibleTriple::new(k, l, v)?
        }
    };
    t.verified(sigma, CERT_TOL)
}

/// `(rho_A, I_B, rho_A (x) I_B)` with value `d_B`, or the mirror with value `d_A`.
pub fn dimension_feasible_point(rho: &DensityMatrix<f64>, side: Subsystem) -> Result<FeasibleTriple> {
    dimension_point(rho.bip(), side)
}

/// `(sigma_A, tau_B, sigma_A (x) tau_B)`, value 1, for the product `sigma_A (x) tau_B`.
pub fn product_state_triple(sigma_a: &HermitianOp<f64>, tau_b: &HermitianOp<f64>) -> Result<FeasibleTriple> {
    let v = tensor(sigma_a, tau_b);
    let t = FeasibleTriple::new(sigma_a.clone(), tau_b.clone(), v.clone())?;
    t.verified(&v, CERT_TOL)
}

/// `(N(K), M(L), (N (x) M)(V))`, feasible for `(N (x) M)(sigma)` with the same value.
pub fn dp_map_triple(
    t: &FeasibleTriple,
    sigma: &BipartiteOp<f64>,
    n: &QuantumChannel<f64>,
    m: &QuantumChannel<f64>,
) -> Result<FeasibleTriple> {
    let k = n.apply(&t.k)?;
    let l = m.apply(&t.l)?;
    let v = apply_local_channels(&t.v, n, m)?;
    let mapped_sigma = apply_local_channels(sigma, n, m)?;
    FeasibleTriple::new(k, l, v)?.verified(&mapped_sigma, CERT_TOL)
}

/// Move the classical register `X` from Bob's side to Alice's.
///
/// Input: a triple for the grouping `(A ; B X)` of a state classical on
/// `X`. Output: `(K (x) I_X, Tr_X L, Delta_X(V))` on `(A X ; B)`, whose
/// value is `d_X` times the input value.
pub fn comm_bound_map_triple(t: &FeasibleTriple, sigma_a_bx: &BipartiteOp<f64>, dx: usize) -> Result<FeasibleTriple> {
    let (da, dbx) = sigma_a_bx.dims();
    if dx == 0 || dbx % dx != 0 {
        return Err(Error::DimensionMismatch(format!(
            "register of size {dx} does not divide B-side dimension {dbx}"
        )));
    }
    let db = dbx / dx;
    let dims = [da, db, dx];
    let k = tensor(&t.k, &HermitianOp::identity(dx)).into_op();
    let l = HermitianOp::new(trace_subsystem(t.l.matrix(), &[db, dx], 1))?;
    let vd = dephase_subsystem(t.v.op().matrix(), &dims, 2);
    let v = BipartiteOp::new(HermitianOp::new(regroup_a_bx_to_ax_b(&vd, da, db, dx))?, da * dx, db)?;
    let sigma = BipartiteOp::new(
        HermitianOp::new(regroup_a_bx_to_ax_b(sigma_a_bx.op().matrix(), da, db, dx))?,
        da * dx,
        db,
    )?;
    FeasibleTriple::new(k, l, v)?.verified(&sigma, CERT_TOL)
}

/// `(K1 (x) K2, L1 (x) L2, V1 (x) V2)` for `sigma (x) tau`, regrouped `(A1 A2 ; B1 B2)`.
pub fn tensor_triple(
    t1: &FeasibleTriple,
    sigma: &BipartiteOp<f64>,
    t2: &FeasibleTriple,
    tau: &BipartiteOp<f64>,
) -> Result<FeasibleTriple> {
    let k = tensor(&t1.k, &t2.k).into_op();
    let l = tensor(&t1.l, &t2.l).into_op();
    let v = tensor_bipartite(&t1.v, &t2.v);
    FeasibleTriple::new(k, l, v)?.verified(&tensor_bipartite(sigma, tau), CERT_TOL)
}

/// `(L, K, swap V)`, feasible for the swapped operator.
pub fn swap_triple(t: &FeasibleTriple, sigma: &BipartiteOp<f64>) -> Result<FeasibleTriple> {
    FeasibleTriple::new(t.l.clone(), t.k.clone(), t.v.swap())?.verified(&sigma.swap(), CERT_TOL)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FidelityCheck {
    pub bound: f64,
    pub observed: f64,
}

/// `F(Phi_bar^d, sigma / g) <= 1/d` for `g` at least `gamma(sigma)`.
pub fn fidelity_bound_check(sigma: &BipartiteOp<f64>, g: f64, d: usize) -> Result<FidelityCheck> {
    if sigma.dims() != (d, d) {
        return Err(Error::DimensionMismatch(format!("sigma on {:?}, expected {d}x{d}", sigma.dims())));
    }
    if g <= 0.0 {
        return Err(Error::Domain(format!("normalization {g} must be positive")));
    }
    let phi = max_classically_correlated::<f64>(d);
    let observed = fidelity(phi.op(), &sigma.op().scaled(1.0 / g))?;
    let bound = 1.0 / d as f64;
    if observed > bound + 1e-6 {
        return Err(Error::ViolationDetected(format!(
            "fidelity {observed:.9} exceeds 1/{d} = {bound:.9}"
        )));
    }
    Ok(FidelityCheck { bound, observed })
}
