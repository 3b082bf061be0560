//! Divergences, Holevo information and the Frank-Wolfe computation of the
//! divergence bounds `Upsilon^A`, `Upsilon^B`.
//!
//! Point evaluations are generic over [`Real`]; the optimization runs in
//! `f64`.

use std::time::Instant;

use crate::conic::{AffineExpr, ConicProgram, LinearMap, Relation, ScalarExpr, SolverOptions, SolverStatus};
use crate::error::{Error, Result};
use crate::measures::{
    beta, BoundResult, Certificate, FeasibleTriple, Method, SigmaCertificate, SolverStats, CERT_TOL,
};
use crate::opalg::{
    matrix_function, partial_trace, schatten_norm, support_projector, support_threshold, tensor,
    BipartiteOp, CMat, DensityMatrix, HermitianOp, MatrixFunction, Subsystem, SupportPolicy,
};
use crate::scalar::Real;

/// Support inclusion fails when `||(I - P_sigma) rho (I - P_sigma)||_1` exceeds this.
pub const SUPPORT_LEAK_TOL: f64 = 1e-10;

/// `-sum_i p_i log2 p_i` with `0 log 0 = 0`.
fn shannon_bits<T: Real>(p: impl Iterator<Item = T>) -> T {
    p.fold(T::zero(), |acc, x| {
        if x > T::zero() && x != T::one() {
            acc - x * x.log2()
        } else {
            acc
        }
    })
}

/// Von Neumann entropy in bits; eigenvalues below the support threshold count as zero.
pub fn von_neumann_entropy<T: Real>(rho: &HermitianOp<T>) -> T {
    let vals = rho.eigenvalues();
    let lmax = vals.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    let floor = support_threshold(lmax);
    shannon_bits(vals.into_iter().filter(|&v| v > floor))
}

fn support_leak<T: Real>(rho: &HermitianOp<T>, sigma: &HermitianOp<T>) -> T {
    let n = rho.dim();
    let outside = &HermitianOp::identity(n) - &support_projector(sigma);
    let leak = rho.conjugate_by(outside.matrix());
    leak.eigenvalues().into_iter().fold(T::zero(), |a, v| a + v.abs())
}

fn check_pair<T: Real>(rho: &HermitianOp<T>, sigma: &HermitianOp<T>) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "divergence arguments of dims {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    rho.check_psd()?;
    sigma.check_psd()
}

/// `D(rho || sigma) = Tr[rho (log2 rho - log2 sigma)]`, `+inf` when the
/// support of `rho` is not contained in that of `sigma`.
pub fn relative_entropy<T: Real>(rho: &HermitianOp<T>, sigma: &HermitianOp<T>) -> Result<T> {
    check_pair(rho, sigma)?;
    if support_leak(rho, sigma) > T::lit(SUPPORT_LEAK_TOL) {
        return Ok(T::lit(f64::INFINITY));
    }
    let log_sigma = matrix_function(sigma, MatrixFunction::Log2, SupportPolicy::Restrict)?;
    Ok(-von_neumann_entropy(rho) - rho.inner(&log_sigma))
}

/// Sandwiched Renyi divergence
/// `(2 alpha / (alpha - 1)) log2 || sigma^((1-alpha)/(2 alpha)) rho^(1/2) ||_(2 alpha)`.
pub fn sandwiched_renyi<T: Real>(rho: &HermitianOp<T>, sigma: &HermitianOp<T>, alpha: T) -> Result<T> {
    if !(alpha > T::zero()) || alpha == T::one() {
        return Err(Error::Domain(format!("Renyi order {} not in (0,1) or (1,inf)", alpha.as_f64())));
    }
    check_pair(rho, sigma)?;
    let one = T::one();
    if alpha > one && support_leak(rho, sigma) > T::lit(SUPPORT_LEAK_TOL) {
        return Ok(T::lit(f64::INFINITY));
    }
    let expo = (one - alpha) / (T::lit(2.0) * alpha);
    let s_pow = matrix_function(sigma, MatrixFunction::Power(expo), SupportPolicy::Restrict)?;
    let r_half = matrix_function(rho, MatrixFunction::Sqrt, SupportPolicy::Restrict)?;
    let prod: CMat<T> = s_pow.matrix() * r_half.matrix();
    let p = T::lit(2.0) * alpha;
    if p >= one {
        let norm = schatten_norm(&prod, p);
        Ok(p / (alpha - one) * norm.log2())
    } else {
        // quasi-norm regime: Q = sum_i s_i^(2 alpha) directly
        let svd = nalgebra::SVD::new(prod, false, false);
        let q = svd.singular_values.iter().fold(T::zero(), |acc, &s| acc + s.powf(p));
        Ok(q.log2() / (alpha - one))
    }
}

/// Computational-basis measurement on a `d`-dimensional system.
pub fn computational_basis_povm<T: Real>(d: usize) -> Vec<HermitianOp<T>> {
    (0..d)
        .map(|k| {
            let mut v = vec![T::zero(); d];
            v[k] = T::one();
            HermitianOp::from_real_diagonal(&v)
        })
        .collect()
}

/// Holevo information of the ensemble on B induced by measuring A with `povm`.
pub fn holevo_of_measured_ensemble<T: Real>(rho: &DensityMatrix<T>, povm: &[HermitianOp<T>]) -> Result<T> {
    let (da, db) = rho.dims();
    if povm.is_empty() {
        return Err(Error::InvalidPovm("no effects".into()));
    }
    let mut total = HermitianOp::<T>::zeros(da);
    for (i, e) in povm.iter().enumerate() {
        if e.dim() != da {
            return Err(Error::InvalidPovm(format!("effect {i} has dim {}, expected {da}", e.dim())));
        }
        if e.check_psd().is_err() {
            return Err(Error::InvalidPovm(format!("effect {i} is not positive")));
        }
        total = &total + e;
    }
    let dev = (&total - &HermitianOp::identity(da)).max_abs();
    if dev > T::lit(1e-9) {
        return Err(Error::InvalidPovm(format!("effects sum to identity only within {:.3e}", dev.as_f64())));
    }
    let id_b = HermitianOp::<T>::identity(db);
    let mut avg = HermitianOp::<T>::zeros(db);
    let mut cond_entropy = T::zero();
    for e in povm {
        let proj = tensor(e, &id_b).into_op();
        let sqrt_e = matrix_function(&proj, MatrixFunction::Sqrt, SupportPolicy::Restrict)?;
        let post = rho.op().conjugate_by(sqrt_e.matrix());
        let unnorm = partial_trace(&BipartiteOp::new(post, da, db)?, Subsystem::A);
        let px = unnorm.trace();
        if px < T::lit(1e-12) {
            continue;
        }
        cond_entropy += px * von_neumann_entropy(&unnorm.scaled(T::one() / px));
        avg = &avg + &unnorm;
    }
    Ok(von_neumann_entropy(&avg) - cond_entropy)
}

/// Holevo information of `isotropic(d, p)` under computational-basis measurement.
pub fn isotropic_holevo_closed_form(d: usize, p: f64) -> Result<f64> {
    if d < 2 || !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("closed form needs d >= 2 and p in [0,1], got d={d}, p={p}")));
    }
    let df = d as f64;
    let xlogx = |x: f64| if x > 0.0 { x * x.log2() } else { 0.0 };
    let top = 1.0 - p + p / df;
    Ok(df.log2() + xlogx(top) + (df - 1.0) * xlogx(p / df))
}

#[derive(Clone, Debug)]
pub struct FwConfig {
    pub max_iters: usize,
    /// Stop once the Frank-Wolfe gap is at most this many bits.
    pub gap_tol_bits: f64,
    /// Support guard `sigma >= mu rho`.
    pub mu: f64,
    pub line_search_iters: usize,
    pub variant: FwVariant,
    pub lmo: SolverOptions,
}

/// Step rule of the conditional-gradient loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FwVariant {
    /// Classic steps toward the oracle answer.
    Vanilla,
    /// Also allow steps away from the worst atom in the active set.
    AwaySteps,
    /// Move weight directly from the worst atom to the oracle answer.
    Pairwise,
}

impl Default for FwConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            gap_tol_bits: 1e-4,
            mu: 1e-8,
            line_search_iters: 40,
            variant: FwVariant::Pairwise,
            lmo: SolverOptions::default(),
        }
    }
}

impl FwConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.line_search_iters == 0 {
            return Err(Error::Domain("iteration counts must be positive".into()));
        }
        if !(self.gap_tol_bits > 0.0) {
            return Err(Error::Domain("gap tolerance must be positive".into()));
        }
        if !(self.mu > 0.0 && self.mu <= 1e-4) {
            return Err(Error::Domain(format!("support guard mu = {} outside (0, 1e-4]", self.mu)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct UpsilonResult {
    pub side: Subsystem,
    pub value_bits: f64,
    pub sigma_star: BipartiteOp<f64>,
    pub fw_gap_bits: f64,
    /// `beta(sigma*, rho_side)` from an independent solve.
    pub beta_of_sigma: f64,
    pub beta_triple: FeasibleTriple,
    pub iterations: usize,
    pub converged: bool,
    /// `D(rho || sigma_t)` per iteration.
    pub history: Vec<f64>,
    pub stats: SolverStats,
    pub warnings: Vec<String>,
}

impl UpsilonResult {
    pub fn certified(&self) -> bool {
        self.beta_of_sigma <= 1.0 + CERT_TOL && self.beta_triple.is_verified()
    }
}

/// `Tr[rho log2 sigma]` and its gradient in `sigma`, for `sigma` whose
/// support contains that of `rho`.
struct LogTerm {
    value: f64,
    grad: HermitianOp<f64>,
}

fn log_term(rho: &HermitianOp<f64>, sigma: &HermitianOp<f64>) -> LogTerm {
    let eig = sigma.eigh();
    let lam = &eig.values;
    let n = lam.len();
    let lmax = lam.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let floor = support_threshold(lmax);
    let u = &eig.vectors;
    let rt = u.adjoint() * rho.matrix() * u;
    let ln2 = std::f64::consts::LN_2;
    let mut value = 0.0;
    let mut g = CMat::<f64>::zeros(n, n);
    for i in 0..n {
        if lam[i] <= floor {
            continue;
        }
        value += rt[(i, i)].re * lam[i].ln() / ln2;
        for j in 0..n {
            if lam[j] <= floor {
                continue;
            }
            // first divided difference of ln, with the diagonal branch for near-equal eigenvalues
            let dd = if (lam[i] - lam[j]).abs() < 1e-12 * lmax {
                2.0 / (lam[i] + lam[j])
            } else {
                (lam[i].ln() - lam[j].ln()) / (lam[i] - lam[j])
            };
            g[(i, j)] = rt[(i, j)] * dd / ln2;
        }
    }
    // g is Hermitian up to the roundoff in rt; from_raw absorbs it
    let grad = HermitianOp::from_raw(u * g * u.adjoint());
    LogTerm { value, grad }
}

/// `D(rho || sigma)` and its gradient `-(1/ln 2) L_sigma[rho]` for the Frank-Wolfe loop.
fn objective(rho: &HermitianOp<f64>, neg_entropy: f64, sigma: &HermitianOp<f64>) -> (f64, HermitianOp<f64>) {
    let lt = log_term(rho, sigma);
    (neg_entropy - lt.value, lt.grad.scaled(-1.0))
}

/// Directional derivative of `D(rho || sigma)` along `h`.
pub fn relative_entropy_gradient(rho: &HermitianOp<f64>, sigma: &HermitianOp<f64>) -> HermitianOp<f64> {
    log_term(rho, sigma).grad.scaled(-1.0)
}

/// Oracle program: minimize `<G, s>` over the guarded feasible set on `side`.
struct Lmo {
    s: HermitianOp<f64>,
    free: HermitianOp<f64>,
    v: HermitianOp<f64>,
    stats_iters: usize,
    status: SolverStatus,
}

fn solve_lmo(
    rho: &BipartiteOp<f64>,
    side: Subsystem,
    fixed: &HermitianOp<f64>,
    g: &HermitianOp<f64>,
    mu: f64,
    opts: &SolverOptions,
) -> Lmo {
    let (da, db) = rho.dims();
    let n = da * db;
    let mut p = ConicProgram::new();
    let s = p.add_variable("sigma", n);
    let free_dim = if side == Subsystem::A { db } else { da };
    let free = p.add_variable(if side == Subsystem::A { "L" } else { "K" }, free_dim);
    let v = p.add_variable("V", n);
    let pt = LinearMap::PartialTranspose {
        da,
        db,
        sys: Subsystem::B,
    };
    let kron = match side {
        Subsystem::A => LinearMap::KronLeft(fixed.clone()),
        Subsystem::B => LinearMap::KronRight(fixed.clone()),
    };
    p.minimize(ScalarExpr::new().inner(s, g.clone())).expect("dims");
    p.add_psd(
        "T_B(V+s)",
        AffineExpr::new(n).term(v, pt.clone(), 1.0).term(s, pt.clone(), 1.0),
    )
    .expect("dims");
    p.add_psd("T_B(V-s)", AffineExpr::new(n).term(v, pt.clone(), 1.0).term(s, pt, -1.0))
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
    p.add_psd(
        "s-mu rho",
        AffineExpr::new(n)
            .term(s, LinearMap::Identity, 1.0)
            .constant(&rho.op().scaled(-mu)),
    )
    .expect("dims");
    p.add_linear(
        "beta<=1",
        ScalarExpr::new().trace(free, free_dim, -fixed.trace()).plus_constant(1.0),
        Relation::NonNegative,
    )
    .expect("dims");
    let rep = p.solve(opts);
    Lmo {
        s: rep.value(s).clone(),
        free: rep.value(free).clone(),
        v: rep.value(v).clone(),
        stats_iters: rep.iterations,
        status: rep.status,
    }
}

/// One oracle answer `(s, free operator, V)`; iterates are convex
/// combinations of atoms, so their certificates are too.
#[derive(Clone, Debug)]
struct Atom {
    s: HermitianOp<f64>,
    free: HermitianOp<f64>,
    v: HermitianOp<f64>,
}

impl Atom {
    fn same(&self, o: &Atom) -> bool {
        (&self.s - &o.s).max_abs() < 1e-12 && (&self.free - &o.free).max_abs() < 1e-12 && (&self.v - &o.v).max_abs() < 1e-12
    }
}

/// Step minimizing `D(rho || sigma + t dir)` over `[0, t_max]` by
/// bisection on the derivative.
fn line_search(rho: &HermitianOp<f64>, sigma: &HermitianOp<f64>, dir: &HermitianOp<f64>, t_max: f64, iters: usize) -> f64 {
    let deriv = |t: f64| relative_entropy_gradient(rho, &(sigma + &dir.scaled(t))).inner(dir);
    if deriv(t_max) <= 0.0 {
        return t_max;
    }
    let (mut lo, mut hi) = (0.0, t_max);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if deriv(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Weighted active set of atoms with the iterate kept in sync.
struct ActiveSet {
    atoms: Vec<Atom>,
    weights: Vec<f64>,
    current: Atom,
}

impl ActiveSet {
    fn new(a: Atom) -> Self {
        Self {
            current: a.clone(),
            atoms: vec![a],
            weights: vec![1.0],
        }
    }

    fn index_of(&mut self, a: Atom) -> usize {
        if let Some(i) = self.atoms.iter().position(|b| b.same(&a)) {
            return i;
        }
        self.atoms.push(a);
        self.weights.push(0.0);
        self.atoms.len() - 1
    }

    /// Atom maximizing `<G, s>` among those with positive weight.
    fn away_atom(&self, g: &HermitianOp<f64>) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, a) in self.atoms.iter().enumerate() {
            if self.weights[i] > 0.0 {
                let v = g.inner(&a.s);
                if v > best.0 {
                    best = (v, i);
                }
            }
        }
        best.1
    }

    /// `weights <- (1 - t) weights + t e_to`.
    fn toward(&mut self, to: usize, t: f64) {
        for w in &mut self.weights {
            *w *= 1.0 - t;
        }
        self.weights[to] += t;
        self.rebuild();
    }

    /// `weights <- (1 + t) weights - t e_from`.
    fn away_from(&mut self, from: usize, t: f64) {
        for w in &mut self.weights {
            *w *= 1.0 + t;
        }
        self.weights[from] -= t;
        self.rebuild();
    }

    /// Move weight `t` from one atom to another.
    fn shift(&mut self, from: usize, to: usize, t: f64) {
        self.weights[from] -= t;
        self.weights[to] += t;
        self.rebuild();
    }

    fn rebuild(&mut self) {
        for w in &mut self.weights {
            if *w < 1e-14 {
                *w = 0.0;
            }
        }
        let total: f64 = self.weights.iter().sum();
        let mut keep_atoms = Vec::new();
        let mut keep_w = Vec::new();
        for (a, &w) in self.atoms.iter().zip(&self.weights) {
            if w > 0.0 {
                keep_atoms.push(a.clone());
                keep_w.push(w / total);
            }
        }
        self.atoms = keep_atoms;
        self.weights = keep_w;
        let mut s = self.atoms[0].s.scaled(self.weights[0]);
        let mut f = self.atoms[0].free.scaled(self.weights[0]);
        let mut v = self.atoms[0].v.scaled(self.weights[0]);
        for (a, &w) in self.atoms.iter().zip(&self.weights).skip(1) {
            s = &s + &a.s.scaled(w);
            f = &f + &a.free.scaled(w);
            v = &v + &a.v.scaled(w);
        }
        self.current = Atom { s, free: f, v };
    }
}

/// Frank-Wolfe minimization of `D(rho || sigma)` over
/// `{sigma : beta(sigma, rho_side) <= 1, sigma >= mu rho}`.
pub fn upsilon(rho: &DensityMatrix<f64>, side: Subsystem, cfg: &FwConfig) -> Result<UpsilonResult> {
    cfg.validate()?;
    let start = Instant::now();
    let bip = rho.bip();
    let (da, db) = bip.dims();
    let r = rho.op();
    let rho_a = partial_trace(bip, Subsystem::B);
    let rho_b = partial_trace(bip, Subsystem::A);
    let fixed = match side {
        Subsystem::A => rho_a.clone(),
        Subsystem::B => rho_b.clone(),
    };
    let neg_entropy = -von_neumann_entropy(r);
    let mut warnings = Vec::new();
    let mut stats = SolverStats::default();

    // product of marginals, certified by (L, V) = (rho_B, rho_A (x) rho_B) or its mirror
    let sigma = tensor(&rho_a, &rho_b).into_op();
    let free = match side {
        Subsystem::A => rho_b.clone(),
        Subsystem::B => rho_a.clone(),
    };
    let v = sigma.clone();
    if (&sigma - &r.scaled(cfg.mu)).min_eigenvalue() < -1e-12 {
        return Err(Error::Domain(
            "product of marginals violates the support guard; decrease mu".into(),
        ));
    }

    let mut set = ActiveSet::new(Atom {
        s: sigma,
        free,
        v,
    });
    let (mut value, mut grad) = objective(r, neg_entropy, &set.current.s);
    let mut history = vec![value];
    let mut inexact_oracles = 0usize;
    let mut gap = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..cfg.max_iters {
        iterations = it + 1;
        let lmo = solve_lmo(bip, side, &fixed, &grad, cfg.mu, &cfg.lmo);
        stats.iterations += lmo.stats_iters;
        stats.solves += 1;
        if !matches!(lmo.status, SolverStatus::Optimal | SolverStatus::NumericalTrouble) {
            if it == 0 {
                return Err(Error::SolverFailure { status: lmo.status });
            }
            warnings.push(format!("oracle status {:?} at iteration {it}; stopping", lmo.status));
            break;
        }
        if lmo.status == SolverStatus::NumericalTrouble {
            inexact_oracles += 1;
        }
        let sigma = set.current.s.clone();
        gap = grad.inner(&(&sigma - &lmo.s));
        if gap <= cfg.gap_tol_bits {
            converged = true;
            break;
        }
        let to = set.index_of(Atom {
            s: lmo.s,
            free: lmo.free,
            v: lmo.v,
        });
        let from = set.away_atom(&grad);
        let away_gap = grad.inner(&(&set.atoms[from].s - &sigma));
        let step = match cfg.variant {
            FwVariant::Vanilla => None,
            FwVariant::AwaySteps if away_gap > gap => {
                let w = set.weights[from];
                let t_max = if w < 1.0 { w / (1.0 - w) } else { f64::INFINITY };
                Some((from, &sigma - &set.atoms[from].s, t_max))
            }
            FwVariant::AwaySteps => None,
            FwVariant::Pairwise => Some((from, &set.atoms[to].s - &set.atoms[from].s, set.weights[from])),
        };
        let moved = match step {
            None => {
                let dir = &set.atoms[to].s - &sigma;
                let t = line_search(r, &sigma, &dir, 1.0, cfg.line_search_iters);
                if t > 0.0 {
                    set.toward(to, t);
                }
                t
            }
            Some((from, dir, t_max)) if t_max.is_finite() && from != to => {
                let t = line_search(r, &sigma, &dir, t_max, cfg.line_search_iters);
                if t > 0.0 {
                    match cfg.variant {
                        FwVariant::Pairwise => set.shift(from, to, t),
                        _ => set.away_from(from, t),
                    }
                }
                t
            }
            Some(_) => {
                let dir = &set.atoms[to].s - &sigma;
                let t = line_search(r, &sigma, &dir, 1.0, cfg.line_search_iters);
                if t > 0.0 {
                    set.toward(to, t);
                }
                t
            }
        };
        if moved <= 0.0 {
            warnings.push(format!("line search returned zero step at iteration {it}"));
            break;
        }
        let (nv, ng) = objective(r, neg_entropy, &set.current.s);
        value = nv;
        grad = ng;
        history.push(value);
    }
    if inexact_oracles > 0 {
        warnings.push(format!("{inexact_oracles} oracle solves stopped at reduced precision"));
    }
    if !converged && iterations == cfg.max_iters {
        warnings.push(format!("iteration limit reached with gap {gap:.3e} bits"));
    }
    let Atom { s: sigma, free, v } = set.current;

    let mut sigma_star = BipartiteOp::new(sigma, da, db)?;
    let mut value_bits = relative_entropy(r, sigma_star.op())?;
    let tracked = match side {
        Subsystem::A => FeasibleTriple::new(fixed.clone(), free, BipartiteOp::new(v, da, db)?)?,
        Subsystem::B => FeasibleTriple::new(free, fixed.clone(), BipartiteOp::new(v, da, db)?)?,
    };
    if crate::conic::verify_feasible(&tracked, &sigma_star, CERT_TOL)?.ok {
        if tracked.value > 1.0 + CERT_TOL {
            warnings.push(format!("tracked certificate value {:.9}", tracked.value));
        }
    } else {
        warnings.push("tracked Frank-Wolfe certificate failed verification".into());
    }

    let mut beta_res = beta(&sigma_star, side, &fixed, &cfg.lmo)?;
    stats.merge(&beta_res.stats);
    if beta_res.value > 1.0 {
        // sigma*/beta has beta exactly 1 and costs log2(beta) bits
        let b = beta_res.value;
        if b > 1.0 + CERT_TOL {
            warnings.push(format!("re-solved beta {b:.12} > 1; sigma* rescaled by 1/beta"));
        }
        sigma_star = sigma_star.scaled(1.0 / b);
        value_bits = relative_entropy(r, sigma_star.op())?;
        beta_res = beta(&sigma_star, side, &fixed, &cfg.lmo)?;
        stats.merge(&beta_res.stats);
    }
    warnings.extend(beta_res.warnings.iter().cloned());
    let beta_triple = match beta_res.certificate {
        Certificate::Triple(t) => t,
        _ => unreachable!("beta returns a triple"),
    };
    stats.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(UpsilonResult {
        side,
        value_bits,
        sigma_star,
        fw_gap_bits: gap,
        beta_of_sigma: beta_res.value,
        beta_triple,
        iterations,
        converged,
        history,
        stats,
        warnings,
    })
}

pub fn upsilon_a(rho: &DensityMatrix<f64>, cfg: &FwConfig) -> Result<UpsilonResult> {
    upsilon(rho, Subsystem::A, cfg)
}

pub fn upsilon_b(rho: &DensityMatrix<f64>, cfg: &FwConfig) -> Result<UpsilonResult> {
    upsilon(rho, Subsystem::B, cfg)
}

fn sigma_certificate(u: &UpsilonResult) -> SigmaCertificate {
    SigmaCertificate {
        side: u.side,
        sigma: u.sigma_star.clone(),
        beta: u.beta_of_sigma,
        triple: u.beta_triple.clone(),
    }
}

/// Package one Frank-Wolfe run as a bound.
pub fn upsilon_bound(u: &UpsilonResult) -> BoundResult {
    BoundResult {
        method: match u.side {
            Subsystem::A => Method::UpsilonA,
            Subsystem::B => Method::UpsilonB,
        },
        value: u.value_bits,
        value_bits: u.value_bits,
        certificate: Certificate::Sigma(vec![sigma_certificate(u)]),
        fw_gap_bits: Some(u.fw_gap_bits),
        penalty_bits: None,
        stats: u.stats,
        certified: u.certified(),
        warnings: u.warnings.clone(),
        history: u.history.clone(),
    }
}

/// `min{Upsilon^A, Upsilon^B}` from two finished runs; both certificates are kept.
pub fn combine_min(a: &UpsilonResult, b: &UpsilonResult) -> BoundResult {
    let best = if a.value_bits <= b.value_bits { a } else { b };
    let mut stats = a.stats;
    stats.merge(&b.stats);
    let mut warnings: Vec<String> = a.warnings.iter().map(|w| format!("A: {w}")).collect();
    warnings.extend(b.warnings.iter().map(|w| format!("B: {w}")));
    BoundResult {
        method: Method::UpperBoundMin,
        value: best.value_bits,
        value_bits: best.value_bits,
        certificate: Certificate::Sigma(vec![sigma_certificate(a), sigma_certificate(b)]),
        fw_gap_bits: Some(best.fw_gap_bits),
        penalty_bits: None,
        stats,
        certified: best.certified(),
        warnings,
        history: Vec::new(),
    }
}

pub fn upper_bound_min(rho: &DensityMatrix<f64>, cfg: &FwConfig) -> Result<BoundResult> {
    let a = upsilon_a(rho, cfg)?;
    let b = upsilon_b(rho, cfg)?;
    Ok(combine_min(&a, &b))
}

/// `(alpha / (alpha - 1)) log2(1 / (1 - eps))`.
pub fn one_shot_penalty(eps: f64, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("eps = {eps} outside [0, 1)")));
    }
    if !(alpha > 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must exceed 1")));
    }
    Ok(alpha / (alpha - 1.0) * -(1.0 - eps).log2())
}

/// One-shot bound from finished runs: `min_X D_alpha(rho || sigma*_X)` plus the penalty.
pub fn one_shot_from(rho: &DensityMatrix<f64>, runs: &[&UpsilonResult], eps: f64, alpha: f64) -> Result<BoundResult> {
    let penalty = one_shot_penalty(eps, alpha)?;
    let mut best = f64::INFINITY;
    let mut stats = SolverStats::default();
    let mut certified = false;
    for u in runs {
        let d = sandwiched_renyi(rho.op(), u.sigma_star.op(), alpha)?;
        stats.merge(&u.stats);
        if d < best {
            best = d;
            certified = u.certified();
        }
    }
    Ok(BoundResult {
        method: Method::OneShot,
        value: best + penalty,
        value_bits: best + penalty,
        certificate: Certificate::Sigma(runs.iter().map(|u| sigma_certificate(u)).collect()),
        fw_gap_bits: None,
        penalty_bits: Some(penalty),
        stats,
        certified,
        warnings: Vec::new(),
        history: Vec::new(),
    })
}

pub fn one_shot_upper_bound(rho: &DensityMatrix<f64>, eps: f64, alpha: f64, cfg: &FwConfig) -> Result<BoundResult> {
    one_shot_penalty(eps, alpha)?;
    let a = upsilon_a(rho, cfg)?;
    let b = upsilon_b(rho, cfg)?;
    one_shot_from(rho, &[&a, &b], eps, alpha)
}
