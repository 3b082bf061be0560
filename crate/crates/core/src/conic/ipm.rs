//! Primal-dual interior-point method for block-diagonal linear matrix
//! inequalities.
//!
//! Problem form:
//!
//! ```text
//! minimize    c^T y
//! subject to  Z(y) = F_0 + sum_i y_i F_i  >= 0      (block diagonal)
//! ```
//!
//! with dual `maximize -<F_0, W>` over `W >= 0`, `<F_i, W> = c_i`. Search
//! directions are HKM with a Mehrotra predictor-corrector; the start is
//! infeasible (`W = xi I`, `Z = eta I`, `y = 0`).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::SolverStatus;

/// Symmetric sparse matrix stored with both triangles.
#[derive(Clone, Debug, Default)]
pub struct SparseSym {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    /// Nonzero pattern of a dense symmetric matrix.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn dot(&self, m: &DMatrix<f64>) -> f64 {
        self.entries.iter().map(|&(i, j, v)| v * m[(i, j)]).sum()
    }

    fn add_scaled_to(&self, k: f64, m: &mut DMatrix<f64>) {
        for &(i, j, v) in &self.entries {
            m[(i, j)] += k * v;
        }
    }

    fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.2).sum()
    }
}

/// One diagonal block `F_0 + sum_i y_i F_i` of the inequality.
#[derive(Clone, Debug)]
pub struct LmiBlock {
    pub dim: usize,
    pub f0: DMatrix<f64>,
    /// `(variable index, F_i)` for the variables that touch this block.
    pub terms: Vec<(usize, SparseSym)>,
}

#[derive(Clone, Debug)]
pub struct LmiProblem {
    pub c: Vec<f64>,
    pub blocks: Vec<LmiBlock>,
}

impl LmiProblem {
    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// `Z(y)` block by block.
    pub fn evaluate(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|b| {
                let mut z = b.f0.clone();
                for (i, f) in &b.terms {
                    f.add_scaled_to(y[*i], &mut z);
                }
                z
            })
            .collect()
    }

    /// `(<F_i, W>)_i`.
    fn adjoint(&self, w: &[DMatrix<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vars()];
        for (b, wb) in self.blocks.iter().zip(w) {
            for (i, f) in &b.terms {
                out[*i] += f.dot(wb);
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Relative primal and dual infeasibility target.
    pub feas_tol: f64,
    /// Relative duality gap target.
    pub gap_tol: f64,
    pub max_iters: usize,
    /// Print the program in plain text before solving.
    pub dump: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iters: 200,
            dump: false,
        }
    }
}

/// Backend answer in LMI coordinates.
#[derive(Clone, Debug)]
pub struct RawSolution {
    pub status: SolverStatus,
    pub y: Vec<f64>,
    pub w: Vec<DMatrix<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
}

/// A solver for [`LmiProblem`]s.
pub trait SdpBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, problem: &LmiProblem, opts: &SolverOptions) -> RawSolution;
}

/// Bundled HKM predictor-corrector backend.
#[derive(Clone, Copy, Debug, Default)]
pub struct InteriorPoint;

const BLOWUP: f64 = 1e10;
/// Iterations without a 10% drop in the worst residual before giving up.
const STALL_ITERS: usize = 8;
/// Worst residual at which a stalled run is still returned as usable.
const STALL_ACCEPT: f64 = 1e-6;

fn block_dot(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn block_norm(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn inverse_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    Cholesky::new(m.clone()).map(|c| c.inverse())
}

/// Largest `a` with `x + a dx >= 0`, for `x > 0` (infinite if unbounded).
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    if n == 1 {
        return if dx[(0, 0)] < 0.0 { -x[(0, 0)] / dx[(0, 0)] } else { f64::INFINITY };
    }
    let Some(ch) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = ch.l();
    let Some(linv) = l.clone().try_inverse() else {
        return 0.0;
    };
    let s = sym(&linv * dx * linv.transpose());
    let lmin = s.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

struct Newton {
    dy: DVector<f64>,
    dz: Vec<DMatrix<f64>>,
    dw: Vec<DMatrix<f64>>,
}

struct State<'a> {
    p: &'a LmiProblem,
    c: Vec<f64>,
    y: Vec<f64>,
    z: Vec<DMatrix<f64>>,
    w: Vec<DMatrix<f64>>,
}

impl<'a> State<'a> {
    fn residuals(&self) -> (Vec<f64>, Vec<DMatrix<f64>>) {
        let aw = self.p.adjoint(&self.w);
        let rp: Vec<f64> = self.c.iter().zip(&aw).map(|(c, a)| c - a).collect();
        let zy = self.p.evaluate(&self.y);
        let rd = zy.into_iter().zip(&self.z).map(|(a, z)| a - z).collect();
        (rp, rd)
    }

    /// HKM Schur complement `M_ij = Tr[F_i W F_j Z^{-1}]`.
    fn schur(&self, zinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let n = self.p.n_vars();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for ((blk, w), zi) in self.p.blocks.iter().zip(&self.w).zip(zinv) {
            let dim = blk.dim;
            for (j, fj) in &blk.terms {
                // Q = W F_j touches only the columns F_j touches
                let mut cols: Vec<usize> = fj.entries.iter().map(|e| e.1).collect();
                cols.sort_unstable();
                cols.dedup();
                let mut q = DMatrix::<f64>::zeros(dim, cols.len());
                for &(r, cidx, v) in &fj.entries {
                    let k = cols.binary_search(&cidx).expect("column present");
                    for a in 0..dim {
                        q[(a, k)] += w[(a, r)] * v;
                    }
                }
                let mut zrows = DMatrix::<f64>::zeros(cols.len(), dim);
                for (k, &cidx) in cols.iter().enumerate() {
                    zrows.set_row(k, &zi.row(cidx));
                }
                let pj = q * zrows;
                for (i, fi) in &blk.terms {
                    let v: f64 = fi.entries.iter().map(|&(r, cc, val)| val * pj[(cc, r)]).sum();
                    m[(*i, *j)] += v;
                }
            }
        }
        sym(m)
    }

    fn direction(
        &self,
        chol: &Cholesky<f64, Dyn>,
        zinv: &[DMatrix<f64>],
        rp: &[f64],
        rd: &[DMatrix<f64>],
        target: f64,
        corr: Option<&Newton>,
    ) -> Newton {
        // H = (R - W Rd) Z^{-1}, R = target I - W Z - dW_a dZ_a
        let h: Vec<DMatrix<f64>> = (0..self.p.blocks.len())
            .map(|b| {
                let w = &self.w[b];
                let zi = &zinv[b];
                let mut hb = zi * target - w - w * &rd[b] * zi;
                if let Some(c) = corr {
                    hb -= &c.dw[b] * &c.dz[b] * zi;
                }
                hb
            })
            .collect();
        let ah = self.p.adjoint(&h);
        let rhs = DVector::from_iterator(rp.len(), ah.iter().zip(rp).map(|(a, r)| a - r));
        let dy = chol.solve(&rhs);
        let mut dz: Vec<DMatrix<f64>> = rd.to_vec();
        for (blk, dzb) in self.p.blocks.iter().zip(dz.iter_mut()) {
            for (i, f) in &blk.terms {
                f.add_scaled_to(dy[*i], dzb);
            }
        }
        let dw = (0..self.p.blocks.len())
            .map(|b| sym(&h[b] + &self.w[b] * &rd[b] * &zinv[b] - &self.w[b] * &dz[b] * &zinv[b]))
            .collect();
        Newton { dy, dz, dw }
    }
}

fn factor_schur(m: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Some(ch);
    }
    let scale = (0..m.nrows()).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    for k in [1e-14, 1e-12, 1e-10] {
        let mut reg = m.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += k * scale;
        }
        if let Some(ch) = Cholesky::new(reg) {
            return Some(ch);
        }
    }
    None
}

impl SdpBackend for InteriorPoint {
    fn name(&self) -> &'static str {
        "hkm-interior-point"
    }

    fn solve(&self, p: &LmiProblem, opts: &SolverOptions) -> RawSolution {
        let n = p.n_vars();
        let ntot = p.total_dim().max(1) as f64;

        // the objective is normalized; values are scaled back on exit
        let cscale = p.c.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
        let cscale = if p.c.iter().all(|&v| v == 0.0) { 1.0 } else { cscale };
        let c: Vec<f64> = p.c.iter().map(|v| v / cscale).collect();

        let mut fnorm = vec![0.0f64; n];
        for b in &p.blocks {
            for (i, f) in &b.terms {
                fnorm[*i] += f.frobenius_sq();
            }
        }
        let fnorm: Vec<f64> = fnorm.into_iter().map(f64::sqrt).collect();
        let f0norm = p.blocks.iter().map(|b| b.f0.norm_squared()).sum::<f64>().sqrt();
        let cnorm = c.iter().map(|v| v * v).sum::<f64>().sqrt();

        let xi = (0..n)
            .map(|i| ntot * (1.0 + c[i].abs()) / (1.0 + fnorm[i]))
            .fold(10.0f64.max(ntot.sqrt()), f64::max);
        let eta = fnorm.iter().copied().fold(10.0f64.max(ntot.sqrt()).max(f0norm), f64::max);

        let mut st = State {
            p,
            c,
            y: vec![0.0; n],
            z: p.blocks.iter().map(|b| DMatrix::identity(b.dim, b.dim) * eta).collect(),
            w: p.blocks.iter().map(|b| DMatrix::identity(b.dim, b.dim) * xi).collect(),
        };

        let finish = |st: &State, status: SolverStatus, iters: usize, pinf: f64, dinf: f64| {
            let pobj = st.c.iter().zip(&st.y).map(|(a, b)| a * b).sum::<f64>() * cscale;
            let dobj = -p.blocks.iter().zip(&st.w).map(|(b, w)| b.f0.dot(w)).sum::<f64>() * cscale;
            RawSolution {
                status,
                y: st.y.clone(),
                w: st.w.iter().map(|w| w * cscale).collect(),
                primal_objective: pobj,
                dual_objective: dobj,
                primal_infeasibility: dinf,
                dual_infeasibility: pinf,
                iterations: iters,
            }
        };

        let mut last = (f64::INFINITY, f64::INFINITY);
        let (mut best_merit, mut best_iter) = (f64::INFINITY, 0usize);
        for iter in 0..opts.max_iters {
            let (rp, rd) = st.residuals();
            let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + cnorm);
            let dinf = block_norm(&rd) / (1.0 + f0norm);
            last = (pinf, dinf);
            let pobj: f64 = st.c.iter().zip(&st.y).map(|(a, b)| a * b).sum();
            let dobj: f64 = -p.blocks.iter().zip(&st.w).map(|(b, w)| b.f0.dot(w)).sum::<f64>();
            let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let compl = block_dot(&st.w, &st.z) / (1.0 + pobj.abs() + dobj.abs());
            if pinf < opts.feas_tol && dinf < opts.feas_tol && relgap < opts.gap_tol && compl < opts.gap_tol {
                return finish(&st, SolverStatus::Optimal, iter, pinf, dinf);
            }
            // precision plateau: residuals small but no longer improving
            let merit = pinf.max(dinf).max(relgap).max(compl);
            if merit < 0.9 * best_merit {
                best_merit = merit;
                best_iter = iter;
            } else if iter >= best_iter + STALL_ITERS && merit < STALL_ACCEPT {
                return finish(&st, SolverStatus::NumericalTrouble, iter, pinf, dinf);
            }

            // certificates of infeasibility appear as diverging iterates
            let wnorm = block_norm(&st.w);
            if wnorm > BLOWUP {
                let f0w: f64 = p.blocks.iter().zip(&st.w).map(|(b, w)| b.f0.dot(w)).sum::<f64>() / wnorm;
                let aw = p.adjoint(&st.w);
                let anorm = aw.iter().map(|v| v * v).sum::<f64>().sqrt() / wnorm;
                if f0w < 0.0 && anorm < 1e-6 * f0w.abs().max(1e-12) * 1e3 {
                    return finish(&st, SolverStatus::Infeasible, iter, pinf, dinf);
                }
            }
            let ynorm = st.y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if ynorm > BLOWUP {
                let cy: f64 = st.c.iter().zip(&st.y).map(|(a, b)| a * b).sum::<f64>() / ynorm;
                if cy < 0.0 {
                    let yn: Vec<f64> = st.y.iter().map(|v| v / ynorm).collect();
                    let mut ok = true;
                    for blk in &p.blocks {
                        let mut d = DMatrix::<f64>::zeros(blk.dim, blk.dim);
                        for (i, f) in &blk.terms {
                            f.add_scaled_to(yn[*i], &mut d);
                        }
                        let lmin = d.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
                        if lmin < -1e-6 * cy.abs() {
                            ok = false;
                        }
                    }
                    if ok {
                        return finish(&st, SolverStatus::Unbounded, iter, pinf, dinf);
                    }
                }
            }

            let Some(zinv) = st.z.iter().map(inverse_spd).collect::<Option<Vec<_>>>() else {
                return finish(&st, SolverStatus::NumericalTrouble, iter, pinf, dinf);
            };
            let mu = block_dot(&st.w, &st.z) / ntot;
            let Some(chol) = factor_schur(st.schur(&zinv)) else {
                return finish(&st, SolverStatus::NumericalTrouble, iter, pinf, dinf);
            };

            let pred = st.direction(&chol, &zinv, &rp, &rd, 0.0, None);
            let ap = st.w.iter().zip(&pred.dw).map(|(w, d)| max_step(w, d)).fold(f64::INFINITY, f64::min).min(1.0);
            let ad = st.z.iter().zip(&pred.dz).map(|(z, d)| max_step(z, d)).fold(f64::INFINITY, f64::min).min(1.0);
            let w_aff: Vec<_> = st.w.iter().zip(&pred.dw).map(|(w, d)| w + d * ap).collect();
            let z_aff: Vec<_> = st.z.iter().zip(&pred.dz).map(|(z, d)| z + d * ad).collect();
            let mu_aff = block_dot(&w_aff, &z_aff) / ntot;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            let corr = st.direction(&chol, &zinv, &rp, &rd, sigma * mu, Some(&pred));
            let ap = st.w.iter().zip(&corr.dw).map(|(w, d)| max_step(w, d)).fold(f64::INFINITY, f64::min);
            let ad = st.z.iter().zip(&corr.dz).map(|(z, d)| max_step(z, d)).fold(f64::INFINITY, f64::min);
            let frac = 0.9 + 0.09 * ap.min(ad).min(1.0);
            let ap = (frac * ap).min(1.0);
            let ad = (frac * ad).min(1.0);
            if ap < 1e-12 && ad < 1e-12 {
                return finish(&st, SolverStatus::NumericalTrouble, iter, pinf, dinf);
            }
            for (w, d) in st.w.iter_mut().zip(&corr.dw) {
                *w += d * ap;
            }
            for (z, d) in st.z.iter_mut().zip(&corr.dz) {
                *z += d * ad;
            }
            for (y, d) in st.y.iter_mut().zip(corr.dy.iter()) {
                *y += d * ad;
            }
            if st.w.iter().chain(&st.z).any(|m| m.iter().any(|v| !v.is_finite())) {
                return finish(&st, SolverStatus::NumericalTrouble, iter, pinf, dinf);
            }
        }
        finish(&st, SolverStatus::IterationLimit, opts.max_iters, last.0, last.1)
    }
}
