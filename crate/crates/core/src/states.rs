//! Named states, channels and seeded random instances.
//!
//! Random instances draw from `ChaCha8Rng::seed_from_u64(seed)`; Gaussian
//! entries come from `rand_distr::StandardNormal` sampled in `f64` and then
//! converted, so `f32` and `f64` instances share one stream.

use nalgebra::{Complex, ComplexField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::opalg::{permute_subsystems, tensor, BipartiteOp, CMat, DensityMatrix, HermitianOp};
use crate::scalar::Real;

fn cz<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// `(1/d) sum_m |mm><mm|`.
pub fn max_classically_correlated<T: Real>(d: usize) -> DensityMatrix<T> {
    assert!(d >= 1);
    let mut m = CMat::<T>::zeros(d * d, d * d);
    let w = cz::<T>(1.0 / d as f64, 0.0);
    for k in 0..d {
        m[(k * d + k, k * d + k)] = w;
    }
    DensityMatrix::from_bip_unchecked(BipartiteOp::from_parts(HermitianOp::from_raw(m), d, d))
}

/// Projector onto `(1/sqrt d) sum_i |ii>`.
pub fn max_entangled<T: Real>(d: usize) -> DensityMatrix<T> {
    assert!(d >= 1);
    let mut m = CMat::<T>::zeros(d * d, d * d);
    let w = cz::<T>(1.0 / d as f64, 0.0);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + i, j * d + j)] = w;
        }
    }
    DensityMatrix::from_bip_unchecked(BipartiteOp::from_parts(HermitianOp::from_raw(m), d, d))
}

/// `(1 - p) Phi^d + p I / d^2`.
pub fn isotropic<T: Real>(d: usize, p: f64) -> Result<DensityMatrix<T>> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::Domain(format!("isotropic parameter p = {p} outside [0, 1]")));
    }
    let phi = max_entangled::<T>(d);
    let mixed = HermitianOp::<T>::identity(d * d).scaled(T::lit(p / (d * d) as f64));
    let op = &phi.op().scaled(T::lit(1.0 - p)) + &mixed;
    Ok(DensityMatrix::from_bip_unchecked(BipartiteOp::from_parts(op, d, d)))
}

/// `rho_A (x) tau_B` for single-system states.
pub fn product_state<T: Real>(a: &DensityMatrix<T>, b: &DensityMatrix<T>) -> DensityMatrix<T> {
    DensityMatrix::from_bip_unchecked(tensor(a.op(), b.op()))
}

fn gaussian_matrix<T: Real>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat<T> {
    // row-major fill keeps the draw order independent of storage layout
    let mut m = CMat::<T>::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            m[(i, j)] = cz(re, im);
        }
    }
    m
}

/// `G G^dagger / Tr[G G^dagger]` for a `d x rank` complex Ginibre matrix `G`.
pub fn random_density_matrix<T: Real>(d: usize, rank: usize, seed: u64) -> DensityMatrix<T> {
    assert!(d >= 1 && rank >= 1 && rank <= d, "need 1 <= rank <= d");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix::<T>(d, rank, &mut rng);
    let w = HermitianOp::from_raw(&g * g.adjoint());
    let tr = w.trace();
    let op = w.scaled(T::one() / tr);
    DensityMatrix::from_bip_unchecked(BipartiteOp::from_parts(op, d, 1))
}

/// Random state on `d_A x d_B` with the given rank.
pub fn random_bipartite_state<T: Real>(da: usize, db: usize, rank: usize, seed: u64) -> DensityMatrix<T> {
    let r = random_density_matrix::<T>(da * db, rank, seed);
    DensityMatrix::from_bip_unchecked(BipartiteOp::from_parts(r.op().clone(), da, db))
}

/// Random product state `rho_A (x) tau_B`, both factors full rank.
pub fn random_product_state<T: Real>(da: usize, db: usize, seed: u64) -> DensityMatrix<T> {
    let a = random_density_matrix::<T>(da, da, seed);
    let b = random_density_matrix::<T>(db, db, seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1));
    product_state(&a, &b)
}

/// Hermitian matrix with independent Gaussian entries (GUE-like, unnormalized).
pub fn random_hermitian<T: Real>(d: usize, seed: u64) -> HermitianOp<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix::<T>(d, d, &mut rng);
    HermitianOp::from_raw(g)
}

/// Completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug)]
pub struct QuantumChannel<T: Real> {
    d_in: usize,
    d_out: usize,
    kraus: Vec<CMat<T>>,
}

impl<T: Real> QuantumChannel<T> {
    pub fn new(d_in: usize, d_out: usize, kraus: Vec<CMat<T>>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::Domain("channel needs at least one Kraus operator".into()));
        }
        for k in &kraus {
            if k.nrows() != d_out || k.ncols() != d_in {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {d_out}x{d_in}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        let ch = Self { d_in, d_out, kraus };
        let res = ch.completeness_residual();
        if res > T::lit(T::PSD_TOL) {
            return Err(Error::Domain(format!(
                "Kraus operators violate completeness by {}",
                res.as_f64()
            )));
        }
        Ok(ch)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d_in: d,
            d_out: d,
            kraus: vec![CMat::<T>::identity(d, d)],
        }
    }

    /// `X -> Tr[X] tau`, with Kraus operators `sqrt(tau) |k><j|`.
    pub fn replacer(d_in: usize, tau: &HermitianOp<T>) -> Result<Self> {
        let root = crate::opalg::matrix_function(
            tau,
            crate::opalg::MatrixFunction::Sqrt,
            crate::opalg::SupportPolicy::Strict,
        )?;
        let d_out = tau.dim();
        let mut kraus = Vec::with_capacity(d_in * d_out);
        for k in 0..d_out {
            for j in 0..d_in {
                let mut e = CMat::<T>::zeros(d_out, d_in);
                e[(k, j)] = Complex::new(T::one(), T::zero());
                kraus.push(root.matrix() * e);
            }
        }
        Ok(Self {
            d_in,
            d_out,
            kraus,
        })
    }

    /// Completely dephasing channel in the computational basis.
    pub fn dephasing(d: usize) -> Self {
        let kraus = (0..d)
            .map(|m| {
                let mut e = CMat::<T>::zeros(d, d);
                e[(m, m)] = Complex::new(T::one(), T::zero());
                e
            })
            .collect();
        Self {
            d_in: d,
            d_out: d,
            kraus,
        }
    }

    /// Isometric embedding `X -> W X W^dagger`.
    pub fn isometry(w: CMat<T>) -> Result<Self> {
        let (d_out, d_in) = w.shape();
        Self::new(d_in, d_out, vec![w])
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[CMat<T>] {
        &self.kraus
    }

    /// `max |sum_i K_i^dagger K_i - I|`.
    pub fn completeness_residual(&self) -> T {
        let mut acc = CMat::<T>::zeros(self.d_in, self.d_in);
        for k in &self.kraus {
            acc += k.adjoint() * k;
        }
        acc -= CMat::<T>::identity(self.d_in, self.d_in);
        acc.iter().fold(T::zero(), |m, z| m.max(z.modulus()))
    }

    pub fn apply(&self, x: &HermitianOp<T>) -> Result<HermitianOp<T>> {
        if x.dim() != self.d_in {
            return Err(Error::DimensionMismatch(format!(
                "channel input dim {} applied to operator of dim {}",
                self.d_in,
                x.dim()
            )));
        }
        let mut acc = CMat::<T>::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            acc += k * x.matrix() * k.adjoint();
        }
        Ok(HermitianOp::from_raw(acc))
    }
}

/// Channel with Kraus operators sliced from a seeded random isometry
/// `C^{d_in} -> C^{d_out} (x) C^{env}`.
pub fn random_channel<T: Real>(d_in: usize, d_out: usize, env_dim: usize, seed: u64) -> Result<QuantumChannel<T>> {
    if d_out * env_dim < d_in {
        return Err(Error::Domain(format!(
            "output dim {d_out} x environment {env_dim} smaller than input dim {d_in}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix::<T>(d_out * env_dim, d_in, &mut rng);
    let q = g.qr().q();
    let kraus = (0..env_dim)
        .map(|k| q.rows(k * d_out, d_out).into_owned())
        .collect();
    QuantumChannel::new(d_in, d_out, kraus)
}

/// `(N (x) M)(rho)` via Kraus sums.
pub fn apply_local_channels<T: Real>(
    rho: &BipartiteOp<T>,
    n: &QuantumChannel<T>,
    m: &QuantumChannel<T>,
) -> Result<BipartiteOp<T>> {
    if n.d_in() != rho.da() || m.d_in() != rho.db() {
        return Err(Error::DimensionMismatch(format!(
            "channels on {}x{} applied to a {}x{} operator",
            n.d_in(),
            m.d_in(),
            rho.da(),
            rho.db()
        )));
    }
    let (da2, db2) = (n.d_out(), m.d_out());
    let mut acc = CMat::<T>::zeros(da2 * db2, da2 * db2);
    for kn in n.kraus() {
        for km in m.kraus() {
            let k = kn.kronecker(km);
            acc += &k * rho.op().matrix() * k.adjoint();
        }
    }
    BipartiteOp::new(HermitianOp::from_raw(acc), da2, db2)
}

/// Classical-quantum state `sum_x p(x) |x><x|_X (x) rho^x_AB`.
#[derive(Clone, Debug)]
pub struct CqState<T: Real> {
    probs: Vec<f64>,
    cond_states: Vec<DensityMatrix<T>>,
    da: usize,
    db: usize,
}

impl<T: Real> CqState<T> {
    pub fn new(probs: Vec<f64>, cond_states: Vec<DensityMatrix<T>>) -> Result<Self> {
        if probs.is_empty() || probs.len() != cond_states.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for {} conditional states",
                probs.len(),
                cond_states.len()
            )));
        }
        if probs.iter().any(|&p| p < 0.0 || p.is_nan()) {
            return Err(Error::Domain("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("probabilities sum to {total}")));
        }
        let dims = cond_states[0].dims();
        if cond_states.iter().any(|s| s.dims() != dims) {
            return Err(Error::DimensionMismatch("conditional states differ in dims".into()));
        }
        Ok(Self {
            probs,
            cond_states,
            da: dims.0,
            db: dims.1,
        })
    }

    pub fn dx(&self) -> usize {
        self.probs.len()
    }

    pub fn dims_ab(&self) -> (usize, usize) {
        (self.da, self.db)
    }

    /// Operator on factors `(A, B, X)`; X trails B.
    fn abx(&self) -> CMat<T> {
        let dx = self.dx();
        let mut out = CMat::<T>::zeros(self.da * self.db * dx, self.da * self.db * dx);
        for (x, (p, s)) in self.probs.iter().zip(&self.cond_states).enumerate() {
            let mut proj = CMat::<T>::zeros(dx, dx);
            proj[(x, x)] = cz(*p, 0.0);
            out += s.op().matrix().kronecker(&proj);
        }
        out
    }

    /// Grouping `(A ; B X)`, index `(a d_B + b) d_X + x`.
    pub fn view_a_bx(&self) -> BipartiteOp<T> {
        BipartiteOp::from_parts(HermitianOp::from_raw(self.abx()), self.da, self.db * self.dx())
    }

    /// Grouping `(A X ; B)`, index `(a d_X + x) d_B + b`.
    pub fn view_ax_b(&self) -> BipartiteOp<T> {
        let m = regroup_a_bx_to_ax_b(&self.abx(), self.da, self.db, self.dx());
        BipartiteOp::from_parts(HermitianOp::from_raw(m), self.da * self.dx(), self.db)
    }
}

/// Factor order `(A, B, X) -> (A, X, B)`.
pub fn regroup_a_bx_to_ax_b<T: Real>(m: &CMat<T>, da: usize, db: usize, dx: usize) -> CMat<T> {
    permute_subsystems(m, &[da, db, dx], &[0, 2, 1])
}

/// Factor order `(A, X, B) -> (A, B, X)`.
pub fn regroup_ax_b_to_a_bx<T: Real>(m: &CMat<T>, da: usize, db: usize, dx: usize) -> CMat<T> {
    permute_subsystems(m, &[da, dx, db], &[0, 2, 1])
}

/// Trace out the classical register of either grouping.
pub fn trace_register<T: Real>(view: &BipartiteOp<T>, dx: usize, grouped_with: crate::opalg::Subsystem) -> BipartiteOp<T> {
    use crate::opalg::{trace_subsystem, Subsystem};
    let (da, db) = view.dims();
    match grouped_with {
        Subsystem::A => {
            let m = trace_subsystem(view.op().matrix(), &[da / dx, dx, db], 1);
            BipartiteOp::from_parts(HermitianOp::from_raw(m), da / dx, db)
        }
        Subsystem::B => {
            let m = trace_subsystem(view.op().matrix(), &[da, db / dx, dx], 2);
            BipartiteOp::from_parts(HermitianOp::from_raw(m), da, db / dx)
        }
    }
}
