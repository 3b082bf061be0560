//! Dense Hermitian operator algebra.
//!
//! All composite operators use the A-major index convention: basis index
//! `i = a * d_B + b`. Multi-factor helpers generalize this to
//! `i = sum_k digit_k * stride_k` with the first factor most significant.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, ComplexField, DMatrix, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type CMat<T> = DMatrix<Complex<T>>;

/// One side of a bipartition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Subsystem {
    A,
    B,
}

impl Subsystem {
    pub fn other(self) -> Self {
        match self {
            Subsystem::A => Subsystem::B,
            Subsystem::B => Subsystem::A,
        }
    }

    fn index(self) -> usize {
        match self {
            Subsystem::A => 0,
            Subsystem::B => 1,
        }
    }
}

/// Dense complex Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOp<T: Real> {
    mat: CMat<T>,
}

/// Spectral decomposition with eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct Eigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: CMat<T>,
}

impl<T: Real> Eigen<T> {
    /// Reassemble `sum_i f(lambda_i) |v_i><v_i|`.
    pub fn compose(&self, mut f: impl FnMut(T) -> T) -> HermitianOp<T> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let fl = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= Complex::new(fl, T::zero());
            }
        }
        HermitianOp::from_raw(&scaled * self.vectors.adjoint())
    }
}

fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

fn max_abs<T: Real>(m: &CMat<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

impl<T: Real> HermitianOp<T> {
    /// Validate and symmetrize a matrix read from outside the library.
    ///
    /// Asymmetry up to `T::HERMITIAN_TOL` relative to the largest entry is
    /// absorbed by `(X + X^dagger) / 2`; anything larger is rejected.
    pub fn new(mat: CMat<T>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.nrows() == 0 {
            return Err(Error::Domain("operator dimension must be at least 1".into()));
        }
        let scale = max_abs(&mat);
        let asym = max_abs(&(&mat - mat.adjoint()));
        let rel = if scale > T::zero() {
            (asym / scale).as_f64()
        } else {
            0.0
        };
        if rel > T::HERMITIAN_TOL {
            return Err(Error::NotHermitian { asymmetry: rel });
        }
        Ok(Self::from_raw(mat))
    }

    /// Symmetrize without validation; for results that are Hermitian by
    /// construction up to rounding.
    pub(crate) fn from_raw(mat: CMat<T>) -> Self {
        let half = c(T::lit(0.5));
        let sym = (&mat + mat.adjoint()) * half;
        Self { mat: sym }
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = CMat::<T>::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = c(d);
        }
        Self { mat: m }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMat::<T>::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMat::<T>::zeros(dim, dim),
        }
    }

    /// Projector onto the span of `v` (not normalized).
    pub fn outer(v: &nalgebra::DVector<Complex<T>>) -> Self {
        Self::from_raw(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat<T> {
        self.mat
    }

    pub fn trace(&self) -> T {
        (0..self.dim()).fold(T::zero(), |acc, i| acc + self.mat[(i, i)].re)
    }

    /// `Re Tr[self * other]`, the real Hilbert-Schmidt inner product.
    pub fn inner(&self, other: &Self) -> T {
        self.mat
            .iter()
            .zip(other.mat.iter())
            .fold(T::zero(), |acc, (a, b)| acc + (a.conj() * b).re)
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            mat: &self.mat * c(k),
        }
    }

    /// Full transpose (equal to entrywise conjugation for Hermitian input).
    pub fn transpose(&self) -> Self {
        Self {
            mat: self.mat.transpose(),
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        max_abs(&self.mat)
    }

    pub fn frobenius_norm(&self) -> T {
        self.mat.norm()
    }

    pub fn eigh(&self) -> Eigen<T> {
        let eig = SymmetricEigen::new(self.mat.clone());
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[i]
                .partial_cmp(&eig.eigenvalues[j])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMat::<T>::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
        Eigen { values, vectors }
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.eigh().values
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> T {
        *self.eigenvalues().last().expect("dim >= 1")
    }

    /// PSD within the relative slack `T::PSD_TOL * max(trace, 1)`.
    pub fn check_psd(&self) -> Result<()> {
        let min = self.min_eigenvalue();
        let scale = self.trace().abs().max(T::one());
        if min < -(T::lit(T::PSD_TOL) * scale) {
            return Err(Error::NotPsd {
                min_eig: min.as_f64(),
            });
        }
        Ok(())
    }

    /// Conjugation `M X M^dagger` by an arbitrary (possibly rectangular) matrix.
    pub fn conjugate_by(&self, m: &CMat<T>) -> Self {
        Self::from_raw(m * &self.mat * m.adjoint())
    }
}

impl<T: Real> Add for &HermitianOp<T> {
    type Output = HermitianOp<T>;
    fn add(self, rhs: Self) -> HermitianOp<T> {
        HermitianOp {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl<T: Real> Sub for &HermitianOp<T> {
    type Output = HermitianOp<T>;
    fn sub(self, rhs: Self) -> HermitianOp<T> {
        HermitianOp {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl<T: Real> Neg for &HermitianOp<T> {
    type Output = HermitianOp<T>;
    fn neg(self) -> HermitianOp<T> {
        HermitianOp { mat: -&self.mat }
    }
}

impl<T: Real> Mul<T> for &HermitianOp<T> {
    type Output = HermitianOp<T>;
    fn mul(self, k: T) -> HermitianOp<T> {
        self.scaled(k)
    }
}

impl<T: Real + fmt::Display> fmt::Display for HermitianOp<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.mat[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Hermitian operator with a tensor factorization `d_A x d_B`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteOp<T: Real> {
    op: HermitianOp<T>,
    da: usize,
    db: usize,
}

impl<T: Real> BipartiteOp<T> {
    pub fn new(op: HermitianOp<T>, da: usize, db: usize) -> Result<Self> {
        if da == 0 || db == 0 || da * db != op.dim() {
            return Err(Error::DimensionMismatch(format!(
                "factor dims {da}x{db} do not match operator dimension {}",
                op.dim()
            )));
        }
        Ok(Self { op, da, db })
    }

    pub(crate) fn from_parts(op: HermitianOp<T>, da: usize, db: usize) -> Self {
        debug_assert_eq!(da * db, op.dim());
        Self { op, da, db }
    }

    pub fn op(&self) -> &HermitianOp<T> {
        &self.op
    }

    pub fn into_op(self) -> HermitianOp<T> {
        self.op
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.da, self.db)
    }

    pub fn da(&self) -> usize {
        self.da
    }

    pub fn db(&self) -> usize {
        self.db
    }

    pub fn dim(&self, sys: Subsystem) -> usize {
        match sys {
            Subsystem::A => self.da,
            Subsystem::B => self.db,
        }
    }

    pub fn trace(&self) -> T {
        self.op.trace()
    }

    pub fn scaled(&self, k: T) -> Self {
        Self::from_parts(self.op.scaled(k), self.da, self.db)
    }

    /// Same factorization, different operator; dimensions must agree.
    pub fn with_op(&self, op: HermitianOp<T>) -> Self {
        assert_eq!(op.dim(), self.op.dim());
        Self::from_parts(op, self.da, self.db)
    }

    pub fn same_dims(&self, other: &Self) -> bool {
        self.dims() == other.dims()
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert!(self.same_dims(other));
        Self::from_parts(&self.op + &other.op, self.da, self.db)
    }

    pub fn minus(&self, other: &Self) -> Self {
        assert!(self.same_dims(other));
        Self::from_parts(&self.op - &other.op, self.da, self.db)
    }

    /// Exchange the roles of A and B.
    pub fn swap(&self) -> Self {
        let m = permute_subsystems(self.op.matrix(), &[self.da, self.db], &[1, 0]);
        Self::from_parts(HermitianOp::from_raw(m), self.db, self.da)
    }
}

/// Kronecker product under the A-major convention.
pub fn tensor<T: Real>(x: &HermitianOp<T>, y: &HermitianOp<T>) -> BipartiteOp<T> {
    let m = x.matrix().kronecker(y.matrix());
    BipartiteOp::from_parts(HermitianOp { mat: m }, x.dim(), y.dim())
}

/// `(A1 B1) (x) (A2 B2)` regrouped as `(A1 A2 ; B1 B2)`.
pub fn tensor_bipartite<T: Real>(x: &BipartiteOp<T>, y: &BipartiteOp<T>) -> BipartiteOp<T> {
    let raw = x.op().matrix().kronecker(y.op().matrix());
    let dims = [x.da, x.db, y.da, y.db];
    let m = permute_subsystems(&raw, &dims, &[0, 2, 1, 3]);
    BipartiteOp::from_parts(HermitianOp::from_raw(m), x.da * y.da, x.db * y.db)
}

pub fn partial_transpose<T: Real>(x: &BipartiteOp<T>, sys: Subsystem) -> BipartiteOp<T> {
    let m = transpose_subsystem(x.op().matrix(), &[x.da, x.db], sys.index());
    x.with_op(HermitianOp::from_raw(m))
}

pub fn partial_trace<T: Real>(x: &BipartiteOp<T>, sys: Subsystem) -> HermitianOp<T> {
    HermitianOp::from_raw(trace_subsystem(x.op().matrix(), &[x.da, x.db], sys.index()))
}

/// Pinch one factor to the computational basis.
pub fn dephase<T: Real>(x: &BipartiteOp<T>, sys: Subsystem) -> BipartiteOp<T> {
    let m = dephase_subsystem(x.op().matrix(), &[x.da, x.db], sys.index());
    x.with_op(HermitianOp::from_raw(m))
}

/// Pinch both factors.
pub fn dephase_both<T: Real>(x: &BipartiteOp<T>) -> BipartiteOp<T> {
    dephase(&dephase(x, Subsystem::A), Subsystem::B)
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn digit(i: usize, dims: &[usize], st: &[usize], k: usize) -> usize {
    (i / st[k]) % dims[k]
}

fn check_dims<T: Real>(m: &CMat<T>, dims: &[usize]) {
    let total: usize = dims.iter().product();
    assert_eq!(m.nrows(), total, "subsystem dims {dims:?} do not match matrix");
}

/// Reorder tensor factors: factor `k` of the output is factor `perm[k]` of the input.
pub fn permute_subsystems<T: Real>(m: &CMat<T>, dims: &[usize], perm: &[usize]) -> CMat<T> {
    check_dims(m, dims);
    let n = m.nrows();
    let st = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let new_st = strides(&new_dims);
    let map: Vec<usize> = (0..n)
        .map(|i| {
            perm.iter()
                .enumerate()
                .map(|(k, &p)| digit(i, dims, &st, p) * new_st[k])
                .sum()
        })
        .collect();
    let mut out = CMat::<T>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    out
}

pub fn transpose_subsystem<T: Real>(m: &CMat<T>, dims: &[usize], k: usize) -> CMat<T> {
    check_dims(m, dims);
    let n = m.nrows();
    let st = strides(dims);
    CMat::<T>::from_fn(n, n, |i, j| {
        let di = digit(i, dims, &st, k);
        let dj = digit(j, dims, &st, k);
        let i2 = i - di * st[k] + dj * st[k];
        let j2 = j - dj * st[k] + di * st[k];
        m[(i2, j2)]
    })
}

pub fn dephase_subsystem<T: Real>(m: &CMat<T>, dims: &[usize], k: usize) -> CMat<T> {
    check_dims(m, dims);
    let n = m.nrows();
    let st = strides(dims);
    CMat::<T>::from_fn(n, n, |i, j| {
        if digit(i, dims, &st, k) == digit(j, dims, &st, k) {
            m[(i, j)]
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

pub fn trace_subsystem<T: Real>(m: &CMat<T>, dims: &[usize], k: usize) -> CMat<T> {
    check_dims(m, dims);
    let st = strides(dims);
    let dk = dims[k];
    let n_out = m.nrows() / dk;
    // output index r -> input index with digit k = 0
    let lift = |r: usize| -> usize {
        let high = r / st[k];
        let low = r % st[k];
        high * st[k] * dk + low
    };
    CMat::<T>::from_fn(n_out, n_out, |r, s| {
        let (r0, s0) = (lift(r), lift(s));
        (0..dk).fold(Complex::new(T::zero(), T::zero()), |acc, t| {
            acc + m[(r0 + t * st[k], s0 + t * st[k])]
        })
    })
}

/// Density operator of a (possibly trivially) bipartite system.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    bip: BipartiteOp<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validate positivity (`min eig >= -PSD_TOL`) and unit trace.
    pub fn new(bip: BipartiteOp<T>) -> Result<Self> {
        let tr = bip.trace();
        if (tr - T::one()).abs() > T::lit(T::TRACE_TOL) {
            return Err(Error::NotNormalized { trace: tr.as_f64() });
        }
        bip.op().check_psd()?;
        Ok(Self { bip })
    }

    /// A single system, represented as `d x 1`.
    pub fn single(op: HermitianOp<T>) -> Result<Self> {
        let d = op.dim();
        Self::new(BipartiteOp::from_parts(op, d, 1))
    }

    pub(crate) fn from_bip_unchecked(bip: BipartiteOp<T>) -> Self {
        Self { bip }
    }

    pub fn bip(&self) -> &BipartiteOp<T> {
        &self.bip
    }

    pub fn op(&self) -> &HermitianOp<T> {
        self.bip.op()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.bip.dims()
    }

    pub fn marginal(&self, keep: Subsystem) -> DensityMatrix<T> {
        let m = partial_trace(&self.bip, keep.other());
        let d = m.dim();
        Self::from_bip_unchecked(BipartiteOp::from_parts(m, d, 1))
    }

    pub fn purity(&self) -> T {
        self.op().inner(self.op())
    }
}

/// Squared trace norm of `sqrt(rho) sqrt(sigma)`.
pub fn fidelity<T: Real>(rho: &HermitianOp<T>, sigma: &HermitianOp<T>) -> Result<T> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity arguments of dims {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let sr = matrix_function(rho, MatrixFunction::Sqrt, SupportPolicy::Strict)?;
    let ss = matrix_function(sigma, MatrixFunction::Sqrt, SupportPolicy::Strict)?;
    let prod = sr.matrix() * ss.matrix();
    let nuc = schatten_norm(&prod, T::one());
    Ok(nuc * nuc)
}

/// `(sum_i s_i^p)^(1/p)` over singular values of an arbitrary square matrix.
pub fn schatten_norm<T: Real>(m: &CMat<T>, p: T) -> T {
    let svd = SVD::new(m.clone(), false, false);
    p_norm(svd.singular_values.iter().copied(), p)
}

/// Schatten norm of a Hermitian operator via its spectrum.
pub fn schatten_norm_hermitian<T: Real>(x: &HermitianOp<T>, p: T) -> T {
    p_norm(x.eigenvalues().into_iter().map(|v| v.abs()), p)
}

fn p_norm<T: Real>(vals: impl Iterator<Item = T>, p: T) -> T {
    assert!(p >= T::one(), "Schatten index must be >= 1");
    let vals: Vec<T> = vals.collect();
    let smax = vals.iter().fold(T::zero(), |a, &b| a.max(b));
    if smax == T::zero() {
        return T::zero();
    }
    // factor out the largest value to avoid overflow for large p
    let sum = vals
        .iter()
        .fold(T::zero(), |acc, &s| acc + (s / smax).powf(p));
    smax * sum.powf(T::one() / p)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatrixFunction<T> {
    Sqrt,
    Log2,
    Power(T),
}

/// How eigenvalues below the support threshold are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportPolicy {
    /// Singular inputs are an error for `Log2` and negative powers.
    Strict,
    /// Apply the function on the support only; the kernel maps to zero.
    Restrict,
}

/// Eigenvalues at most this far above zero (relative to the largest) are
/// treated as outside the support.
pub fn support_threshold<T: Real>(lambda_max: T) -> T {
    T::lit(T::SUPPORT_REL) * lambda_max.abs()
}

pub fn matrix_function<T: Real>(
    x: &HermitianOp<T>,
    f: MatrixFunction<T>,
    policy: SupportPolicy,
) -> Result<HermitianOp<T>> {
    let eig = x.eigh();
    let lmax = eig.values.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    let floor = support_threshold(lmax);
    let needs_psd = !matches!(f, MatrixFunction::Power(r) if r == T::zero());
    if needs_psd {
        let scale = x.trace().abs().max(T::one());
        if eig.values[0] < -(T::lit(T::PSD_TOL) * scale) {
            return Err(Error::NotPsd {
                min_eig: eig.values[0].as_f64(),
            });
        }
    }
    let singular_sensitive = match f {
        MatrixFunction::Log2 => true,
        MatrixFunction::Power(r) => r < T::zero(),
        MatrixFunction::Sqrt => false,
    };
    if singular_sensitive
        && policy == SupportPolicy::Strict
        && eig.values.iter().any(|&v| v <= floor)
    {
        return Err(Error::SingularLog);
    }
    let ln2 = T::ln_2();
    Ok(eig.compose(|lam| {
        if lam <= floor {
            if singular_sensitive {
                return T::zero();
            }
            return match f {
                MatrixFunction::Power(r) if r == T::zero() => T::one(),
                _ => T::zero(),
            };
        }
        match f {
            MatrixFunction::Sqrt => lam.sqrt(),
            MatrixFunction::Log2 => lam.ln() / ln2,
            MatrixFunction::Power(r) => lam.powf(r),
        }
    }))
}

/// Orthogonal projector onto the support of a PSD operator.
pub fn support_projector<T: Real>(x: &HermitianOp<T>) -> HermitianOp<T> {
    let eig = x.eigh();
    let lmax = eig.values.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    let floor = support_threshold(lmax);
    eig.compose(|lam| if lam > floor { T::one() } else { T::zero() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states;
    use nalgebra::DMatrix;

    fn diag(v: &[f64]) -> HermitianOp<f64> {
        HermitianOp::from_real_diagonal(v)
    }

    fn close(a: &HermitianOp<f64>, b: &HermitianOp<f64>, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn tensor_identity_and_placement() {
        let i2 = HermitianOp::<f64>::identity(2);
        assert_eq!(tensor(&i2, &i2).op(), &HermitianOp::identity(4));
        let t = tensor(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]));
        assert!(close(t.op(), &diag(&[0.0, 1.0, 0.0, 0.0]), 0.0));
    }

    #[test]
    fn tensor_trace_is_multiplicative() {
        let r = states::random_density_matrix::<f64>(3, 3, 1);
        let s = states::random_density_matrix::<f64>(2, 2, 2).op().scaled(2.5);
        let t = tensor(r.op(), &s);
        assert!((t.trace() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_of_max_entangled_is_half_swap() {
        let phi = states::max_entangled::<f64>(2);
        let pt = partial_transpose(phi.bip(), Subsystem::B);
        let mut swap = DMatrix::<Complex<f64>>::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                swap[(a * 2 + b, b * 2 + a)] = Complex::new(0.5, 0.0);
            }
        }
        assert!((pt.op().matrix() - swap).camax() < 1e-15);
        // independent 4x4 eigendecomposition: {-1/2, 1/2, 1/2, 1/2}
        let ev = pt.op().eigenvalues();
        let expect = [-0.5, 0.5, 0.5, 0.5];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_transpose_is_involution_and_product_stays_psd() {
        let r = states::random_density_matrix::<f64>(6, 4, 9);
        let bip = BipartiteOp::new(r.op().clone(), 2, 3).unwrap();
        let twice = partial_transpose(&partial_transpose(&bip, Subsystem::B), Subsystem::B);
        assert_eq!(twice, bip);

        let ra = states::random_density_matrix::<f64>(2, 2, 3);
        let tb = states::random_density_matrix::<f64>(3, 3, 4);
        let prod = tensor(ra.op(), tb.op());
        let pt = partial_transpose(&prod, Subsystem::B);
        let expect = tensor(ra.op(), &tb.op().transpose());
        assert!(close(pt.op(), expect.op(), 1e-15));
        assert!(pt.op().min_eigenvalue() > -1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        let cc = states::max_classically_correlated::<f64>(2);
        let ma = partial_trace(cc.bip(), Subsystem::B);
        assert!(close(&ma, &diag(&[0.5, 0.5]), 1e-15));

        let ra = states::random_density_matrix::<f64>(2, 2, 5);
        let tb = states::random_density_matrix::<f64>(3, 2, 6);
        let prod = tensor(ra.op(), tb.op());
        assert!(close(&partial_trace(&prod, Subsystem::A), tb.op(), 1e-14));

        for &p in &[0.0, 0.3, 1.0] {
            let iso = states::isotropic::<f64>(3, p).unwrap();
            let mb = partial_trace(iso.bip(), Subsystem::A);
            assert!(close(&mb, &HermitianOp::identity(3).scaled(1.0 / 3.0), 1e-14));
        }
    }

    #[test]
    fn dephasing_examples() {
        let phi = states::max_entangled::<f64>(2);
        let both = dephase_both(phi.bip());
        let cc = states::max_classically_correlated::<f64>(2);
        assert!(close(both.op(), cc.op(), 1e-15));

        let r = states::random_density_matrix::<f64>(4, 4, 11);
        let bip = BipartiteOp::new(r.op().clone(), 2, 2).unwrap();
        let once = dephase(&bip, Subsystem::A);
        assert_eq!(dephase(&once, Subsystem::A), once);
        assert!((once.trace() - bip.trace()).abs() < 1e-14);
    }

    #[test]
    fn fidelity_examples() {
        let r = states::random_density_matrix::<f64>(3, 3, 2);
        assert!((fidelity(r.op(), r.op()).unwrap() - 1.0).abs() < 1e-10);

        let cc = states::max_classically_correlated::<f64>(2);
        let mixed = HermitianOp::identity(4).scaled(0.25);
        assert!((fidelity(cc.op(), &mixed).unwrap() - 0.5).abs() < 1e-12);

        for d in 2..=4 {
            let cc = states::max_classically_correlated::<f64>(d);
            let scale = 3.0;
            let f = fidelity(cc.op(), &cc.op().scaled(1.0 / scale)).unwrap();
            assert!((f - 1.0 / scale).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_rejects_negative_input() {
        let bad = diag(&[1.0, -0.5]);
        let good = diag(&[0.5, 0.5]);
        assert!(matches!(fidelity(&bad, &good), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn schatten_examples() {
        assert!((schatten_norm_hermitian(&HermitianOp::<f64>::identity(5), 1.0) - 5.0).abs() < 1e-12);
        assert!((schatten_norm(diag(&[3.0, 4.0]).matrix(), 2.0) - 5.0).abs() < 1e-12);
        for &p in &[1.0, 1.5, 2.0, 7.3] {
            let v = schatten_norm(diag(&[1.0, -1.0]).matrix(), p);
            assert!((v - 2f64.powf(1.0 / p)).abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_function_examples() {
        let s = matrix_function(&diag(&[4.0, 9.0]), MatrixFunction::Sqrt, SupportPolicy::Strict).unwrap();
        assert!(close(&s, &diag(&[2.0, 3.0]), 1e-13));
        let l = matrix_function(&HermitianOp::<f64>::identity(3), MatrixFunction::Log2, SupportPolicy::Strict)
            .unwrap();
        assert!(l.max_abs() < 1e-15);
        let p = matrix_function(&diag(&[2.0, 8.0]), MatrixFunction::Power(1.0 / 3.0), SupportPolicy::Strict)
            .unwrap();
        assert!(close(&p, &diag(&[2f64.powf(1.0 / 3.0), 2.0]), 1e-13));
    }

    #[test]
    fn singular_log_requires_support_flag() {
        let x = diag(&[0.0, 4.0]);
        assert!(matches!(
            matrix_function(&x, MatrixFunction::Log2, SupportPolicy::Strict),
            Err(Error::SingularLog)
        ));
        let l = matrix_function(&x, MatrixFunction::Log2, SupportPolicy::Restrict).unwrap();
        assert!(close(&l, &diag(&[0.0, 2.0]), 1e-13));
        assert!(matches!(
            matrix_function(&diag(&[-1.0, 1.0]), MatrixFunction::Sqrt, SupportPolicy::Strict),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn hermitian_ingest_symmetrizes_or_rejects() {
        let mut m = DMatrix::<Complex<f64>>::identity(2, 2);
        m[(0, 1)] = Complex::new(0.3, 1e-12);
        m[(1, 0)] = Complex::new(0.3, -1e-12 + 1e-13);
        let h = HermitianOp::new(m.clone()).unwrap();
        assert_eq!(h.matrix()[(0, 1)], h.matrix()[(1, 0)].conj());
        m[(1, 0)] = Complex::new(0.2, 0.0);
        assert!(matches!(HermitianOp::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn permute_and_tensor_bipartite_agree() {
        let s = states::random_density_matrix::<f64>(4, 4, 21);
        let t = states::random_density_matrix::<f64>(6, 6, 22);
        let s = BipartiteOp::new(s.op().clone(), 2, 2).unwrap();
        let t = BipartiteOp::new(t.op().clone(), 2, 3).unwrap();
        let joint = tensor_bipartite(&s, &t);
        assert_eq!(joint.dims(), (4, 6));
        // tracing B1 B2 gives the tensor of the A marginals
        let ma = partial_trace(&joint, Subsystem::B);
        let expect = partial_trace(&s, Subsystem::B).matrix().kronecker(partial_trace(&t, Subsystem::B).matrix());
        assert!((ma.matrix() - expect).camax() < 1e-14);
        // swap twice is identity
        assert_eq!(joint.swap().swap(), joint);
    }

    #[test]
    fn single_precision_instantiation() {
        let phi = states::max_entangled::<f32>(2);
        let pt = partial_transpose(phi.bip(), Subsystem::B);
        let ev = pt.op().eigenvalues();
        assert!((ev[0] + 0.5).abs() < 1e-5);
        let f = fidelity(phi.op(), phi.op()).unwrap();
        assert!((f - 1.0).abs() < 1e-4);
    }
}
