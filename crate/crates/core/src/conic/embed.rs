//! Complex Hermitian blocks as real symmetric blocks of twice the size.
//!
//! `embed(X) = [[Re X, -Im X], [Im X, Re X]]` is a real-linear injective
//! map, and each eigenvalue of `X` appears twice in the spectrum of `embed X`, so `X >= 0` iff
//! `embed(X) >= 0`. It doubles traces and inner products:
//! `<embed X, embed Y> = 2 Re Tr[X Y]`. The factor is undone once, here,
//! through [`EMBED_INNER_SCALE`].

use nalgebra::{Complex, DMatrix};

use crate::opalg::{CMat, HermitianOp};

/// `Re Tr[X Y] = EMBED_INNER_SCALE * <embed X, embed Y>`.
pub const EMBED_INNER_SCALE: f64 = 0.5;

pub fn embed_hermitian(x: &HermitianOp<f64>) -> DMatrix<f64> {
    let n = x.dim();
    let m = x.matrix();
    let mut out = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Adjoint of [`embed_hermitian`] up to [`EMBED_INNER_SCALE`]: for every
/// Hermitian `X`, `Re Tr[X compress(W)] = EMBED_INNER_SCALE <embed X, W>`.
///
/// A real PSD `W` compresses to a complex PSD matrix, which is how real
/// multipliers are read back as Hermitian ones.
pub fn compress_symmetric(w: &DMatrix<f64>) -> HermitianOp<f64> {
    let n = w.nrows() / 2;
    assert_eq!(w.nrows(), 2 * n, "embedded block must have even size");
    let mut m = CMat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re = w[(i, j)] + w[(i + n, j + n)];
            let im = w[(i + n, j)] - w[(i, j + n)];
            m[(i, j)] = Complex::new(EMBED_INNER_SCALE * re, EMBED_INNER_SCALE * im);
        }
    }
    HermitianOp::from_raw(m)
}

/// Orthonormal basis of the `d^2`-dimensional real space of `d x d`
/// Hermitian matrices: `E_kk`, then for `j < k` the pair
/// `(E_jk + E_kj)/sqrt 2` and `(-i E_jk + i E_kj)/sqrt 2`.
pub fn hermitian_basis(d: usize) -> Vec<HermitianOp<f64>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        let mut m = CMat::<f64>::zeros(d, d);
        m[(k, k)] = Complex::new(1.0, 0.0);
        out.push(HermitianOp::from_raw(m));
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut s = CMat::<f64>::zeros(d, d);
            s[(j, k)] = Complex::new(r, 0.0);
            s[(k, j)] = Complex::new(r, 0.0);
            out.push(HermitianOp::from_raw(s));
            let mut a = CMat::<f64>::zeros(d, d);
            a[(j, k)] = Complex::new(0.0, -r);
            a[(k, j)] = Complex::new(0.0, r);
            out.push(HermitianOp::from_raw(a));
        }
    }
    out
}

/// Coordinates of `x` in [`hermitian_basis`].
pub fn hermitian_coords(x: &HermitianOp<f64>) -> Vec<f64> {
    let d = x.dim();
    let m = x.matrix();
    let s = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        out.push(m[(k, k)].re);
    }
    for j in 0..d {
        for k in (j + 1)..d {
            out.push(s * m[(j, k)].re);
            out.push(-s * m[(j, k)].im);
        }
    }
    out
}

/// Inverse of [`hermitian_coords`].
pub fn hermitian_from_coords(d: usize, coords: &[f64]) -> HermitianOp<f64> {
    assert_eq!(coords.len(), d * d);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = CMat::<f64>::zeros(d, d);
    for k in 0..d {
        m[(k, k)] = Complex::new(coords[k], 0.0);
    }
    let mut idx = d;
    for j in 0..d {
        for k in (j + 1)..d {
            let (a, b) = (coords[idx], coords[idx + 1]);
            idx += 2;
            m[(j, k)] = Complex::new(r * a, -r * b);
            m[(k, j)] = Complex::new(r * a, r * b);
        }
    }
    HermitianOp::from_raw(m)
}
