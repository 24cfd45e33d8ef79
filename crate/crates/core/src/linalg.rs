//! Dense complex linear algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr_free::standard_complex;

use crate::config::TOL;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Thin wrapper over `rand` producing standard complex Gaussians without
/// pulling in `rand_distr`.
mod rand_distr_free {
    use num_complex::Complex64;
    use rand::Rng;

    /// Box-Muller sample of a standard complex Gaussian.
    pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let r = (-2.0 * u1.ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * u2;
        Complex64::new(r * th.cos(), r * th.sin()) / std::f64::consts::SQRT_2
    }
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn random_cmat<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| standard_complex(rng))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest singular value, 0 for empty matrices.
pub fn spectral_scale(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = m.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Numerical rank with the global relative tolerance.
pub fn rank(m: &CMat) -> usize {
    let s = singular_values(m);
    let scale = s.first().copied().unwrap_or(0.0);
    if scale == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > TOL * scale).count()
}

/// Orthonormal basis of the column space (left singular vectors of the
/// numerically nonzero singular values).
pub fn column_space(m: &CMat) -> CMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd with u");
    let s = &svd.singular_values;
    let scale = s.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return zeros(m.nrows(), 0);
    }
    let k = s.iter().filter(|&&x| x > TOL * scale).count();
    u.columns(0, k).into_owned()
}

/// Orthonormal basis of the right null space of `m`.
pub fn null_space(m: &CMat) -> CMat {
    let n = m.ncols();
    if n == 0 {
        return zeros(0, 0);
    }
    if m.nrows() == 0 {
        return eye(n);
    }
    // Pad with zero rows so the SVD returns a full right factor.
    let work = if m.nrows() < n {
        let mut w = zeros(n, n);
        w.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        w
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let s = &svd.singular_values;
    let scale = s.iter().copied().fold(0.0, f64::max);
    let r = if scale == 0.0 {
        0
    } else {
        s.iter().filter(|&&x| x > TOL * scale).count()
    };
    let mut out = zeros(n, vt.nrows() - r);
    for (j, i) in (r..vt.nrows()).enumerate() {
        out.set_column(j, &vt.row(i).adjoint());
    }
    out
}

/// Orthonormal basis of the right null space of a real matrix, with the
/// given relative rank tolerance.
pub fn real_null_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let work = if m.nrows() < n {
        let mut w = DMatrix::zeros(n, n);
        w.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        w
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let s = &svd.singular_values;
    let scale = s.iter().copied().fold(0.0, f64::max);
    let r = if scale == 0.0 {
        0
    } else {
        s.iter().filter(|&&x| x > tol * scale).count()
    };
    let mut out = DMatrix::zeros(n, vt.nrows() - r);
    for (j, i) in (r..vt.nrows()).enumerate() {
        out.set_column(j, &vt.row(i).transpose());
    }
    out
}

/// Eigenvalues of a Hermitian matrix (ascending).  The input is
/// symmetrized first to shed roundoff.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    assert_eq!(m.nrows(), m.ncols());
    if m.nrows() == 0 {
        return Vec::new();
    }
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &CMat) -> CMat {
    assert_eq!(a.nrows(), a.ncols());
    let n = a.nrows();
    if n == 0 {
        return zeros(0, 0);
    }
    let norm = max_abs(a) * n as f64;
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let b = a * Complex64::new(0.5f64.powi(s), 0.0);
    let mut term = eye(n);
    let mut sum = eye(n);
    for k in 1..=24 {
        term = &term * &b / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    let mut out = sum;
    for _ in 0..s {
        out = &out * &out;
    }
    out
}

/// Invert with an explicit conditioning guard; `None` when the smallest
/// singular value is below `TOL` times the largest.
pub fn try_inverse(m: &CMat) -> Option<CMat> {
    let s = singular_values(m);
    let hi = s.first().copied().unwrap_or(0.0);
    let lo = s.last().copied().unwrap_or(0.0);
    if hi == 0.0 || lo <= TOL * hi {
        return None;
    }
    m.clone().try_inverse()
}

/// Horizontal concatenation.
pub fn hcat(blocks: &[&CMat]) -> CMat {
    let rows = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows);
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Vertical concatenation.
pub fn vcat(blocks: &[&CMat]) -> CMat {
    let cols = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols);
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Column-major flattening of a matrix into a vector.
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_iterator(m.nrows() * m.ncols(), m.iter().copied())
}

pub fn unvectorize(v: &CVec, rows: usize, cols: usize) -> CMat {
    assert_eq!(v.len(), rows * cols);
    CMat::from_iterator(rows, cols, v.iter().copied())
}

/// Least-norm real least-squares solve via SVD pseudo-inverse.
pub fn real_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u");
    let vt = svd.v_t.as_ref().expect("v_t");
    let s = &svd.singular_values;
    let scale = s.iter().copied().fold(0.0, f64::max);
    let ub = u.transpose() * b;
    let mut y = DVector::zeros(vt.nrows());
    for i in 0..s.len().min(y.len()) {
        if s[i] > rcond * scale && s[i] > 0.0 {
            y[i] = ub[i] / s[i];
        }
    }
    vt.transpose() * y
}

/// Least-norm least-squares solve via SVD pseudo-inverse.
pub fn lstsq(a: &CMat, b: &CMat, rcond: f64) -> CMat {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u");
    let vt = svd.v_t.as_ref().expect("v_t");
    let s = &svd.singular_values;
    let scale = s.iter().copied().fold(0.0, f64::max);
    let ub = u.adjoint() * b;
    let mut y = zeros(vt.nrows(), b.ncols());
    for i in 0..s.len() {
        if s[i] > rcond * scale && s[i] > 0.0 {
            let row = ub.row(i) / Complex64::new(s[i], 0.0);
            y.row_mut(i).copy_from(&row);
        }
    }
    vt.adjoint() * y
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn null_space_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_cmat(&mut rng, 3, 6);
        let ns = null_space(&m);
        assert_eq!(ns.ncols(), 3);
        assert!(max_abs(&(&m * &ns)) < 1e-10);
        // columns orthonormal
        let g = ns.adjoint() * &ns;
        assert!(max_abs(&(g - eye(3))) < 1e-10);
    }

    #[test]
    fn expm_one_parameter_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_cmat(&mut rng, 4, 4) * Complex64::new(0.3, 0.0);
        let e1 = expm(&a);
        let half = expm(&(&a * Complex64::new(0.5, 0.0)));
        assert!(max_abs(&(&half * &half - &e1)) < 1e-12);
    }

    #[test]
    fn rank_of_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_cmat(&mut rng, 5, 2);
        let b = random_cmat(&mut rng, 2, 5);
        assert_eq!(rank(&(&a * &b)), 2);
    }
}
