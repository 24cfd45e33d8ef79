//! Deterministic random generators: unitary matrices, automorphisms of each
//! domain (as form-preserving ambient matrices), interior and boundary
//! matrix points, and the reference null bases behind the isotropic-flag
//! samplers.

use num_complex::Complex64;
use rand::Rng;

use crate::domains::DomainSpec;
use crate::linalg::{self, CMat, CVec};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Haar-ish random unitary via QR of a complex Gaussian.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let a = linalg::random_cmat(rng, n, n);
    let qr = a.qr();
    let q = qr.q();
    let r = qr.r();
    // fix column phases so the factorization is canonical-ish
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..n {
                u[(i, j)] *= phase;
            }
        }
    }
    u
}

/// Random anti-Hermitian matrix with entries of the given scale.
fn random_antihermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> CMat {
    let m = linalg::random_cmat(rng, n, n) * c(scale);
    (&m - m.adjoint()) * c(0.5)
}

/// Random element of `SU(p,q)`-type: `exp(I_{p,q} K)` with `K` anti-Hermitian.
pub fn random_su_pq<R: Rng + ?Sized>(rng: &mut R, p: usize, q: usize, scale: f64) -> CMat {
    let n = p + q;
    let k = random_antihermitian(rng, n, scale);
    let mut ik = k;
    for i in q..n {
        for j in 0..n {
            ik[(i, j)] = -ik[(i, j)];
        }
    }
    linalg::expm(&ik)
}

/// Random element of the real form of `Sp(n, C)` preserving both `J_n` and
/// `I_{n,n}`: exponential of `[[a, b], [conj(b), -a^t]]` with `a`
/// anti-Hermitian and `b` symmetric.
pub fn random_sp<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> CMat {
    let a = random_antihermitian(rng, n, scale);
    let b0 = linalg::random_cmat(rng, n, n) * c(scale);
    let b = (&b0 + b0.transpose()) * c(0.5);
    assemble_real_form(&a, &b)
}

/// Random element of the real form of `SO(2n, C)` preserving both `S_n` and
/// `I_{n,n}`: same block shape with `b` antisymmetric.
pub fn random_so<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> CMat {
    let a = random_antihermitian(rng, n, scale);
    let b0 = linalg::random_cmat(rng, n, n) * c(scale);
    let b = (&b0 - b0.transpose()) * c(0.5);
    assemble_real_form(&a, &b)
}

fn assemble_real_form(a: &CMat, b: &CMat) -> CMat {
    let n = a.nrows();
    let mut x = linalg::zeros(2 * n, 2 * n);
    x.view_mut((0, 0), (n, n)).copy_from(a);
    x.view_mut((0, n), (n, n)).copy_from(b);
    let bh = b.adjoint();
    x.view_mut((n, 0), (n, n)).copy_from(&bh);
    let mat = -a.transpose();
    x.view_mut((n, n), (n, n)).copy_from(&mat);
    linalg::expm(&x)
}

/// Random automorphism of the domain as an ambient form-preserving matrix.
pub fn random_domain_automorphism<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &DomainSpec,
    scale: f64,
) -> CMat {
    match *spec {
        DomainSpec::TypeI { p, q } => random_su_pq(rng, p, q, scale),
        DomainSpec::TypeII { n } => random_so(rng, n, scale),
        DomainSpec::TypeIII { n } => random_sp(rng, n, scale),
    }
}

/// Random interior matrix point: Gaussian scaled well inside the unit ball.
pub fn random_interior_point<R: Rng + ?Sized>(rng: &mut R, spec: &DomainSpec) -> CMat {
    let (rows, cols) = spec.matrix_shape();
    let raw = linalg::random_cmat(rng, rows, cols);
    let z = match spec {
        DomainSpec::TypeI { .. } => raw,
        DomainSpec::TypeII { .. } => (&raw - raw.transpose()) * c(0.5),
        DomainSpec::TypeIII { .. } => (&raw + raw.transpose()) * c(0.5),
    };
    let top = linalg::spectral_scale(&z);
    let target: f64 = rng.gen_range(0.2..0.8);
    if top == 0.0 {
        z
    } else {
        z * c(target / top)
    }
}

/// Random boundary point on the stratum `S_r` (r = rank of the boundary
/// component through the point).
pub fn random_boundary_point<R: Rng + ?Sized>(rng: &mut R, spec: &DomainSpec, r: usize) -> CMat {
    assert!(r < spec.rank());
    match *spec {
        DomainSpec::TypeI { p, q } => {
            let units = q - r;
            let mut d = linalg::zeros(p, q);
            for i in 0..q {
                d[(i, i)] = if i < units { c(1.0) } else { c(rng.gen_range(0.1..0.85)) };
            }
            let u = random_unitary(rng, p);
            let v = random_unitary(rng, q);
            u * d * v.adjoint()
        }
        DomainSpec::TypeIII { n } => {
            let units = n - r;
            let mut d = linalg::zeros(n, n);
            for i in 0..n {
                d[(i, i)] = if i < units { c(1.0) } else { c(rng.gen_range(0.1..0.85)) };
            }
            let u = random_unitary(rng, n);
            &u * d * u.transpose()
        }
        DomainSpec::TypeII { n } => {
            let q = n / 2;
            let unit_pairs = q - r;
            let mut sigma = linalg::zeros(n, n);
            for k in 0..q {
                let s = if k < unit_pairs { 1.0 } else { rng.gen_range(0.1..0.85) };
                sigma[(2 * k, 2 * k + 1)] = c(s);
                sigma[(2 * k + 1, 2 * k)] = c(-s);
            }
            let u = random_unitary(rng, n);
            &u * sigma * u.transpose()
        }
    }
}

/// Reference basis of `k` pairwise orthogonal `I_{p,q}`-null vectors
/// `e_i + e_{q+i}` in `C^{p+q}` (requires `k <= q <= p`).
pub fn gr_null_basis(p: usize, q: usize, k: usize) -> Vec<CVec> {
    assert!(k <= q && q <= p);
    (0..k)
        .map(|i| {
            let mut v = CVec::zeros(p + q);
            v[i] = c(1.0);
            v[q + i] = c(1.0);
            v
        })
        .collect()
}

/// Reference basis of `k` vectors in `C^{2n}` null for both `I_{n,n}` and
/// `J_n` (requires `k <= n`).
pub fn lgr_null_basis(n: usize, k: usize) -> Vec<CVec> {
    assert!(k <= n);
    (0..k)
        .map(|i| {
            let mut v = CVec::zeros(2 * n);
            v[i] = c(1.0);
            v[n + i] = c(1.0);
            v
        })
        .collect()
}

/// Reference basis of `k` vectors in `C^{2n}` null for both `I_{n,n}` and
/// `S_n`: the paired pattern `e_{2j} + e_{n+2j+1}`, `e_{2j+1} - e_{n+2j}`
/// (requires `k <= 2*(n/2)`).
pub fn ogr_null_basis(n: usize, k: usize) -> Vec<CVec> {
    assert!(k <= 2 * (n / 2));
    let mut out = Vec::with_capacity(k);
    for j in 0..n / 2 {
        if out.len() == k {
            break;
        }
        let (a, b) = (2 * j, 2 * j + 1);
        let mut v = CVec::zeros(2 * n);
        v[a] = c(1.0);
        v[n + b] = c(1.0);
        out.push(v);
        if out.len() == k {
            break;
        }
        let mut w = CVec::zeros(2 * n);
        w[b] = c(1.0);
        w[n + a] = c(-1.0);
        out.push(w);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{BilinearForm, Form, HermitianForm};
    use crate::subspace::Subspace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn group_elements_preserve_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let g = random_su_pq(&mut rng, 3, 2, 0.7);
            let spec = DomainSpec::type_i(3, 2);
            assert!(spec.isometry_residual(&g) < 1e-10);
            let g = random_sp(&mut rng, 3, 0.7);
            let spec = DomainSpec::type_iii(3);
            assert!(spec.isometry_residual(&g) < 1e-10);
            let g = random_so(&mut rng, 3, 0.7);
            let spec = DomainSpec::type_ii(3);
            assert!(spec.isometry_residual(&g) < 1e-10);
        }
    }

    #[test]
    fn null_bases_are_null() {
        let h = Form::Hermitian(HermitianForm::new(3, 3));
        let s = Form::Bilinear(BilinearForm::symmetric(3));
        let j = Form::Bilinear(BilinearForm::antisymmetric(3));
        let og = Subspace::from_cols(6, &ogr_null_basis(3, 2)).unwrap();
        assert!(og.is_isotropic(&h) && og.is_isotropic(&s));
        let lg = Subspace::from_cols(6, &lgr_null_basis(3, 3)).unwrap();
        assert!(lg.is_isotropic(&h) && lg.is_isotropic(&j));
        let gr = Subspace::from_cols(6, &gr_null_basis(3, 3, 2)).unwrap();
        assert!(gr.is_isotropic(&h));
    }
}
