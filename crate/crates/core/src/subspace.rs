//! Canonical subspaces of `C^N` and the exact-tolerance operations on them:
//! sums, intersections, form-annihilators, isotropy and signature tests.
//!
//! A subspace is stored through two representatives of the same column
//! space: an orthonormal basis (used for all numerically sensitive
//! computations) and the reduced column echelon form (used for equality,
//! which becomes an entrywise comparison).  The echelon form is
//! phase-normalized: the pivot entry of each column is exactly 1 and pivot
//! rows vanish in the other columns, so it is the unique representative of
//! the subspace.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{EQ_TOL, TOL};
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::linalg::{self, CMat, CVec};

#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    /// Orthonormal basis, `ambient x k`.
    ortho: CMat,
    /// Reduced column echelon representative, `ambient x k`.
    canonical: CMat,
    /// Row indices of the pivots, strictly increasing.
    pivots: Vec<usize>,
}

impl Subspace {
    /// Canonicalize the column span of `basis`.
    ///
    /// The numerical rank must be unambiguous: the normalized singular
    /// value gap at the cutoff has to exceed `10 * TOL`.
    pub fn canonicalize(basis: &CMat) -> Result<Subspace> {
        let ambient = basis.nrows();
        if basis.ncols() == 0 {
            return Ok(Subspace::zero(ambient));
        }
        let svd = basis.clone().svd(true, false);
        let u = svd.u.as_ref().expect("svd u");
        let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let scale = sv.first().copied().unwrap_or(0.0);
        if scale == 0.0 {
            return Ok(Subspace::zero(ambient));
        }
        let k = sv.iter().filter(|&&s| s > TOL * scale).count();
        let dropped = if k < sv.len() { sv[k] } else { 0.0 };
        if k > 0 {
            let gap = (sv[k - 1] - dropped) / scale;
            if gap <= 10.0 * TOL {
                return Err(Error::AmbiguousRank {
                    gap,
                    threshold: 10.0 * TOL,
                });
            }
        }
        // The SVD of nalgebra does not sort; re-extract the kept columns in
        // descending order of their singular values.
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| {
            svd.singular_values[j]
                .partial_cmp(&svd.singular_values[i])
                .unwrap()
        });
        let mut ortho = linalg::zeros(ambient, k);
        for (c, &i) in order.iter().take(k).enumerate() {
            ortho.set_column(c, &u.column(i));
        }
        let (canonical, pivots) = reduced_column_echelon(&ortho);
        Ok(Subspace {
            ambient,
            ortho,
            canonical,
            pivots,
        })
    }

    pub fn zero(ambient: usize) -> Subspace {
        Subspace {
            ambient,
            ortho: linalg::zeros(ambient, 0),
            canonical: linalg::zeros(ambient, 0),
            pivots: Vec::new(),
        }
    }

    pub fn full(ambient: usize) -> Subspace {
        Subspace {
            ambient,
            ortho: linalg::eye(ambient),
            canonical: linalg::eye(ambient),
            pivots: (0..ambient).collect(),
        }
    }

    /// Span of the listed standard basis vectors.
    pub fn coordinate(ambient: usize, indices: &[usize]) -> Subspace {
        let mut b = linalg::zeros(ambient, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            b[(i, c)] = Complex64::new(1.0, 0.0);
        }
        Subspace::canonicalize(&b).expect("coordinate subspace")
    }

    pub fn from_cols(ambient: usize, cols: &[CVec]) -> Result<Subspace> {
        let mut b = linalg::zeros(ambient, cols.len());
        for (c, v) in cols.iter().enumerate() {
            assert_eq!(v.len(), ambient);
            b.set_column(c, v);
        }
        Subspace::canonicalize(&b)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.ortho.ncols()
    }

    pub fn onb(&self) -> &CMat {
        &self.ortho
    }

    pub fn canonical(&self) -> &CMat {
        &self.canonical
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Entrywise comparison of canonical forms.
    pub fn eq_within(&self, other: &Subspace, tol: f64) -> bool {
        if self.ambient != other.ambient || self.dim() != other.dim() {
            return false;
        }
        if self.dim() == 0 {
            return true;
        }
        let scale = 1.0f64
            .max(linalg::max_abs(&self.canonical))
            .max(linalg::max_abs(&other.canonical));
        linalg::max_abs(&(&self.canonical - &other.canonical)) <= tol * scale
    }

    /// Distance between the orthogonal projectors onto the two subspaces.
    /// Zero iff equal; insensitive to basis conditioning.
    pub fn projector_distance(&self, other: &Subspace) -> f64 {
        assert_eq!(self.ambient, other.ambient);
        let pa = &self.ortho * self.ortho.adjoint();
        let pb = &other.ortho * other.ortho.adjoint();
        linalg::max_abs(&(pa - pb))
    }

    pub fn contains_vector(&self, v: &CVec, tol: f64) -> bool {
        let proj = &self.ortho * (self.ortho.adjoint() * v);
        let res = v - proj;
        let scale = v.norm().max(1.0);
        res.norm() <= tol * scale
    }

    pub fn is_contained_in(&self, other: &Subspace, tol: f64) -> bool {
        if self.ambient != other.ambient || self.dim() > other.dim() {
            return false;
        }
        let proj = other.onb() * (other.onb().adjoint() * self.onb());
        linalg::max_abs(&(proj - self.onb())) <= tol
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        other.is_contained_in(self, EQ_TOL)
    }

    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        if self.ambient != other.ambient {
            return Err(Error::DimensionMismatch(format!(
                "ambient {} vs {}",
                self.ambient, other.ambient
            )));
        }
        if self.dim() == 0 || other.dim() == 0 {
            return Ok(Subspace::zero(self.ambient));
        }
        let stacked = linalg::hcat(&[self.onb(), &(other.onb() * Complex64::new(-1.0, 0.0))]);
        let ns = linalg::null_space(&stacked);
        if ns.ncols() == 0 {
            return Ok(Subspace::zero(self.ambient));
        }
        let coeff = ns.rows(0, self.dim()).into_owned();
        Subspace::canonicalize(&(self.onb() * coeff))
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        if self.ambient != other.ambient {
            return Err(Error::DimensionMismatch(format!(
                "ambient {} vs {}",
                self.ambient, other.ambient
            )));
        }
        if self.dim() == 0 {
            return Ok(other.clone());
        }
        if other.dim() == 0 {
            return Ok(self.clone());
        }
        Subspace::canonicalize(&linalg::hcat(&[self.onb(), other.onb()]))
    }

    /// Annihilator with respect to a nondegenerate form.
    pub fn perp(&self, form: &Form) -> Result<Subspace> {
        if form.ambient_dim() != self.ambient {
            return Err(Error::DimensionMismatch(format!(
                "form ambient {} vs subspace ambient {}",
                form.ambient_dim(),
                self.ambient
            )));
        }
        if self.dim() == 0 {
            return Ok(Subspace::full(self.ambient));
        }
        let rows = form.annihilator_rows(self.onb());
        let ns = linalg::null_space(&rows);
        Subspace::canonicalize(&ns)
    }

    /// Zero-restriction test of the form on this subspace.
    pub fn is_isotropic(&self, form: &Form) -> bool {
        assert_eq!(form.ambient_dim(), self.ambient);
        if self.dim() == 0 {
            return true;
        }
        linalg::max_abs(&form.gram(self.onb())) <= 10.0 * TOL
    }

    /// Signature `(n_plus, n_minus, n_zero)` of a Hermitian form restricted
    /// to this subspace, with zero-threshold `TOL`.
    pub fn restrict_signature(&self, form: &crate::forms::HermitianForm) -> (usize, usize, usize) {
        assert_eq!(form.ambient_dim(), self.ambient);
        let gram = form.gram(self.onb());
        let ev = linalg::hermitian_eigenvalues(&gram);
        let plus = ev.iter().filter(|&&x| x > TOL).count();
        let minus = ev.iter().filter(|&&x| x < -TOL).count();
        (plus, minus, self.dim() - plus - minus)
    }

    /// Apply an invertible matrix to the subspace.
    pub fn map(&self, g: &CMat) -> Result<Subspace> {
        if g.ncols() != self.ambient {
            return Err(Error::ShapeMismatch(format!(
                "matrix {}x{} applied to ambient {}",
                g.nrows(),
                g.ncols(),
                self.ambient
            )));
        }
        Subspace::canonicalize(&(g * self.onb()))
    }
}

impl PartialEq for Subspace {
    fn eq(&self, other: &Self) -> bool {
        self.eq_within(other, EQ_TOL)
    }
}

/// Reduced column echelon form of the column span of an orthonormal `q`.
/// Returns the representative and the pivot rows.
fn reduced_column_echelon(q: &CMat) -> (CMat, Vec<usize>) {
    // Work on the transpose: reduced row echelon of the k x N matrix q^T.
    let mut m = q.transpose();
    let (k, n) = (m.nrows(), m.ncols());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == k {
            break;
        }
        // partial pivoting among the remaining rows
        let (best, mag) = (r..k)
            .map(|i| (i, m[(i, c)].norm()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if mag <= TOL {
            continue;
        }
        m.swap_rows(r, best);
        let piv = m[(r, c)];
        for j in 0..n {
            m[(r, j)] /= piv;
        }
        for i in 0..k {
            if i != r {
                let f = m[(i, c)];
                if f.norm() > 0.0 {
                    for j in 0..n {
                        let sub = f * m[(r, j)];
                        m[(i, j)] -= sub;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    // Clean tiny residue in pivot columns.
    let mut canonical = m.transpose();
    for (col, &p) in pivots.iter().enumerate() {
        for i in 0..k {
            canonical[(p, i)] = if i == col {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    }
    (canonical, pivots)
}

// ---------------------------------------------------------------------------
// serde: {ambient, basis: [[re, im], ...]} column-major
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SubspaceJson {
    ambient: usize,
    basis: Vec<[f64; 2]>,
}

impl Serialize for Subspace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let basis = self
            .canonical
            .iter()
            .map(|z| [z.re, z.im])
            .collect::<Vec<_>>();
        SubspaceJson {
            ambient: self.ambient,
            basis,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Subspace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SubspaceJson::deserialize(d)?;
        if raw.ambient == 0 || raw.basis.len() % raw.ambient != 0 {
            return Err(serde::de::Error::custom("basis length not a multiple of ambient"));
        }
        let k = raw.basis.len() / raw.ambient;
        let m = CMat::from_iterator(
            raw.ambient,
            k,
            raw.basis.iter().map(|p| Complex64::new(p[0], p[1])),
        );
        Subspace::canonicalize(&m).map_err(serde::de::Error::custom)
    }
}

/// Random subspace of the given dimension (Gaussian basis).
pub fn random_subspace<R: rand::Rng + ?Sized>(rng: &mut R, ambient: usize, dim: usize) -> Subspace {
    assert!(dim <= ambient);
    loop {
        let b = linalg::random_cmat(rng, ambient, dim);
        if let Ok(s) = Subspace::canonicalize(&b) {
            if s.dim() == dim {
                return s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{BilinearForm, HermitianForm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn full_rank_pair_canonicalizes_to_identity() {
        // span{(1,0),(1,1)} in C^2 is the full space
        let b = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let s = Subspace::canonicalize(&b).unwrap();
        assert_eq!(s.dim(), 2);
        assert!(linalg::max_abs(&(s.canonical() - linalg::eye(2))) < 1e-12);
    }

    #[test]
    fn already_canonical_line() {
        let s = Subspace::coordinate(3, &[0]);
        assert_eq!(s.dim(), 1);
        assert_eq!(s.canonical()[(0, 0)], c(1.0, 0.0));
        assert_eq!(s.canonical()[(1, 0)], c(0.0, 0.0));
    }

    #[test]
    fn small_perturbation_recovers_coordinate_plane() {
        // span{(1,eps,0),(1,0,0)} with eps = 1e-3 has the exact canonical
        // form of span{e1,e2}; the rational row-reduction oracle in the
        // integration tests fixes the same answer.
        let eps = 1e-3;
        let b = CMat::from_row_slice(
            3,
            2,
            &[
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(eps, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
            ],
        );
        let s = Subspace::canonicalize(&b).unwrap();
        assert_eq!(s.dim(), 2);
        let expect = Subspace::coordinate(3, &[0, 1]);
        assert!(s.eq_within(&expect, 1e-9));
    }

    #[test]
    fn canonicalize_idempotent_and_gl_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let b = linalg::random_cmat(&mut rng, 6, 3);
            let s = Subspace::canonicalize(&b).unwrap();
            let again = Subspace::canonicalize(s.canonical()).unwrap();
            assert!(s.eq_within(&again, 1e-10));
            // right-multiply by a random invertible 3x3
            let g = loop {
                let g = linalg::random_cmat(&mut rng, 3, 3);
                if linalg::rank(&g) == 3 {
                    break g;
                }
            };
            let s2 = Subspace::canonicalize(&(&b * g)).unwrap();
            assert!(s.eq_within(&s2, 1e-8));
        }
    }

    #[test]
    fn ambiguous_rank_detected() {
        let mut b = linalg::zeros(3, 2);
        b[(0, 0)] = c(1.0, 0.0);
        b[(1, 1)] = c(5e-9, 0.0);
        match Subspace::canonicalize(&b) {
            Err(Error::AmbiguousRank { .. }) => {}
            other => panic!("expected AmbiguousRank, got {:?}", other.map(|s| s.dim())),
        }
    }

    #[test]
    fn intersect_coordinate_planes() {
        let a = Subspace::coordinate(4, &[0, 1]);
        let b = Subspace::coordinate(4, &[1, 2]);
        let i = a.intersect(&b).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(i.eq_within(&Subspace::coordinate(4, &[1]), 1e-10));
        // idempotence
        let aa = a.intersect(&a).unwrap();
        assert!(aa.eq_within(&a, 1e-10));
    }

    #[test]
    fn sum_with_zero_is_identity() {
        let a = Subspace::coordinate(4, &[0, 2]);
        let z = Subspace::zero(4);
        assert!(a.sum(&z).unwrap().eq_within(&a, 1e-12));
        let e01 = Subspace::coordinate(4, &[0]).sum(&Subspace::coordinate(4, &[1])).unwrap();
        assert!(e01.eq_within(&Subspace::coordinate(4, &[0, 1]), 1e-12));
    }

    #[test]
    fn grassmann_dimension_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let n = rng.gen_range(2..=10usize);
            let da = rng.gen_range(0..=n);
            let db = rng.gen_range(0..=n);
            let a = random_subspace(&mut rng, n, da);
            let b = random_subspace(&mut rng, n, db);
            let s = a.sum(&b).unwrap();
            let i = a.intersect(&b).unwrap();
            assert_eq!(s.dim() + i.dim(), da + db, "n={n} da={da} db={db}");
            assert!(i.is_contained_in(&a, 1e-8) && i.is_contained_in(&b, 1e-8));
        }
    }

    #[test]
    fn perp_of_line_under_j2() {
        // J pairs e_i with e_{n+i}; the J_2-annihilator of e1 in C^4 is
        // span{e1, e2, e4}.
        let j = Form::Bilinear(BilinearForm::antisymmetric(2));
        let a = Subspace::coordinate(4, &[0]);
        let p = a.perp(&j).unwrap();
        assert_eq!(p.dim(), 3);
        assert!(p.eq_within(&Subspace::coordinate(4, &[0, 1, 3]), 1e-10));
        // perp of the full space is zero
        let full = Subspace::full(4);
        assert_eq!(full.perp(&j).unwrap().dim(), 0);
    }

    #[test]
    fn perp_involution_and_inclusion_reversal() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let forms = [
            Form::Hermitian(HermitianForm::new(3, 3)),
            Form::Bilinear(BilinearForm::symmetric(3)),
            Form::Bilinear(BilinearForm::antisymmetric(3)),
        ];
        for form in &forms {
            for _ in 0..34 {
                let d = rng.gen_range(0..=6usize);
                let a = random_subspace(&mut rng, 6, d);
                let p = a.perp(form).unwrap();
                assert_eq!(p.dim(), 6 - d);
                let pp = p.perp(form).unwrap();
                assert!(pp.eq_within(&a, 1e-7), "perp not involutive for {form:?}");
                // inclusion reversal on a random subspace of a
                if d > 0 {
                    let sub = a.intersect(&random_subspace(&mut rng, 6, 5)).unwrap();
                    if sub.is_contained_in(&a, 1e-8) {
                        let ps = sub.perp(form).unwrap();
                        assert!(p.is_contained_in(&ps, 1e-7));
                    }
                }
            }
        }
    }

    #[test]
    fn isotropy_matches_perp_containment() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let forms = [
            Form::Hermitian(HermitianForm::new(3, 3)),
            Form::Bilinear(BilinearForm::symmetric(3)),
            Form::Bilinear(BilinearForm::antisymmetric(3)),
        ];
        for form in &forms {
            for _ in 0..40 {
                let d = rng.gen_range(1..=3);
                let a = random_subspace(&mut rng, 6, d);
                let iso = a.is_isotropic(form);
                let perp = a.perp(form).unwrap();
                assert_eq!(iso, a.is_contained_in(&perp, 1e-7));
            }
        }
    }

    #[test]
    fn null_line_is_isotropic_under_ipq() {
        // e1 + e_{q+1} has <v,v> = 1 - 1 = 0 under I_{p,q}
        let h = HermitianForm::new(2, 2);
        let mut v = CVec::zeros(4);
        v[0] = c(1.0, 0.0);
        v[2] = c(1.0, 0.0);
        let s = Subspace::from_cols(4, &[v]).unwrap();
        assert!(s.is_isotropic(&Form::Hermitian(h.clone())));
        assert!(!Subspace::coordinate(4, &[0]).is_isotropic(&Form::Hermitian(h)));
    }

    #[test]
    fn signature_counts() {
        let h = HermitianForm::new(1, 1);
        let full = Subspace::full(2);
        assert_eq!(full.restrict_signature(&h), (1, 1, 0));
        let mut v = CVec::zeros(2);
        v[0] = c(1.0, 0.0);
        v[1] = c(1.0, 0.0);
        let iso = Subspace::from_cols(2, &[v]).unwrap();
        assert_eq!(iso.restrict_signature(&h), (0, 0, 1));
    }

    #[test]
    fn serde_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let s = random_subspace(&mut rng, 5, 2);
        let j = serde_json::to_string(&s).unwrap();
        let back: Subspace = serde_json::from_str(&j).unwrap();
        assert!(s.eq_within(&back, 1e-10));
    }
}
