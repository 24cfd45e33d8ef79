//! The three classical bounded symmetric domains in their matrix
//! realizations, boundary stratification, the identification of matrix
//! points with Grassmann points, and block Moebius automorphisms.
//!
//! `D^I_{p,q} = {Z in M(p,q) : I_q - Z*Z > 0}` sits inside `Gr(q, C^{p+q})`
//! via `Z -> span{e_k + v_k}` where `v_k` is the k-th column of `Z` in the
//! negative block.  Types II/III are the antisymmetric/symmetric `n x n`
//! matrices inside `OGr_n` / `LGr_n`.

use serde::{Deserialize, Serialize};

use crate::config::{BOUNDARY_BAND, TOL};
use crate::error::{Error, Result};
use crate::forms::{BilinearForm, Form, HermitianForm};
use crate::linalg::{self, CMat};
use crate::moduli::{Dual, FlagPair};
use crate::subspace::Subspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum DomainSpec {
    #[serde(rename = "I")]
    TypeI { p: usize, q: usize },
    #[serde(rename = "II")]
    TypeII { n: usize },
    #[serde(rename = "III")]
    TypeIII { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Interior,
    Boundary,
    Outside,
}

impl DomainSpec {
    pub fn type_i(p: usize, q: usize) -> Self {
        assert!(q <= p && q >= 1, "type I requires 1 <= q <= p");
        DomainSpec::TypeI { p, q }
    }

    pub fn type_ii(n: usize) -> Self {
        assert!(n >= 2);
        DomainSpec::TypeII { n }
    }

    pub fn type_iii(n: usize) -> Self {
        assert!(n >= 1);
        DomainSpec::TypeIII { n }
    }

    pub fn rank(&self) -> usize {
        match *self {
            DomainSpec::TypeI { q, .. } => q,
            DomainSpec::TypeII { n } => n / 2,
            DomainSpec::TypeIII { n } => n,
        }
    }

    /// Dimension of the ambient vector space of the compact dual.
    pub fn ambient_dim(&self) -> usize {
        match *self {
            DomainSpec::TypeI { p, q } => p + q,
            DomainSpec::TypeII { n } | DomainSpec::TypeIII { n } => 2 * n,
        }
    }

    /// Shape `(rows, cols)` of a matrix point.
    pub fn matrix_shape(&self) -> (usize, usize) {
        match *self {
            DomainSpec::TypeI { p, q } => (p, q),
            DomainSpec::TypeII { n } | DomainSpec::TypeIII { n } => (n, n),
        }
    }

    /// Number of columns of the embedded plane (q, n, n).
    pub fn plane_dim(&self) -> usize {
        self.matrix_shape().1
    }

    pub fn dual(&self) -> Dual {
        match *self {
            DomainSpec::TypeI { p, q } => Dual::Gr { q, p },
            DomainSpec::TypeII { n } => Dual::OGr { n },
            DomainSpec::TypeIII { n } => Dual::LGr { n },
        }
    }

    pub fn hermitian_form(&self) -> HermitianForm {
        match *self {
            DomainSpec::TypeI { p, q } => HermitianForm::new(p, q),
            DomainSpec::TypeII { n } | DomainSpec::TypeIII { n } => HermitianForm::new(n, n),
        }
    }

    pub fn bilinear_form(&self) -> Option<BilinearForm> {
        match *self {
            DomainSpec::TypeI { .. } => None,
            DomainSpec::TypeII { n } => Some(BilinearForm::symmetric(n)),
            DomainSpec::TypeIII { n } => Some(BilinearForm::antisymmetric(n)),
        }
    }

    /// Shape and symmetry-class validation of a matrix point.
    pub fn validate_point(&self, z: &CMat) -> Result<()> {
        let (r, c) = self.matrix_shape();
        if z.nrows() != r || z.ncols() != c {
            return Err(Error::ShapeMismatch(format!(
                "expected {}x{}, got {}x{}",
                r,
                c,
                z.nrows(),
                z.ncols()
            )));
        }
        let scale = 1.0f64.max(linalg::max_abs(z));
        let res = match self {
            DomainSpec::TypeI { .. } => 0.0,
            DomainSpec::TypeII { .. } => linalg::max_abs(&(z + z.transpose())),
            DomainSpec::TypeIII { .. } => linalg::max_abs(&(z - z.transpose())),
        };
        if res > 100.0 * TOL * scale {
            return Err(Error::SymmetryViolation(res));
        }
        Ok(())
    }

    /// Interior/boundary/outside classification by singular values.
    pub fn contains(&self, z: &CMat) -> Result<Location> {
        self.validate_point(z)?;
        let sv = linalg::singular_values(z);
        let max = sv.first().copied().unwrap_or(0.0);
        if max > 1.0 + BOUNDARY_BAND {
            Ok(Location::Outside)
        } else if max >= 1.0 - BOUNDARY_BAND {
            Ok(Location::Boundary)
        } else {
            Ok(Location::Interior)
        }
    }

    /// Index of the boundary orbit `S_r`: the rank of the boundary
    /// component through the point.
    pub fn boundary_stratum(&self, z: &CMat) -> Result<usize> {
        if self.contains(z)? != Location::Boundary {
            return Err(Error::NotOnBoundary);
        }
        let units = linalg::singular_values(z)
            .iter()
            .filter(|&&s| (s - 1.0).abs() <= BOUNDARY_BAND)
            .count();
        match self {
            DomainSpec::TypeII { .. } => {
                if units % 2 != 0 {
                    return Err(Error::OddUnitCount);
                }
                Ok(self.rank() - units / 2)
            }
            _ => Ok(self.rank() - units),
        }
    }

    /// The plane `span{e_k + v_k}` carrying `Z` into the compact dual.
    pub fn embed_point(&self, z: &CMat) -> Result<Subspace> {
        self.validate_point(z)?;
        let q = self.plane_dim();
        let basis = linalg::vcat(&[&linalg::eye(q), z]);
        Subspace::canonicalize(&basis)
    }

    /// Inverse of [`embed_point`] on the big Schubert cell.
    pub fn chart_of(&self, w: &Subspace) -> Result<CMat> {
        let q = self.plane_dim();
        if w.ambient_dim() != self.ambient_dim() || w.dim() != q {
            return Err(Error::ShapeMismatch(format!(
                "subspace {}-dim in C^{}, expected {}-dim in C^{}",
                w.dim(),
                w.ambient_dim(),
                q,
                self.ambient_dim()
            )));
        }
        let b = w.onb();
        let top = b.rows(0, q).into_owned();
        let bottom = b.rows(q, self.ambient_dim() - q).into_owned();
        let inv = linalg::try_inverse(&top).ok_or(Error::ChartFailure(
            "plane is outside the big Schubert cell".into(),
        ))?;
        Ok(bottom * inv)
    }

    /// Residual of the form-preservation conditions for `g`.
    pub fn isometry_residual(&self, g: &CMat) -> f64 {
        let i = self.hermitian_form().matrix();
        let mut res = linalg::max_abs(&(g.adjoint() * &i * g - &i));
        if let Some(f) = self.bilinear_form() {
            let m = f.matrix();
            res = res.max(linalg::max_abs(&(g.transpose() * &m * g - &m)));
        }
        res
    }

    /// Block Moebius action `Z -> (AZ + B)(CZ + D)^{-1}` in the block
    /// convention matching [`embed_point`], i.e. `D = g[0..q,0..q]`,
    /// `C = g[0..q,q..]`, `B = g[q..,0..q]`, `A = g[q..,q..]`, so that
    /// `embed_point(mobius(g, Z)) = g . embed_point(Z)`.
    pub fn mobius(&self, g: &CMat, z: &CMat) -> Result<CMat> {
        let n = self.ambient_dim();
        if g.nrows() != n || g.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "automorphism must be {n}x{n}"
            )));
        }
        let res = self.isometry_residual(g);
        let scale = 1.0f64.max(linalg::max_abs(g).powi(2));
        if res > 1e-8 * scale {
            return Err(Error::NotAnIsometry(res));
        }
        self.validate_point(z)?;
        let q = self.plane_dim();
        let d = g.view((0, 0), (q, q)).into_owned();
        let c = g.view((0, q), (q, n - q)).into_owned();
        let b = g.view((q, 0), (n - q, q)).into_owned();
        let a = g.view((q, q), (n - q, n - q)).into_owned();
        let denom = d + &c * z;
        let inv = linalg::try_inverse(&denom).ok_or(Error::SingularDenominator)?;
        Ok((b + &a * z) * inv)
    }

    /// Membership predicate for the characteristic slice `X_sigma ∩ Omega`.
    pub fn characteristic_slice(&self, flag: &FlagPair) -> Result<SlicePredicate> {
        if flag.dual() != self.dual() {
            return Err(Error::InvalidFlag(format!(
                "flag dual {:?} does not match domain {:?}",
                flag.dual(),
                self
            )));
        }
        Ok(SlicePredicate {
            spec: *self,
            v1: flag.v1().clone(),
            v2: flag.v2()?,
        })
    }
}

/// Predicate object for `Z in X_{(V1,V2)} ∩ Omega`.
pub struct SlicePredicate {
    spec: DomainSpec,
    v1: Subspace,
    v2: Subspace,
}

impl SlicePredicate {
    pub fn contains(&self, z: &CMat) -> Result<bool> {
        if self.spec.contains(z)? != Location::Interior {
            return Ok(false);
        }
        let w = self.spec.embed_point(z)?;
        Ok(self.v1.is_contained_in(&w, 1e-8) && w.is_contained_in(&self.v2, 1e-8))
    }
}

/// A validated matrix point of a domain (interior or boundary).
#[derive(Debug, Clone)]
pub struct DomainPoint {
    pub spec: DomainSpec,
    pub z: CMat,
}

impl DomainPoint {
    pub fn new(spec: DomainSpec, z: CMat) -> Result<Self> {
        spec.validate_point(&z)?;
        if spec.contains(&z)? == Location::Outside {
            return Err(Error::Input("matrix point lies outside the closed domain".into()));
        }
        Ok(DomainPoint { spec, z })
    }
}

/// Hermitian (plus bilinear) form pair of the ambient space, used by the
/// slice and stratum samplers.
pub fn ambient_forms(spec: &DomainSpec) -> (Form, Option<Form>) {
    (
        Form::Hermitian(spec.hermitian_form()),
        spec.bilinear_form().map(Form::Bilinear),
    )
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;
    use super::*;
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag_point(spec: &DomainSpec, entries: &[f64]) -> CMat {
        let (r, cdim) = spec.matrix_shape();
        let mut z = linalg::zeros(r, cdim);
        for (i, &e) in entries.iter().enumerate() {
            z[(i, i)] = c(e);
        }
        z
    }

    #[test]
    fn contains_classification() {
        let spec = DomainSpec::type_i(2, 2);
        assert_eq!(spec.contains(&linalg::zeros(2, 2)).unwrap(), Location::Interior);
        assert_eq!(
            spec.contains(&diag_point(&spec, &[1.0, 0.0])).unwrap(),
            Location::Boundary
        );
        assert_eq!(
            spec.contains(&diag_point(&spec, &[2.0, 0.0])).unwrap(),
            Location::Outside
        );
    }

    #[test]
    fn boundary_strata_type_i() {
        let spec = DomainSpec::type_i(2, 2);
        assert_eq!(spec.boundary_stratum(&diag_point(&spec, &[1.0, 0.5])).unwrap(), 1);
        assert_eq!(spec.boundary_stratum(&diag_point(&spec, &[1.0, 1.0])).unwrap(), 0);
        assert!(matches!(
            spec.boundary_stratum(&diag_point(&spec, &[0.5, 0.5])),
            Err(Error::NotOnBoundary)
        ));
    }

    #[test]
    fn boundary_stratum_type_ii_pairs() {
        // antidiag(1,-1) in D^II_2: both singular values are 1
        let spec = DomainSpec::type_ii(2);
        let mut z = linalg::zeros(2, 2);
        z[(0, 1)] = c(1.0);
        z[(1, 0)] = c(-1.0);
        assert_eq!(spec.boundary_stratum(&z).unwrap(), 0);
    }

    #[test]
    fn stratum_matches_isotropic_parametrization() {
        // oracle: the embedded plane of a stratum-r boundary point has
        // signature (r, 0, q - r) under I_{p,q}
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for spec in [
            DomainSpec::type_i(3, 2),
            DomainSpec::type_iii(3),
            DomainSpec::type_ii(4),
        ] {
            for r in 0..spec.rank() {
                let z = sampling::random_boundary_point(&mut rng, &spec, r);
                assert_eq!(spec.boundary_stratum(&z).unwrap(), r, "{spec:?} r={r}");
                let w = spec.embed_point(&z).unwrap();
                let (plus, minus, zero) = w.restrict_signature(&spec.hermitian_form());
                assert_eq!(minus, 0);
                assert_eq!(zero, spec.plane_dim() - plus);
                // for types I/III the positive count is the stratum rank
                if !matches!(spec, DomainSpec::TypeII { .. }) {
                    assert_eq!(plus, spec.plane_dim() - (spec.rank() - r));
                }
            }
        }
    }

    #[test]
    fn embed_point_of_zero_is_coordinate_plane() {
        let spec = DomainSpec::type_i(3, 2);
        let w = spec.embed_point(&linalg::zeros(3, 2)).unwrap();
        assert!(w.eq_within(&Subspace::coordinate(5, &[0, 1]), 1e-12));
    }

    #[test]
    fn type_iii_plane_is_j_isotropic() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let spec = DomainSpec::type_iii(3);
        let j = Form::Bilinear(spec.bilinear_form().unwrap());
        for _ in 0..100 {
            let z = sampling::random_interior_point(&mut rng, &spec);
            let w = spec.embed_point(&z).unwrap();
            assert!(w.is_isotropic(&j));
        }
    }

    #[test]
    fn interior_iff_positive_restriction() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let spec = DomainSpec::type_i(3, 2);
        for _ in 0..50 {
            let z = sampling::random_interior_point(&mut rng, &spec);
            let w = spec.embed_point(&z).unwrap();
            assert_eq!(w.restrict_signature(&spec.hermitian_form()), (2, 0, 0));
        }
    }

    #[test]
    fn mobius_identity_and_unitary_isotropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let spec = DomainSpec::type_i(3, 2);
        let z = sampling::random_interior_point(&mut rng, &spec);
        let id = linalg::eye(5);
        assert!(linalg::max_abs(&(spec.mobius(&id, &z).unwrap() - &z)) < 1e-12);
        // block-diagonal unitary g acts by Z -> V Z U^{-1}
        let u = sampling::random_unitary(&mut rng, 2);
        let v = sampling::random_unitary(&mut rng, 3);
        let mut g = linalg::zeros(5, 5);
        g.view_mut((0, 0), (2, 2)).copy_from(&u);
        g.view_mut((2, 2), (3, 3)).copy_from(&v);
        let z2 = spec.mobius(&g, &z).unwrap();
        let direct = &v * &z * linalg::try_inverse(&u).unwrap();
        assert!(linalg::max_abs(&(z2 - direct)) < 1e-10);
    }

    #[test]
    fn mobius_equivariance_with_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for spec in [
            DomainSpec::type_i(3, 2),
            DomainSpec::type_ii(3),
            DomainSpec::type_iii(2),
        ] {
            for _ in 0..34 {
                let g = sampling::random_domain_automorphism(&mut rng, &spec, 0.5);
                let z = sampling::random_interior_point(&mut rng, &spec);
                let z2 = spec.mobius(&g, &z).unwrap();
                assert_eq!(spec.contains(&z2).unwrap(), Location::Interior);
                let lhs = spec.embed_point(&z2).unwrap();
                let rhs = spec.embed_point(&z).unwrap().map(&g).unwrap();
                assert!(lhs.projector_distance(&rhs) < 1e-9, "{spec:?}");
            }
        }
    }

    #[test]
    fn mobius_invariance_of_strata() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for spec in [DomainSpec::type_i(3, 2), DomainSpec::type_iii(3)] {
            for _ in 0..25 {
                let r = rng.gen_range(0..spec.rank());
                let z = sampling::random_boundary_point(&mut rng, &spec, r);
                let g = sampling::random_domain_automorphism(&mut rng, &spec, 0.3);
                let z2 = spec.mobius(&g, &z).unwrap();
                assert_eq!(spec.boundary_stratum(&z2).unwrap(), r);
            }
        }
    }

    #[test]
    fn rejects_non_isometry_and_singular_denominator() {
        let spec = DomainSpec::type_i(2, 2);
        let mut g = linalg::eye(4);
        g[(0, 0)] = c(2.0);
        assert!(matches!(
            spec.mobius(&g, &linalg::zeros(2, 2)),
            Err(Error::NotAnIsometry(_))
        ));
    }

    #[test]
    fn spec_serde_format() {
        let spec = DomainSpec::type_i(3, 2);
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"type":"I","p":3,"q":2}"#);
        let back: DomainSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
    }

    use rand::Rng;
}
