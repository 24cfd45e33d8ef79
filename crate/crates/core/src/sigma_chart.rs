//! The `(x; y; z)` chart on `D_r(LGr_n) = SGr(n-r, C^{2n})` and the
//! contact-form computations on the CR locus inside it.
//!
//! In the big Schubert cell a plane is the column span of the stack
//! `[z; y; x; I]` (row blocks of heights `r, n-r, r, n-r`).  The cell meets
//! `SGr(n-r, C^{2n})` where
//!
//! ```text
//!     y - y^t + x^t z - z^t x = 0
//! ```
//!
//! and the isotropic locus `Sigma_r` where additionally
//!
//! ```text
//!     I_{n-r} + x^* x - y^* y - z^* z = 0 .
//! ```
//!
//! The forms are `theta = x^* dx - y^* dy - z^* dz` (skew-Hermitian contact
//! form) and `theta~ = dy + x^t dz - z^t dx` (symmetric).  The bracket test
//! evaluates `theta ∧ d theta` on `(v, w1, conj w2)` and
//! `theta~ ∧ d theta~` on `(v, w1, w2)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::subspace::Subspace;

#[derive(Debug, Clone, Copy)]
pub struct SgrChart {
    pub n: usize,
    pub r: usize,
}

#[derive(Debug, Clone)]
pub struct ChartPoint {
    pub x: CMat,
    pub y: CMat,
    pub z: CMat,
}

/// Holomorphic components of a chart tangent vector.
#[derive(Debug, Clone)]
pub struct ChartTangent {
    pub x: CMat,
    pub y: CMat,
    pub z: CMat,
}

/// A complexified tangent vector: the values of the holomorphic and
/// anti-holomorphic coordinate differentials on it.
#[derive(Debug, Clone)]
struct Complexified {
    hol: ChartTangent,
    anti: ChartTangent,
}

impl SgrChart {
    pub fn new(n: usize, r: usize) -> Self {
        assert!(r >= 1 && r < n);
        SgrChart { n, r }
    }

    fn shapes_ok(&self, x: &CMat, y: &CMat, z: &CMat) -> bool {
        let k = self.n - self.r;
        x.nrows() == self.r
            && x.ncols() == k
            && z.nrows() == self.r
            && z.ncols() == k
            && y.nrows() == k
            && y.ncols() == k
    }

    pub fn origin(&self) -> ChartPoint {
        let k = self.n - self.r;
        ChartPoint {
            x: linalg::zeros(self.r, k),
            y: linalg::eye(k),
            z: linalg::zeros(self.r, k),
        }
    }

    /// Residual of the symplectic-Grassmannian equation.
    pub fn sgr_residual(&self, p: &ChartPoint) -> f64 {
        let m = &p.y - p.y.transpose() + p.x.transpose() * &p.z - p.z.transpose() * &p.x;
        linalg::max_abs(&m)
    }

    /// Residual of the isotropic-locus equation.
    pub fn sigma_residual(&self, p: &ChartPoint) -> f64 {
        let k = self.n - self.r;
        let m = linalg::eye(k) + p.x.adjoint() * &p.x - p.y.adjoint() * &p.y
            - p.z.adjoint() * &p.z;
        linalg::max_abs(&m)
    }

    /// The plane of a chart point as a subspace of `C^{2n}`.
    pub fn to_subspace(&self, p: &ChartPoint) -> Result<Subspace> {
        let k = self.n - self.r;
        let stack = linalg::vcat(&[&p.z, &p.y, &p.x, &linalg::eye(k)]);
        Subspace::canonicalize(&stack)
    }

    /// Chart coordinates of a plane lying in the big cell.
    pub fn from_subspace(&self, w: &Subspace) -> Result<ChartPoint> {
        let k = self.n - self.r;
        if w.ambient_dim() != 2 * self.n || w.dim() != k {
            return Err(Error::ShapeMismatch(format!(
                "need a {k}-plane in C^{}",
                2 * self.n
            )));
        }
        let b = w.onb();
        let bottom = b.rows(self.n + self.r, k).into_owned();
        let inv = linalg::try_inverse(&bottom)
            .ok_or(Error::ChartFailure("plane outside the big cell".into()))?;
        let m = b * inv;
        Ok(ChartPoint {
            z: m.rows(0, self.r).into_owned(),
            y: m.rows(self.r, k).into_owned(),
            x: m.rows(self.n, self.r).into_owned(),
        })
    }

    /// Linearized SGr equation on a holomorphic increment.
    fn sgr_linearized(&self, p: &ChartPoint, t: &ChartTangent) -> CMat {
        &t.y - t.y.transpose() + p.x.transpose() * &t.z + t.x.transpose() * &p.z
            - p.z.transpose() * &t.x
            - t.z.transpose() * &p.x
    }

    /// `theta(t)` for a complexified tangent (only holomorphic legs).
    fn theta(&self, p: &ChartPoint, hol: &ChartTangent) -> CMat {
        p.x.adjoint() * &hol.x - p.y.adjoint() * &hol.y - p.z.adjoint() * &hol.z
    }

    /// `theta~(t)` for a complexified tangent (only holomorphic legs).
    fn theta_tilde(&self, p: &ChartPoint, hol: &ChartTangent) -> CMat {
        &hol.y + p.x.transpose() * &hol.z - p.z.transpose() * &hol.x
    }

    /// `d theta (t, s)`: one anti-holomorphic and one holomorphic leg.
    fn d_theta(&self, t: &Complexified, s: &Complexified) -> CMat {
        let part = |a: &ChartTangent, h: &ChartTangent| -> CMat {
            a.x.transpose() * &h.x - a.y.transpose() * &h.y - a.z.transpose() * &h.z
        };
        part(&t.anti, &s.hol) - part(&s.anti, &t.hol)
    }

    /// `d theta~ (t, s)`: two holomorphic legs.
    fn d_theta_tilde(&self, t: &Complexified, s: &Complexified) -> CMat {
        let th = &t.hol;
        let sh = &s.hol;
        th.x.transpose() * &sh.z - sh.x.transpose() * &th.z - th.z.transpose() * &sh.x
            + sh.z.transpose() * &th.x
    }

    /// Triple wedge `alpha ∧ d alpha` on `(t1, t2, t3)` for matrix valued
    /// one-forms, with matrix multiplication between the factors.
    fn wedge3(
        &self,
        a1: &CMat,
        a2: &CMat,
        a3: &CMat,
        d23: &CMat,
        d13: &CMat,
        d12: &CMat,
    ) -> CMat {
        a1 * d23 - a2 * d13 + a3 * d12
    }

    /// Check that `p` lies on `Sigma_r` within tolerance.
    pub fn validate_point(&self, p: &ChartPoint) -> Result<()> {
        if !self.shapes_ok(&p.x, &p.y, &p.z) {
            return Err(Error::ShapeMismatch("chart point shapes".into()));
        }
        let res = self.sgr_residual(p).max(self.sigma_residual(p));
        if res > 1e-7 {
            return Err(Error::PointNotOnSigma(res));
        }
        Ok(())
    }

    /// Check a holomorphic tangent against the linearized SGr equation.
    pub fn validate_holomorphic(&self, p: &ChartPoint, t: &ChartTangent) -> Result<()> {
        if !self.shapes_ok(&t.x, &t.y, &t.z) {
            return Err(Error::ShapeMismatch("tangent shapes".into()));
        }
        let res = linalg::max_abs(&self.sgr_linearized(p, t));
        let scale = 1.0f64
            .max(linalg::max_abs(&t.x))
            .max(linalg::max_abs(&t.y))
            .max(linalg::max_abs(&t.z));
        if res > 1e-7 * scale {
            return Err(Error::TangentNotTangent(res));
        }
        Ok(())
    }

    /// Check a real tangent: linearized SGr equation plus the Hermitian
    /// part of the linearized isotropy equation.
    pub fn validate_real(&self, p: &ChartPoint, t: &ChartTangent) -> Result<()> {
        self.validate_holomorphic(p, t)?;
        let th = self.theta(p, t);
        let res = linalg::max_abs(&(&th + th.adjoint()));
        let scale = 1.0f64
            .max(linalg::max_abs(&t.x))
            .max(linalg::max_abs(&t.y))
            .max(linalg::max_abs(&t.z));
        if res > 1e-7 * scale {
            return Err(Error::TangentNotTangent(res));
        }
        Ok(())
    }

    /// Is a holomorphic tangent in the CR distribution (`theta(w) = 0`)?
    pub fn is_cr(&self, p: &ChartPoint, w: &ChartTangent) -> bool {
        linalg::max_abs(&self.theta(p, w)) <= 1e-7
    }
}

/// Value of the two bracket forms on `(v, w1, w2)`.
#[derive(Debug, Clone)]
pub struct LeviBracket {
    /// `theta ∧ d theta (v, w1, conj w2)`, matrix valued.
    pub theta: CMat,
    /// `theta~ ∧ d theta~ (v, w1, w2)`, matrix valued.
    pub theta_tilde: CMat,
}

impl LeviBracket {
    /// Largest-magnitude entry over both forms.
    pub fn scalar(&self) -> Complex64 {
        let mut best = Complex64::new(0.0, 0.0);
        for m in [&self.theta, &self.theta_tilde] {
            for e in m.iter() {
                if e.norm() > best.norm() {
                    best = *e;
                }
            }
        }
        best
    }

    pub fn magnitude(&self) -> f64 {
        linalg::max_abs(&self.theta).max(linalg::max_abs(&self.theta_tilde))
    }
}

/// Evaluate the bracket forms at `p` on a real tangent `v` (given by its
/// holomorphic part) and two `(1,0)` vectors `w1`, `w2` tangent to
/// `D_r(LGr_n)`.
pub fn levi_bracket_check(
    chart: &SgrChart,
    p: &ChartPoint,
    v: &ChartTangent,
    w1: &ChartTangent,
    w2: &ChartTangent,
) -> Result<LeviBracket> {
    chart.validate_point(p)?;
    chart.validate_real(p, v)?;
    chart.validate_holomorphic(p, w1)?;
    chart.validate_holomorphic(p, w2)?;

    let conj_tangent = |t: &ChartTangent| ChartTangent {
        x: t.x.map(|e| e.conj()),
        y: t.y.map(|e| e.conj()),
        z: t.z.map(|e| e.conj()),
    };
    let zero = || ChartTangent {
        x: linalg::zeros(chart.r, chart.n - chart.r),
        y: linalg::zeros(chart.n - chart.r, chart.n - chart.r),
        z: linalg::zeros(chart.r, chart.n - chart.r),
    };

    let t_v = Complexified {
        hol: v.clone(),
        anti: conj_tangent(v),
    };
    let t_w1 = Complexified {
        hol: w1.clone(),
        anti: zero(),
    };
    let t_w2bar = Complexified {
        hol: zero(),
        anti: conj_tangent(w2),
    };
    let t_w2 = Complexified {
        hol: w2.clone(),
        anti: zero(),
    };

    // theta ∧ d theta on (v, w1, conj w2)
    let a1 = chart.theta(p, &t_v.hol);
    let a2 = chart.theta(p, &t_w1.hol);
    let a3 = chart.theta(p, &t_w2bar.hol); // zero matrix
    let d23 = chart.d_theta(&t_w1, &t_w2bar);
    let d13 = chart.d_theta(&t_v, &t_w2bar);
    let d12 = chart.d_theta(&t_v, &t_w1);
    let theta_val = chart.wedge3(&a1, &a2, &a3, &d23, &d13, &d12);

    // theta~ ∧ d theta~ on (v, w1, w2)
    let b1 = chart.theta_tilde(p, &t_v.hol);
    let b2 = chart.theta_tilde(p, &t_w1.hol);
    let b3 = chart.theta_tilde(p, &t_w2.hol);
    let e23 = chart.d_theta_tilde(&t_w1, &t_w2);
    let e13 = chart.d_theta_tilde(&t_v, &t_w2);
    let e12 = chart.d_theta_tilde(&t_v, &t_w1);
    let theta_tilde_val = chart.wedge3(&b1, &b2, &b3, &e23, &e13, &e12);

    Ok(LeviBracket {
        theta: theta_val,
        theta_tilde: theta_tilde_val,
    })
}

// ---------------------------------------------------------------------------
// tangent space bases
// ---------------------------------------------------------------------------

fn coord_count(chart: &SgrChart) -> usize {
    let k = chart.n - chart.r;
    2 * chart.r * k + k * k
}

fn tangent_from_vec(chart: &SgrChart, v: &linalg::CVec) -> ChartTangent {
    let k = chart.n - chart.r;
    let rx = chart.r * k;
    let ry = k * k;
    ChartTangent {
        x: linalg::unvectorize(&v.rows(0, rx).into_owned(), chart.r, k),
        y: linalg::unvectorize(&v.rows(rx, ry).into_owned(), k, k),
        z: linalg::unvectorize(&v.rows(rx + ry, rx).into_owned(), chart.r, k),
    }
}

fn vec_from_tangent(chart: &SgrChart, t: &ChartTangent) -> linalg::CVec {
    let k = chart.n - chart.r;
    let mut out = linalg::CVec::zeros(coord_count(chart));
    let rx = chart.r * k;
    out.rows_mut(0, rx).copy_from(&linalg::vectorize(&t.x));
    out.rows_mut(rx, k * k).copy_from(&linalg::vectorize(&t.y));
    out
        .rows_mut(rx + k * k, rx)
        .copy_from(&linalg::vectorize(&t.z));
    out
}

/// Basis of the `(1,0)` tangent space of `SGr(n-r, C^{2n})` at `p` (chart
/// coordinates).
pub fn holomorphic_tangent_basis(chart: &SgrChart, p: &ChartPoint) -> Vec<ChartTangent> {
    let m = coord_count(chart);
    let k = chart.n - chart.r;
    // constraint matrix: strict upper triangle of the antisymmetric
    // linearized SGr equation
    let n_cons = k * (k - 1) / 2;
    let mut a = linalg::zeros(n_cons, m);
    for j in 0..m {
        let mut e = linalg::CVec::zeros(m);
        e[j] = Complex64::new(1.0, 0.0);
        let t = tangent_from_vec(chart, &e);
        let l = chart.sgr_linearized(p, &t);
        let mut row = 0;
        for c in 0..k {
            for cc in (c + 1)..k {
                a[(row, j)] = l[(c, cc)];
                row += 1;
            }
        }
    }
    let ns = linalg::null_space(&a);
    (0..ns.ncols())
        .map(|j| tangent_from_vec(chart, &ns.column(j).into_owned()))
        .collect()
}

/// Basis of the CR distribution at `p`: holomorphic tangents with
/// `theta = 0`.
pub fn cr_tangent_basis(chart: &SgrChart, p: &ChartPoint) -> Vec<ChartTangent> {
    let m = coord_count(chart);
    let k = chart.n - chart.r;
    let n_cons = k * (k - 1) / 2 + k * k;
    let mut a = linalg::zeros(n_cons, m);
    for j in 0..m {
        let mut e = linalg::CVec::zeros(m);
        e[j] = Complex64::new(1.0, 0.0);
        let t = tangent_from_vec(chart, &e);
        let l = chart.sgr_linearized(p, &t);
        let th = chart.theta(p, &t);
        let mut row = 0;
        for c in 0..k {
            for cc in (c + 1)..k {
                a[(row, j)] = l[(c, cc)];
                row += 1;
            }
        }
        for c in 0..k {
            for cc in 0..k {
                a[(row, j)] = th[(c, cc)];
                row += 1;
            }
        }
    }
    let ns = linalg::null_space(&a);
    (0..ns.ncols())
        .map(|j| tangent_from_vec(chart, &ns.column(j).into_owned()))
        .collect()
}

/// Real basis of the tangent space of `Sigma_r` at `p`, as holomorphic
/// parts.  The conditions mix complex-linear and conjugate-linear pieces, so
/// the null space is computed over the reals.
pub fn real_tangent_basis(chart: &SgrChart, p: &ChartPoint) -> Vec<ChartTangent> {
    let m = coord_count(chart);
    let k = chart.n - chart.r;
    let n_cons = k * (k - 1) + k * k; // complex SGr rows (re+im) + Hermitian-part rows
    let mut a = DMatrix::<f64>::zeros(n_cons, 2 * m);
    for j in 0..2 * m {
        let mut e = linalg::CVec::zeros(m);
        if j < m {
            e[j] = Complex64::new(1.0, 0.0);
        } else {
            e[j - m] = Complex64::new(0.0, 1.0);
        }
        let t = tangent_from_vec(chart, &e);
        let l = chart.sgr_linearized(p, &t);
        let th = chart.theta(p, &t);
        let herm = &th + th.adjoint();
        let mut row = 0;
        for c in 0..k {
            for cc in (c + 1)..k {
                a[(row, j)] = l[(c, cc)].re;
                a[(row + 1, j)] = l[(c, cc)].im;
                row += 2;
            }
        }
        // herm is Hermitian: upper triangle with real diagonal carries all
        // the information
        for c in 0..k {
            a[(row, j)] = herm[(c, c)].re;
            row += 1;
        }
        for c in 0..k {
            for cc in (c + 1)..k {
                a[(row, j)] = herm[(c, cc)].re;
                a[(row + 1, j)] = herm[(c, cc)].im;
                row += 2;
            }
        }
        debug_assert!(row <= n_cons + k * (k - 1) / 2 + k);
    }
    let ns = linalg::real_null_space(&a, 1e-9);
    let mut out = Vec::new();
    for i in 0..ns.ncols() {
        let mut v = linalg::CVec::zeros(m);
        for j in 0..m {
            v[j] = Complex64::new(ns[(j, i)], ns[(j + m, i)]);
        }
        out.push(tangent_from_vec(chart, &v));
    }
    out
}

/// Random real combination of a tangent basis.
pub fn random_combination<R: rand::Rng + ?Sized>(
    rng: &mut R,
    chart: &SgrChart,
    basis: &[ChartTangent],
) -> ChartTangent {
    let mut acc = linalg::CVec::zeros(coord_count(chart));
    for t in basis {
        let c: f64 = rng.gen_range(-1.0..1.0);
        acc += vec_from_tangent(chart, t) * Complex64::new(c, 0.0);
    }
    tangent_from_vec(chart, &acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_tangent(chart: &SgrChart, which: char, i: usize, j: usize) -> ChartTangent {
        let k = chart.n - chart.r;
        let mut t = ChartTangent {
            x: linalg::zeros(chart.r, k),
            y: linalg::zeros(k, k),
            z: linalg::zeros(chart.r, k),
        };
        match which {
            'x' => t.x[(i, j)] = Complex64::new(1.0, 0.0),
            'y' => t.y[(i, j)] = Complex64::new(1.0, 0.0),
            'z' => t.z[(i, j)] = Complex64::new(1.0, 0.0),
            _ => unreachable!(),
        }
        t
    }

    #[test]
    fn origin_satisfies_both_equations() {
        let chart = SgrChart::new(3, 1);
        let p = chart.origin();
        assert!(chart.sgr_residual(&p) < 1e-15);
        assert!(chart.sigma_residual(&p) < 1e-15);
    }

    #[test]
    fn reference_bracket_is_nonzero() {
        // P = (0; I; 0), v a y-direction, w1 = dx, w2 = dz unit coordinates:
        // the symmetric form gives dy ∧ (dx^t ∧ dz - dz^t ∧ dx) which is
        // nonzero on this triple.
        let chart = SgrChart::new(3, 1);
        let p = chart.origin();
        // real y-direction at the origin: y symmetric and anti-Hermitian
        let k = 2;
        let mut v = unit_tangent(&chart, 'y', 0, 0);
        v.y[(0, 0)] = Complex64::new(0.0, 1.0);
        let w1 = unit_tangent(&chart, 'x', 0, 0);
        let w2 = unit_tangent(&chart, 'z', 0, 0);
        let b = levi_bracket_check(&chart, &p, &v, &w1, &w2).unwrap();
        assert!(linalg::max_abs(&b.theta_tilde) > 0.5, "{:?}", b.theta_tilde);
        let _ = k;
    }

    #[test]
    fn cr_isotropic_pair_gives_zero() {
        let chart = SgrChart::new(3, 1);
        let p = chart.origin();
        // v in the CR distribution (x-direction, real), w1, w2 CR with
        // vanishing Levi pairing against it
        let v = unit_tangent(&chart, 'x', 0, 0);
        let w1 = unit_tangent(&chart, 'x', 0, 1);
        let w2 = unit_tangent(&chart, 'x', 0, 1);
        let b = levi_bracket_check(&chart, &p, &v, &w1, &w2).unwrap();
        // theta legs vanish on CR vectors, and theta~ needs a z-leg to pair
        // an x-leg
        assert!(linalg::max_abs(&b.theta) < 1e-12);
        assert!(linalg::max_abs(&b.theta_tilde) < 1e-12);
    }

    #[test]
    fn validations_fire() {
        let chart = SgrChart::new(3, 1);
        let mut p = chart.origin();
        p.y[(0, 0)] += Complex64::new(0.3, 0.0);
        let v = unit_tangent(&chart, 'x', 0, 0);
        assert!(matches!(
            levi_bracket_check(&chart, &p, &v, &v, &v),
            Err(Error::PointNotOnSigma(_))
        ));
        let p = chart.origin();
        // real-tangent validation: a plain y-direction with nonzero
        // Hermitian part is not tangent to Sigma
        let bad = unit_tangent(&chart, 'y', 0, 0);
        assert!(matches!(
            levi_bracket_check(&chart, &p, &bad, &v, &v),
            Err(Error::TangentNotTangent(_))
        ));
    }

    #[test]
    fn tangent_bases_have_expected_dimensions() {
        let chart = SgrChart::new(3, 1);
        let p = chart.origin();
        // dim SGr(2, C^6) = 2*2 + 3 = 7 complex
        let hol = holomorphic_tangent_basis(&chart, &p);
        assert_eq!(hol.len(), 7);
        // CR distribution: x and z blocks only -> 4 complex
        let cr = cr_tangent_basis(&chart, &p);
        assert_eq!(cr.len(), 4);
        // real tangents of Sigma: 2 * 4 (CR part) + dim_R of the y-part
        // {y symmetric & anti-Hermitian} = k(k+1)/2 = 3  -> 11
        let real = real_tangent_basis(&chart, &p);
        assert_eq!(real.len(), 11);
        for t in &real {
            chart.validate_real(&p, t).unwrap();
        }
    }

    #[test]
    fn generic_cr_condition_holds_at_samples() {
        // T_P D_r = T_P Sigma + J(T_P Sigma): the real tangents plus their
        // multiples by i span the holomorphic tangent space.
        let chart = SgrChart::new(3, 1);
        let p = chart.origin();
        let real = real_tangent_basis(&chart, &p);
        let m = coord_count(&chart);
        let mut all = linalg::zeros(m, 2 * real.len());
        for (j, t) in real.iter().enumerate() {
            all.set_column(j, &vec_from_tangent(&chart, t));
            all.set_column(
                real.len() + j,
                &(vec_from_tangent(&chart, t) * Complex64::new(0.0, 1.0)),
            );
        }
        // span must contain every holomorphic SGr tangent: compare ranks
        let hol = holomorphic_tangent_basis(&chart, &p);
        let mut hb = linalg::zeros(m, hol.len());
        for (j, t) in hol.iter().enumerate() {
            hb.set_column(j, &vec_from_tangent(&chart, t));
        }
        let combined = linalg::hcat(&[&all, &hb]);
        assert_eq!(linalg::rank(&combined), linalg::rank(&all));
    }

    #[test]
    fn bracket_generating_search_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let chart = SgrChart::new(3, 1);
        let dual = crate::moduli::Dual::LGr { n: 3 };
        for _ in 0..3 {
            // random Sigma point expressed in the chart
            let p = loop {
                let s = crate::moduli::random_sigma_point(
                    &mut rng,
                    dual,
                    crate::moduli::Level::Int(1),
                );
                if let Ok(p) = chart.from_subspace(s.flag().v1()) {
                    break p;
                }
            };
            chart.validate_point(&p).unwrap();
            let real = real_tangent_basis(&chart, &p);
            let hol = holomorphic_tangent_basis(&chart, &p);
            for _ in 0..20 {
                let v = loop {
                    let v = random_combination(&mut rng, &chart, &real);
                    if linalg::max_abs(&v.x).max(linalg::max_abs(&v.y)).max(linalg::max_abs(&v.z))
                        > 0.1
                    {
                        break v;
                    }
                };
                let mut best = 0.0f64;
                for w1 in &hol {
                    for w2 in &hol {
                        let b = levi_bracket_check(&chart, &p, &v, w1, w2).unwrap();
                        best = best.max(b.magnitude());
                    }
                }
                assert!(best > 1e-6, "bracket search failed, best={best:.3e}");
            }
        }
    }
}
