//! Varieties of minimal rational tangents on the classical Grassmannians
//! and on the symplectic Grassmannian `SGr(q, C^{2n})`: rank-one tests, the
//! special-locus/open-orbit classification, the projective second
//! fundamental form criterion, Condition (T), the linear-section witness,
//! the `C*`-dilation family on the big cell, and minimal curves from seeds
//! `A ⊂ V ⊂ B`.
//!
//! At the reference point `V0 = span{e_1..e_q}` of `SGr(q, C^{2n})` the
//! tangent space splits as `Hom(V0, Q0) ⊕ S^2 V0^*` where `Q0 = V0^perp/V0`
//! (coordinates `e_{q+1}..e_n, e_{n+q+1}..e_{2n}`) and the second summand
//! is identified with symmetric `q x q` matrices via `J`.  The VMRT is
//! `{[lambda ⊗ mu + lambda ⊙ lambda]}`, with the special locus at
//! vanishing `S^2`-part.

use num_complex::Complex64;
use rand::Rng;

use crate::config::PLUECKER_CAP;
use crate::error::{Error, Result};
use crate::forms::{BilinearForm, Form};
use crate::linalg::{self, CMat, CVec};
use crate::moduli::Dual;
use crate::subspace::Subspace;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Tangent vector at the reference point of `SGr(q, C^{2n})` in the graded
/// split: `g1` maps `V0` to `Q0` (a `2(n-q) x q` matrix), `g2` is the
/// symmetric `q x q` part.
#[derive(Debug, Clone)]
pub struct SgrTangent {
    pub n: usize,
    pub q: usize,
    pub g1: CMat,
    pub g2: CMat,
}

impl SgrTangent {
    pub fn new(n: usize, q: usize, g1: CMat, g2: CMat) -> Result<SgrTangent> {
        if g1.nrows() != 2 * (n - q) || g1.ncols() != q || g2.nrows() != q || g2.ncols() != q {
            return Err(Error::ShapeMismatch("graded tangent blocks".into()));
        }
        let sym = linalg::max_abs(&(&g2 - g2.transpose()));
        if sym > 1e-8 * (1.0 + linalg::max_abs(&g2)) {
            return Err(Error::ShapeMismatch(format!(
                "S^2 part not symmetric, residual {sym:.3e}"
            )));
        }
        Ok(SgrTangent { n, q, g1, g2 })
    }

    pub fn scale(&self) -> f64 {
        linalg::max_abs(&self.g1).max(linalg::max_abs(&self.g2))
    }

    /// Normalize the largest-magnitude entry to 1 (projective
    /// representative).
    pub fn normalized(&self) -> SgrTangent {
        let s = self.scale();
        if s == 0.0 {
            return self.clone();
        }
        SgrTangent {
            n: self.n,
            q: self.q,
            g1: &self.g1 * c(1.0 / s),
            g2: &self.g2 * c(1.0 / s),
        }
    }

    /// Flatten into the ambient tangent vector of
    /// `Hom(V0, C^{2n}/V0) = C^{(2n-q) q}` (rows: Q0 part then S^2 part).
    pub fn ambient_vec(&self) -> CVec {
        let stacked = linalg::vcat(&[&self.g1, &self.g2]);
        linalg::vectorize(&stacked)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VmrtClass {
    SpecialLocus,
    OpenOrbit,
    NotInVMRT,
}

/// Rank-one test per dual: `Gr` rank 1, `LGr` symmetric rank 1, `OGr`
/// decomposable two-form (matrix rank 2).
pub fn is_rank_one_tangent(dual: Dual, hom: &CMat) -> Result<bool> {
    let scale = linalg::max_abs(hom);
    if scale == 0.0 {
        return Ok(false);
    }
    match dual {
        Dual::Gr { q, p } => {
            if hom.ncols() != q || hom.nrows() != p {
                return Err(Error::ShapeMismatch("Gr tangent must be p x q".into()));
            }
            Ok(effective_rank(hom) == 1)
        }
        Dual::LGr { n } => {
            if hom.nrows() != n || hom.ncols() != n {
                return Err(Error::ShapeMismatch("LGr tangent must be n x n".into()));
            }
            if linalg::max_abs(&(hom - hom.transpose())) > 1e-8 * scale {
                return Err(Error::ShapeMismatch("LGr tangent must be symmetric".into()));
            }
            Ok(effective_rank(hom) == 1)
        }
        Dual::OGr { n } => {
            if hom.nrows() != n || hom.ncols() != n {
                return Err(Error::ShapeMismatch("OGr tangent must be n x n".into()));
            }
            if linalg::max_abs(&(hom + hom.transpose())) > 1e-8 * scale {
                return Err(Error::ShapeMismatch(
                    "OGr tangent must be antisymmetric".into(),
                ));
            }
            Ok(effective_rank(hom) == 2)
        }
    }
}

fn effective_rank(m: &CMat) -> usize {
    let sv = linalg::singular_values(m);
    let scale = sv.first().copied().unwrap_or(0.0);
    if scale == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-7 * scale).count()
}

/// Classify a graded tangent against the VMRT of `SGr(q, C^{2n})`:
/// `[lambda ⊗ mu + lambda ⊙ lambda]` with `lambda ≠ 0` is the open orbit,
/// the closure at `g2 = 0` with decomposable nonzero `g1` is the special
/// locus, everything else is off the variety.
pub fn sgr_vmrt_member(t: &SgrTangent) -> VmrtClass {
    let t = t.normalized();
    let tol = 1e-7;
    let g2_scale = linalg::max_abs(&t.g2);
    if g2_scale <= tol {
        // special locus: g1 = lambda ⊗ mu, both nonzero
        if linalg::max_abs(&t.g1) <= tol {
            return VmrtClass::NotInVMRT;
        }
        if effective_rank(&t.g1) == 1 {
            return VmrtClass::SpecialLocus;
        }
        return VmrtClass::NotInVMRT;
    }
    // need g2 = c lambda lambda^t of symmetric rank one
    if effective_rank(&t.g2) != 1 {
        return VmrtClass::NotInVMRT;
    }
    // lambda spans the column space of g2
    let lambda = principal_column(&t.g2);
    // g1 must be mu lambda^t for the same lambda (mu may vanish)
    let lam_norm = lambda.norm_squared();
    let mu = &t.g1 * lambda.map(|e| e.conj()) / c(lam_norm);
    let residual = &t.g1 - &mu * lambda.transpose();
    if linalg::max_abs(&residual) <= tol {
        VmrtClass::OpenOrbit
    } else {
        VmrtClass::NotInVMRT
    }
}

/// Extract `(lambda, mu, eps)` with `t ~ lambda ⊗ mu + eps lambda ⊙ lambda`
/// for a VMRT member (`eps = 0` on the special locus).
pub fn sgr_vmrt_parameters(t: &SgrTangent) -> Result<(CVec, CVec, Complex64)> {
    let tn = t.normalized();
    match sgr_vmrt_member(&tn) {
        VmrtClass::NotInVMRT => Err(Error::NotOnVMRT),
        VmrtClass::SpecialLocus => {
            // g1 = mu lambda^t: lambda from the row space, mu from columns
            let lambda = principal_column(&tn.g1.transpose());
            let mu = &tn.g1 * lambda.map(|e| e.conj()) / c(lambda.norm_squared());
            Ok((lambda, mu, Complex64::new(0.0, 0.0)))
        }
        VmrtClass::OpenOrbit => {
            // g2 = a^2 u1 u1^t for the unit principal direction u1;
            // a^2 = u1^H g2 conj(u1) avoids the symmetric dot product,
            // which can vanish for complex vectors
            let u1 = principal_column(&tn.g2);
            let a2 = (u1.adjoint() * &tn.g2 * u1.map(|e| e.conj()))[(0, 0)];
            let lambda = &u1 * a2.sqrt();
            let mu = &tn.g1 * lambda.map(|e| e.conj()) / c(lambda.norm_squared());
            Ok((lambda, mu, Complex64::new(1.0, 0.0)))
        }
    }
}

fn principal_column(m: &CMat) -> CVec {
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("u");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
    });
    u.column(order[0]).into_owned()
}

/// Affine parametrization of the VMRT cone near a point with parameters
/// `(lambda0, mu0, eps)`: `Phi(a, b, e) = (lam+a) ⊗ (mu+b) + e (lam+a) ⊙
/// (lam+a)`.
fn vmrt_chart(
    n: usize,
    q: usize,
    lambda: &CVec,
    mu: &CVec,
    eps: Complex64,
) -> impl Fn(&CVec) -> CVec {
    let qq = q;
    let m2 = 2 * (n - q);
    let lambda = lambda.clone();
    let mu = mu.clone();
    move |params: &CVec| {
        let a = params.rows(0, qq).into_owned();
        let b = params.rows(qq, m2).into_owned();
        let e = eps + params[qq + m2];
        let lam = &lambda + a;
        let muv = &mu + b;
        let g1 = &muv * lam.transpose();
        let g2 = &lam * lam.transpose() * e;
        let t = SgrTangent {
            n,
            q,
            g1,
            g2,
        };
        t.ambient_vec()
    }
}

/// Surjectivity of the projective second fundamental form of the VMRT at
/// `[t]`, computed from the first and second derivatives of the orbit
/// chart by central differences.  True exactly on the open orbit.
pub fn second_fundamental_surjective(t: &SgrTangent) -> Result<bool> {
    let class = sgr_vmrt_member(t);
    if class == VmrtClass::NotInVMRT {
        return Err(Error::NotOnVMRT);
    }
    let (lambda, mu, eps) = sgr_vmrt_parameters(t)?;
    let (n, q) = (t.n, t.q);
    let chart = vmrt_chart(n, q, &lambda, &mu, eps);
    let nparams = q + 2 * (n - q) + 1;
    // the chart lands inside T0(SGr): surjectivity of the second
    // fundamental form means the derivatives exhaust that subspace
    let target_dim = 2 * (n - q) * q + q * (q + 1) / 2;
    let ambient = (2 * (n - q)) * q + q * q;
    let h = 1e-3;
    // first derivatives
    let mut first = Vec::new();
    for i in 0..nparams {
        let mut up = CVec::zeros(nparams);
        up[i] = c(h);
        let mut dn = CVec::zeros(nparams);
        dn[i] = c(-h);
        first.push((chart(&up) - chart(&dn)) * c(0.5 / h));
        // imaginary direction as well: the chart is holomorphic, so the
        // i-direction derivative is i times the real one; skip it.
    }
    // second derivatives (including mixed)
    let mut second = Vec::new();
    let zero = CVec::zeros(nparams);
    let base = chart(&zero);
    for i in 0..nparams {
        for j in i..nparams {
            let mut pp = CVec::zeros(nparams);
            pp[i] += c(h);
            pp[j] += c(h);
            let mut pm = CVec::zeros(nparams);
            pm[i] += c(h);
            pm[j] -= c(h);
            let mut mp = CVec::zeros(nparams);
            mp[i] -= c(h);
            mp[j] += c(h);
            let mut mm = CVec::zeros(nparams);
            mm[i] -= c(h);
            mm[j] -= c(h);
            let d = (chart(&pp) - chart(&pm) - chart(&mp) + chart(&mm)) * c(0.25 / (h * h));
            second.push(d);
        }
    }
    let _ = base;
    let mut tangent_mat = linalg::zeros(ambient, first.len());
    for (k, v) in first.iter().enumerate() {
        tangent_mat.set_column(k, v);
    }
    let mut full_mat = linalg::zeros(ambient, first.len() + second.len());
    for (k, v) in first.iter().enumerate() {
        full_mat.set_column(k, v);
    }
    for (k, v) in second.iter().enumerate() {
        full_mat.set_column(first.len() + k, v);
    }
    let _ = ambient;
    let rank_full = rank_with_tol(&full_mat, 1e-5);
    Ok(rank_full == target_dim)
}

fn rank_with_tol(m: &CMat, tol: f64) -> usize {
    let sv = linalg::singular_values(m);
    let scale = sv.first().copied().unwrap_or(0.0);
    if scale == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * scale).count()
}

/// Condition (T) for the pair `SGr(q, C^{2n}) ⊂ Gr(q, C^{2n})` at the
/// reference point: equality of the affine tangent of the sub-VMRT cone
/// with the intersection of the ambient rank-one cone tangent and the
/// subspace tangent.  Returns the verdict and the two dimensions.
pub fn condition_t(t: &SgrTangent) -> Result<(bool, usize, usize)> {
    let class = sgr_vmrt_member(t);
    if class == VmrtClass::NotInVMRT {
        return Err(Error::NotOnVMRT);
    }
    let (lambda, mu, eps) = sgr_vmrt_parameters(t)?;
    let (n, q) = (t.n, t.q);
    let ambient = (2 * n - q) * q;
    // LHS: span of first derivatives of the sub-VMRT chart, as vectors in
    // Hom(V0, C^{2n}/V0) (stack Q0 rows then the V0^* rows).
    let chart = vmrt_chart(n, q, &lambda, &mu, eps);
    let nparams = q + 2 * (n - q) + 1;
    let h = 1e-3;
    let mut cols = Vec::new();
    for i in 0..nparams {
        let mut up = CVec::zeros(nparams);
        up[i] = c(h);
        let mut dn = CVec::zeros(nparams);
        dn[i] = c(-h);
        let d = (chart(&up) - chart(&dn)) * c(0.5 / h);
        cols.push(d);
    }
    let mut lhs_mat = linalg::zeros(ambient, cols.len());
    for (k, v) in cols.iter().enumerate() {
        lhs_mat.set_column(k, v);
    }
    let lhs = Subspace::canonicalize(&lhs_mat)?;

    // ambient rank-one cone at alpha = a ⊗ b: tangent = {a ⊗ y + x ⊗ b}.
    // As a Gr-tangent the graded vector is the hom V0 -> C^{2n}/V0 with
    // matrix rows (Q0 part; dual part), alpha = (mu + lambda-dual) lambda^t.
    let m_rows = 2 * n - q;
    let mut bvec = CVec::zeros(m_rows);
    for i in 0..2 * (n - q) {
        bvec[i] = mu[i];
    }
    for i in 0..q {
        bvec[2 * (n - q) + i] = eps * lambda[i];
    }
    let avec = lambda.clone();
    let mut amb_cols = Vec::new();
    // a ⊗ y: vary y over C^{m_rows}
    for i in 0..m_rows {
        let mut y = CVec::zeros(m_rows);
        y[i] = c(1.0);
        amb_cols.push(linalg::vectorize(&(&y * avec.transpose())));
    }
    // x ⊗ b: vary x over V0^*
    for i in 0..q {
        let mut x = CVec::zeros(q);
        x[i] = c(1.0);
        amb_cols.push(linalg::vectorize(&(&bvec * x.transpose())));
    }
    let mut amb_mat = linalg::zeros(ambient, amb_cols.len());
    for (k, v) in amb_cols.iter().enumerate() {
        amb_mat.set_column(k, v);
    }
    let amb_tangent = Subspace::canonicalize(&amb_mat)?;

    // T_x(S): tangents whose V0^* part is symmetric.
    let sgr_tangent = sgr_tangent_subspace(n, q)?;
    let rhs = amb_tangent.intersect(&sgr_tangent)?;
    let equal = lhs.dim() == rhs.dim()
        && lhs.is_contained_in(&rhs, 1e-5)
        && rhs.is_contained_in(&lhs, 1e-5);
    Ok((equal, lhs.dim(), rhs.dim()))
}

/// The subspace of `Hom(V0, C^{2n}/V0)` tangent to `SGr` at the reference:
/// arbitrary `Q0` block, symmetric dual block.
fn sgr_tangent_subspace(n: usize, q: usize) -> Result<Subspace> {
    let m_rows = 2 * n - q;
    let ambient = m_rows * q;
    let mut cols = Vec::new();
    for i in 0..2 * (n - q) {
        for j in 0..q {
            let mut m = linalg::zeros(m_rows, q);
            m[(i, j)] = c(1.0);
            cols.push(linalg::vectorize(&m));
        }
    }
    for i in 0..q {
        for j in i..q {
            let mut m = linalg::zeros(m_rows, q);
            m[(2 * (n - q) + i, j)] = c(1.0);
            m[(2 * (n - q) + j, i)] = c(1.0);
            cols.push(linalg::vectorize(&m));
        }
    }
    let mut mat = linalg::zeros(ambient, cols.len());
    for (k, v) in cols.iter().enumerate() {
        mat.set_column(k, v);
    }
    Subspace::canonicalize(&mat)
}

// ---------------------------------------------------------------------------
// linear-section witness
// ---------------------------------------------------------------------------

/// The skew-symmetrized contraction `Λ^q C^{2n} -> Λ^{q-2} C^{2n}` whose
/// kernel cuts out the Pluecker image of the isotropic planes.
pub struct LinearSectionWitness {
    n: usize,
    q: usize,
    /// index sets of size q (sorted), in lexicographic order
    src_sets: Vec<Vec<usize>>,
    dst_index: std::collections::HashMap<Vec<usize>, usize>,
    dst_len: usize,
}

impl LinearSectionWitness {
    pub fn new(n: usize, q: usize) -> Result<LinearSectionWitness> {
        if q < 2 || q > n {
            return Err(Error::BadDimension("need 2 <= q <= n".into()));
        }
        let src_sets = combinations(2 * n, q);
        if src_sets.len() > PLUECKER_CAP {
            return Err(Error::DimensionTooLarge(src_sets.len()));
        }
        let dst_sets = combinations(2 * n, q - 2);
        let dst_index = dst_sets
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        Ok(LinearSectionWitness {
            n,
            q,
            src_sets,
            dst_index,
            dst_len: dst_sets.len(),
        })
    }

    /// Pluecker coordinates of a `q`-plane (minors of the basis matrix).
    pub fn pluecker(&self, v: &Subspace) -> Result<CVec> {
        if v.ambient_dim() != 2 * self.n || v.dim() != self.q {
            return Err(Error::ShapeMismatch("plane shape for Pluecker".into()));
        }
        let b = v.onb();
        let mut out = CVec::zeros(self.src_sets.len());
        for (k, rows) in self.src_sets.iter().enumerate() {
            let mut minor = linalg::zeros(self.q, self.q);
            for (i, &r) in rows.iter().enumerate() {
                for j in 0..self.q {
                    minor[(i, j)] = b[(r, j)];
                }
            }
            out[k] = minor.determinant();
        }
        Ok(out)
    }

    /// Apply the contraction to a Pluecker vector.
    pub fn apply(&self, w: &CVec) -> Result<CVec> {
        if w.len() != self.src_sets.len() {
            return Err(Error::ShapeMismatch("Pluecker vector length".into()));
        }
        let jmat = BilinearForm::antisymmetric(self.n).matrix();
        let mut out = CVec::zeros(self.dst_len);
        for (k, set) in self.src_sets.iter().enumerate() {
            if w[k].norm() == 0.0 {
                continue;
            }
            for a in 0..self.q {
                for b in (a + 1)..self.q {
                    let jv = jmat[(set[a], set[b])];
                    if jv.norm() == 0.0 {
                        continue;
                    }
                    let mut rest: Vec<usize> = Vec::with_capacity(self.q - 2);
                    for (i, &s) in set.iter().enumerate() {
                        if i != a && i != b {
                            rest.push(s);
                        }
                    }
                    // sign of moving e_{s_a} ∧ e_{s_b} to the front
                    let sign = if (a + b) % 2 == 1 { 1.0 } else { -1.0 };
                    let idx = self.dst_index[&rest];
                    out[idx] += w[k] * jv * c(sign);
                }
            }
        }
        Ok(out)
    }

    /// Contraction of the Pluecker image of a plane; zero iff isotropic.
    pub fn contract_plane(&self, v: &Subspace) -> Result<f64> {
        let w = self.pluecker(v)?;
        let scale = vec_max_abs(&w).max(1e-300);
        let out = self.apply(&w)?;
        Ok(vec_max_abs(&out) / scale)
    }
}

fn vec_max_abs(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k == 0 {
        return vec![Vec::new()];
    }
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in (i + 1)..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

// ---------------------------------------------------------------------------
// dilation family and minimal curves
// ---------------------------------------------------------------------------

/// The `C*`-action on the big cell: `Psi_s(x; y; z) = (sx; s^2(y - I) + I;
/// sz)`.  Fixes the reference point, preserves the SGr relation (the
/// residual scales by `|s^2|`), and satisfies `Psi_s ∘ Psi_t = Psi_{st}`.
pub fn dilation_psi(
    chart: &crate::sigma_chart::SgrChart,
    s: Complex64,
    p: &crate::sigma_chart::ChartPoint,
) -> Result<crate::sigma_chart::ChartPoint> {
    if s.norm() == 0.0 {
        return Err(Error::ZeroParameter);
    }
    let k = chart.n - chart.r;
    let id = linalg::eye(k);
    Ok(crate::sigma_chart::ChartPoint {
        x: &p.x * s,
        y: (&p.y - &id) * (s * s) + id,
        z: &p.z * s,
    })
}

/// Seed of a minimal rational curve: `A ⊂ V ⊂ B` with `dim A = q - 1`,
/// `dim B = q + 1`.
#[derive(Debug, Clone)]
pub struct MinimalCurveSeed {
    pub a: Subspace,
    pub v: Subspace,
    pub b: Subspace,
}

impl MinimalCurveSeed {
    pub fn new(a: Subspace, v: Subspace, b: Subspace) -> Result<MinimalCurveSeed> {
        let q = v.dim();
        if a.dim() + 1 != q || b.dim() != q + 1 {
            return Err(Error::BadSeed("seed dimensions".into()));
        }
        if !a.is_contained_in(&v, 1e-8) || !v.is_contained_in(&b, 1e-8) {
            return Err(Error::BadSeed("containments A ⊂ V ⊂ B".into()));
        }
        Ok(MinimalCurveSeed { a, v, b })
    }
}

/// The pencil of `q`-planes through a seed, plus the special flag.
pub struct MinimalCurve {
    seed: MinimalCurveSeed,
    /// direction with `V = A ⊕ <u>`
    u: CVec,
    /// complementary direction in `B`
    w: CVec,
    pub special: bool,
}

impl MinimalCurve {
    /// Build the evaluator; `special` iff `B` is isotropic for `J_n`.
    pub fn new(seed: MinimalCurveSeed, n: usize) -> Result<MinimalCurve> {
        if seed.v.ambient_dim() != 2 * n {
            return Err(Error::BadSeed("ambient".into()));
        }
        let j = Form::Bilinear(BilinearForm::antisymmetric(n));
        let special = seed.b.is_isotropic(&j);
        // u in V outside A
        let u = orth_complement_vector(&seed.v, &seed.a)?;
        // w in B outside V
        let w = orth_complement_vector(&seed.b, &seed.v)?;
        Ok(MinimalCurve { seed, u, w, special })
    }

    /// Point of the pencil at parameter `t` (`t = None` gives the point at
    /// infinity `A ⊕ <w>`).
    pub fn at(&self, t: Option<Complex64>) -> Result<Subspace> {
        let dir = match t {
            Some(t) => &self.u + &self.w * t,
            None => self.w.clone(),
        };
        let line = Subspace::from_cols(self.seed.v.ambient_dim(), &[dir])?;
        self.seed.a.sum(&line)
    }

    /// Tangent at `V` (t = 0) as a hom `V -> C^{2n}/V`: kernel `A`, `u ->
    /// w mod V`; returned in the graded split at the reference point.
    /// Only valid when `V` is the reference plane `span{e_1..e_q}`.
    pub fn tangent_at_reference(&self, n: usize) -> Result<SgrTangent> {
        let q = self.seed.v.dim();
        let reference = Subspace::coordinate(2 * n, &(0..q).collect::<Vec<_>>());
        if self.seed.v.projector_distance(&reference) > 1e-8 {
            return Err(Error::BadSeed("tangent extraction needs the reference V".into()));
        }
        // hom matrix: e_j maps to lambda(e_j) * [w] where lambda is the
        // covector on V0 with lambda(A) = 0, lambda(u) = 1
        let mut hom = linalg::zeros(2 * n - q, q);
        // solve for lambda: rows of A-coords annihilated, u-coords -> 1
        let a_dim = self.seed.a.dim();
        let mut sys = linalg::zeros(a_dim + 1, q);
        let mut rhs = linalg::zeros(a_dim + 1, 1);
        for (r, _) in (0..a_dim).enumerate() {
            for col in 0..q {
                sys[(r, col)] = self.seed.a.onb()[(col, r)];
            }
        }
        for col in 0..q {
            sys[(a_dim, col)] = self.u[col];
        }
        rhs[(a_dim, 0)] = c(1.0);
        let lambda_t = linalg::lstsq(&sys, &rhs, 1e-10);
        for col in 0..q {
            let coeff = lambda_t[(col, 0)];
            if coeff.norm() == 0.0 {
                continue;
            }
            // w mod V0: Q0 coordinates e_{q+1}..e_n, e_{n+q+1}..e_{2n};
            // dual part from e_{n+1}..e_{n+q} via J: J(e_i, e_{n+j}) = d_ij
            for i in q..n {
                hom[(i - q, col)] += coeff * self.w[i];
            }
            for i in (n + q)..(2 * n) {
                hom[(n - q + (i - n - q), col)] += coeff * self.w[i];
            }
            for i in n..(n + q) {
                hom[(2 * (n - q) + (i - n), col)] += coeff * self.w[i];
            }
        }
        let g1 = hom.rows(0, 2 * (n - q)).into_owned();
        let g2raw = hom.rows(2 * (n - q), q).into_owned();
        // symmetrize tiny asymmetry away (exact for curves in SGr)
        let g2 = (&g2raw + g2raw.transpose()) * c(0.5);
        let asym = linalg::max_abs(&(&g2raw - g2raw.transpose()));
        if asym > 1e-7 * (1.0 + linalg::max_abs(&g2raw)) {
            return Err(Error::BadSeed(format!(
                "curve tangent leaves SGr, asymmetry {asym:.3e}"
            )));
        }
        SgrTangent::new(n, q, g1, g2)
    }
}

fn orth_complement_vector(big: &Subspace, small: &Subspace) -> Result<CVec> {
    for j in 0..big.dim() {
        let v: CVec = big.onb().column(j).into_owned();
        let proj = small.onb() * (small.onb().adjoint() * &v);
        let res = &v - proj;
        if res.norm() > 1e-6 {
            return Ok(res.normalize());
        }
    }
    Err(Error::BadSeed("no complement direction".into()))
}

/// Random curve seed through the reference point of `SGr(q, C^{2n})`;
/// `special` selects whether `B` is isotropic.
pub fn random_seed_at_reference<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    q: usize,
    special: bool,
) -> MinimalCurveSeed {
    let v0 = Subspace::coordinate(2 * n, &(0..q).collect::<Vec<_>>());
    let j = Form::Bilinear(BilinearForm::antisymmetric(n));
    loop {
        // A ⊂ V0 random hyperplane
        let coeff = linalg::random_cmat(rng, q, q - 1);
        let Ok(a) = Subspace::canonicalize(&(v0.onb() * coeff)) else {
            continue;
        };
        if a.dim() != q - 1 {
            continue;
        }
        // extra direction: inside A^perp (general) or V0^perp (special)
        let perp = if special {
            v0.perp(&j).unwrap()
        } else {
            a.perp(&j).unwrap()
        };
        let coeff = linalg::random_cmat(rng, perp.dim(), 1);
        let Ok(extra) = Subspace::canonicalize(&(perp.onb() * coeff)) else {
            continue;
        };
        if extra.dim() != 1 || extra.is_contained_in(&v0, 1e-6) {
            continue;
        }
        let b = v0.sum(&extra).unwrap();
        if b.dim() != q + 1 {
            continue;
        }
        if special != b.is_isotropic(&j) {
            continue;
        }
        if let Ok(seed) = MinimalCurveSeed::new(a, v0.clone(), b) {
            return seed;
        }
    }
}
