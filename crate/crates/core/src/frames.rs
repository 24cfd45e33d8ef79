//! Adapted Grassmannian frames over the isotropic loci, their
//! Maurer-Cartan data, and the frame-change families.
//!
//! A frame is a basis `(Z_1..Z_l, X_1..X_{p+q-2l}, Y_1..Y_l)` of `C^{p+q}`
//! with `det = 1` whose Gram matrix under `<.,.>_{p,q}` is
//!
//! ```text
//!     [ 0        0          0         I_l ]
//!     [ 0        I_{q-l}    0         0   ]
//!     [ 0        0         -I_{p-l}   0   ]
//!     [ I_l      0          0         0   ]
//! ```
//!
//! For the `sp` / `so` tags the `Z`-block additionally spans a subspace
//! isotropic for `J_n` / `S_n`.  Along a frame curve `dZ_L = pi_L^G Z_G`
//! the slice `pi` satisfies `pi G + G pi^* = 0` (the blockwise symmetry
//! pattern), and for curves inside the `sp` / `so` orbit of the reference
//! frame additionally the `phi`-block reduction: `phi` symmetric for `sp`;
//! for `so` the reduction reads through the pairing `K = S(Z, Y)` as
//! `phi K^t + K phi^t = 0` (an entrywise `phi + phi^t = 0` is not
//! attainable in any adapted frame because the map `v -> S^{-1} I conj(v)`
//! squares to `-1`).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::config::{FRAME_DRIFT, FRAME_TOL};
use crate::error::{Error, Result};
use crate::forms::{BilinearForm, HermitianForm};
use crate::linalg::{self, CMat};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameGroup {
    /// `SU(p,q)`-frames over `Sigma_r(Gr(q,p))`, `l = q - r`.
    Su { p: usize, q: usize },
    /// `SO(n,n)`-frames over `Sigma_r(OGr_n)`.
    So { n: usize },
    /// `Sp(n)`-frames over `Sigma_r(LGr_n)`.
    Sp { n: usize },
}

impl FrameGroup {
    pub fn pq(&self) -> (usize, usize) {
        match *self {
            FrameGroup::Su { p, q } => (p, q),
            FrameGroup::So { n } | FrameGroup::Sp { n } => (n, n),
        }
    }

    fn bilinear(&self) -> Option<BilinearForm> {
        match *self {
            FrameGroup::Su { .. } => None,
            FrameGroup::So { n } => Some(BilinearForm::symmetric(n)),
            FrameGroup::Sp { n } => Some(BilinearForm::antisymmetric(n)),
        }
    }
}

/// Everything needed to build, validate and differentiate frames of one
/// `(group, l)` type.
pub struct FrameKit {
    pub group: FrameGroup,
    pub ell: usize,
    p: usize,
    q: usize,
    /// Target Hermitian Gram matrix.
    gram: CMat,
    /// Hermitian form matrix `I_{p,q}`.
    herm: CMat,
    /// Bilinear form matrix and the full bilinear Gram of the reference.
    bilinear: Option<(CMat, CMat)>,
    reference: CMat,
}

/// A validated frame: columns are the frame vectors in `(Z, X, Y)` order.
#[derive(Debug, Clone)]
pub struct SigmaFrame {
    pub matrix: CMat,
}

impl FrameKit {
    pub fn new(group: FrameGroup, ell: usize) -> Result<FrameKit> {
        let (p, q) = group.pq();
        if ell < 1 || ell >= q || p + q < 2 * ell + 1 {
            return Err(Error::BadDimension(format!(
                "ell = {ell} out of range for p = {p}, q = {q}"
            )));
        }
        let n = p + q;
        let mut gram = linalg::zeros(n, n);
        for a in 0..ell {
            gram[(a, n - ell + a)] = c(1.0);
            gram[(n - ell + a, a)] = c(1.0);
        }
        for j in 0..(p + q - 2 * ell) {
            let sign = if j < q - ell { 1.0 } else { -1.0 };
            gram[(ell + j, ell + j)] = c(sign);
        }
        let herm = HermitianForm::new(p, q).matrix();
        let reference = build_reference(group, ell)?;
        let bilinear = group.bilinear().map(|b| {
            let m = b.matrix();
            let target = reference.transpose() * &m * &reference;
            (m, target)
        });
        let kit = FrameKit {
            group,
            ell,
            p,
            q,
            gram,
            herm,
            bilinear,
            reference,
        };
        debug_assert!(kit.relations_residual(&kit.reference) < 1e-12);
        Ok(kit)
    }

    pub fn dim(&self) -> usize {
        self.p + self.q
    }

    pub fn x_len(&self) -> usize {
        self.p + self.q - 2 * self.ell
    }

    /// Sign pattern of the X-block pairing.
    pub fn x_sign(&self, j: usize) -> f64 {
        if j < self.q - self.ell {
            1.0
        } else {
            -1.0
        }
    }

    pub fn reference(&self) -> SigmaFrame {
        SigmaFrame {
            matrix: self.reference.clone(),
        }
    }

    pub fn gram_target(&self) -> &CMat {
        &self.gram
    }

    /// Bilinear Gram of the reference frame (`sp`/`so` only).
    pub fn bilinear_gram(&self) -> Option<&CMat> {
        self.bilinear.as_ref().map(|(_, g)| g)
    }

    /// Max residual of the defining relations: Hermitian Gram, `det = 1`,
    /// and the `Z`-block bilinear isotropy.
    pub fn relations_residual(&self, f: &CMat) -> f64 {
        let mut res = linalg::max_abs(&(f.adjoint() * &self.herm * f - &self.gram));
        res = res.max((f.determinant() - c(1.0)).norm());
        if let Some((m, _)) = &self.bilinear {
            let z = f.columns(0, self.ell).into_owned();
            res = res.max(linalg::max_abs(&(z.transpose() * m * z)));
        }
        res
    }

    /// Residual of the full orbit constraint `F^t M F = M_ref` (`sp`/`so`).
    pub fn orbit_residual(&self, f: &CMat) -> f64 {
        match &self.bilinear {
            Some((m, target)) => linalg::max_abs(&(f.transpose() * m * f - target)),
            None => 0.0,
        }
    }

    pub fn validate(&self, f: &CMat) -> Result<()> {
        let res = self.relations_residual(f);
        if res > 1e-8 {
            return Err(Error::Degenerate(format!(
                "frame relations residual {res:.3e}"
            )));
        }
        Ok(())
    }

    /// Correct a full-rank guess to a frame satisfying the pairing
    /// relations exactly (Gauss-Newton on the quadratic constraints,
    /// smallest-norm steps), then normalize the determinant.
    pub fn make_frame(&self, guess: &CMat) -> Result<SigmaFrame> {
        let n = self.dim();
        if guess.nrows() != n || guess.ncols() != n {
            return Err(Error::ShapeMismatch(format!("guess must be {n}x{n}")));
        }
        if linalg::rank(guess) < n {
            return Err(Error::Degenerate("guess is rank deficient".into()));
        }
        let mut f = guess.clone();
        let mut last = f64::INFINITY;
        for _ in 0..40 {
            let res = self.constraint_residual_vec(&f);
            let norm = res.amax();
            if norm < 1e-13 {
                break;
            }
            if norm > 1e3 || (norm > 0.99 * last && norm > 1e-11) {
                return Err(Error::Degenerate(format!(
                    "frame correction stalled at residual {norm:.3e}"
                )));
            }
            last = norm;
            let jac = self.constraint_jacobian(&f);
            let step = linalg::real_lstsq(&jac, &(-res), 1e-12);
            for j in 0..n {
                for i in 0..n {
                    let k = 2 * (j * n + i);
                    f[(i, j)] += Complex64::new(step[k], step[k + 1]);
                }
            }
        }
        let res = self.constraint_residual_vec(&f).amax();
        if res > FRAME_TOL {
            return Err(Error::Degenerate(format!(
                "frame correction residual {res:.3e}"
            )));
        }
        // determinant phase fix on the first X column
        let d = f.determinant();
        if (d - c(1.0)).norm() > 1e-14 {
            let col = self.ell; // first X column
            let fix = c(1.0) / d;
            for i in 0..n {
                f[(i, col)] *= fix;
            }
        }
        self.validate(&f)?;
        Ok(SigmaFrame { matrix: f })
    }

    /// Stacked real residual of the quadratic constraints (without det).
    fn constraint_residual_vec(&self, f: &CMat) -> DVector<f64> {
        let n = self.dim();
        let herm_res = f.adjoint() * &self.herm * f - &self.gram;
        let mut rows = Vec::new();
        for i in 0..n {
            rows.push(herm_res[(i, i)].re);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                rows.push(herm_res[(i, j)].re);
                rows.push(herm_res[(i, j)].im);
            }
        }
        if let Some((m, _)) = &self.bilinear {
            let z = f.columns(0, self.ell).into_owned();
            let bz = z.transpose() * m * z;
            for i in 0..self.ell {
                for j in 0..self.ell {
                    rows.push(bz[(i, j)].re);
                    rows.push(bz[(i, j)].im);
                }
            }
        }
        DVector::from_vec(rows)
    }

    fn constraint_jacobian(&self, f: &CMat) -> DMatrix<f64> {
        let n = self.dim();
        let n_res = self.constraint_residual_vec(f).len();
        let mut jac = DMatrix::zeros(n_res, 2 * n * n);
        for j in 0..n {
            for i in 0..n {
                for part in 0..2 {
                    let mut delta = linalg::zeros(n, n);
                    delta[(i, j)] = if part == 0 {
                        c(1.0)
                    } else {
                        Complex64::new(0.0, 1.0)
                    };
                    // directional derivative of the constraints
                    let dh = delta.adjoint() * &self.herm * f + f.adjoint() * &self.herm * &delta;
                    let mut rows = Vec::with_capacity(n_res);
                    for a in 0..n {
                        rows.push(dh[(a, a)].re);
                    }
                    for a in 0..n {
                        for b in (a + 1)..n {
                            rows.push(dh[(a, b)].re);
                            rows.push(dh[(a, b)].im);
                        }
                    }
                    if let Some((m, _)) = &self.bilinear {
                        let z = f.columns(0, self.ell).into_owned();
                        let dz = delta.columns(0, self.ell).into_owned();
                        let db = dz.transpose() * m * &z + z.transpose() * m * &dz;
                        for a in 0..self.ell {
                            for b in 0..self.ell {
                                rows.push(db[(a, b)].re);
                                rows.push(db[(a, b)].im);
                            }
                        }
                    }
                    let col = 2 * (j * n + i) + part;
                    for (r, v) in rows.iter().enumerate() {
                        jac[(r, col)] = *v;
                    }
                }
            }
        }
        jac
    }

    /// Random Lie-algebra direction of the real form: anti-Hermitian with
    /// respect to `I_{p,q}`, plus the bilinear condition for `sp`/`so`.
    pub fn random_direction<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> CMat {
        match self.group {
            FrameGroup::Su { p, q } => {
                let m = linalg::random_cmat(rng, p + q, p + q) * c(scale);
                let k = (&m - m.adjoint()) * c(0.5);
                let mut ik = k;
                for i in q..(p + q) {
                    for j in 0..(p + q) {
                        ik[(i, j)] = -ik[(i, j)];
                    }
                }
                // tracelessness keeps det(exp(tA)) = 1; the trace is purely
                // imaginary so the shift stays in the algebra
                let tr = ik.trace() / c((p + q) as f64);
                for i in 0..(p + q) {
                    ik[(i, i)] -= tr;
                }
                ik
            }
            FrameGroup::Sp { n } => {
                let a0 = linalg::random_cmat(rng, n, n) * c(scale);
                let a = (&a0 - a0.adjoint()) * c(0.5);
                let b0 = linalg::random_cmat(rng, n, n) * c(scale);
                let b = (&b0 + b0.transpose()) * c(0.5);
                assemble(&a, &b)
            }
            FrameGroup::So { n } => {
                let a0 = linalg::random_cmat(rng, n, n) * c(scale);
                let a = (&a0 - a0.adjoint()) * c(0.5);
                let b0 = linalg::random_cmat(rng, n, n) * c(scale);
                let b = (&b0 - b0.transpose()) * c(0.5);
                assemble(&a, &b)
            }
        }
    }
}

fn assemble(a: &CMat, b: &CMat) -> CMat {
    let n = a.nrows();
    let mut x = linalg::zeros(2 * n, 2 * n);
    x.view_mut((0, 0), (n, n)).copy_from(a);
    x.view_mut((0, n), (n, n)).copy_from(b);
    let bh = b.adjoint();
    x.view_mut((n, 0), (n, n)).copy_from(&bh);
    let mat = -a.transpose();
    x.view_mut((n, n), (n, n)).copy_from(&mat);
    x
}

/// Exact reference frames.  `su`/`sp`: `Z_a = e_a + e_{q+a}`,
/// `Y_a = (e_a - e_{q+a})/2`, `X` the leftover coordinate vectors.
/// `so`: the paired null pattern `Z_{2k-1} = e_{2k-1} + e_{n+2k}`,
/// `Z_{2k} = e_{2k} - e_{n+2k-1}` with matching `Y` partners.
fn build_reference(group: FrameGroup, ell: usize) -> Result<CMat> {
    let (p, q) = group.pq();
    let n = p + q;
    let mut f = linalg::zeros(n, n);
    match group {
        FrameGroup::Su { .. } | FrameGroup::Sp { .. } => {
            for a in 0..ell {
                f[(a, a)] = c(1.0);
                f[(q + a, a)] = c(1.0);
                f[(a, n - ell + a)] = c(0.5);
                f[(q + a, n - ell + a)] = c(-0.5);
            }
            let mut col = ell;
            for j in ell..q {
                f[(j, col)] = c(1.0);
                col += 1;
            }
            for k in ell..p {
                f[(q + k, col)] = c(1.0);
                col += 1;
            }
        }
        FrameGroup::So { n: nn } => {
            if ell > 2 * (nn / 2) {
                return Err(Error::BadDimension("ell too large for so".into()));
            }
            for a in 0..ell {
                let k = a / 2;
                if a % 2 == 0 {
                    f[(2 * k, a)] = c(1.0);
                    f[(nn + 2 * k + 1, a)] = c(1.0);
                    f[(2 * k, n - ell + a)] = c(0.5);
                    f[(nn + 2 * k + 1, n - ell + a)] = c(-0.5);
                } else {
                    f[(2 * k + 1, a)] = c(1.0);
                    f[(nn + 2 * k, a)] = c(-1.0);
                    f[(2 * k + 1, n - ell + a)] = c(0.5);
                    f[(nn + 2 * k, n - ell + a)] = c(0.5);
                }
            }
            // X block: first-block leftovers, then second-block leftovers.
            // For odd ell the index pair (ell, nn + ell - 1) is only half
            // used: e_{ell} goes to the positive slots, e_{nn+ell-1} to the
            // negative ones.
            let used_first: Vec<bool> = (0..nn).map(|i| i < ell.div_ceil(2) * 2 && i < ell || (ell % 2 == 1 && i == ell - 1)).collect();
            let _ = used_first;
            let mut col = ell;
            let first_used = ell.div_ceil(2) * 2; // indices 0..first_used partially used
            // positive slots: q - ell of them
            let mut pos = Vec::new();
            if ell % 2 == 1 {
                pos.push(ell); // partner index of the unpaired Z
            }
            for i in first_used..nn {
                pos.push(i);
            }
            for &i in pos.iter().take(q - ell) {
                f[(i, col)] = c(1.0);
                col += 1;
            }
            // negative slots
            let mut neg = Vec::new();
            if ell % 2 == 1 {
                neg.push(nn + ell - 1);
            }
            for i in first_used..nn {
                neg.push(nn + i);
            }
            for &i in neg.iter().take(p - ell) {
                f[(i, col)] = c(1.0);
                col += 1;
            }
        }
    }
    // determinant is real with |det| = 1; flip the first X column if needed
    let d = f.determinant();
    if (d - c(1.0)).norm() > 1e-9 {
        let fix = c(1.0) / d;
        let col = ell;
        for i in 0..n {
            f[(i, col)] *= fix;
        }
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// Maurer-Cartan slices
// ---------------------------------------------------------------------------

/// A frame curve with an exact derivative.
pub trait FrameCurve {
    fn value(&self, t: f64) -> CMat;
    fn derivative(&self, t: f64) -> CMat;
}

/// One-parameter family `exp(tA) F0`.
pub struct ExpCurve {
    pub dir: CMat,
    pub base: CMat,
}

impl FrameCurve for ExpCurve {
    fn value(&self, t: f64) -> CMat {
        linalg::expm(&(&self.dir * c(t))) * &self.base
    }

    fn derivative(&self, t: f64) -> CMat {
        &self.dir * self.value(t)
    }
}

/// The g-valued slice `pi` in the frame basis: `dZ_L = pi_L^G Z_G`.
#[derive(Debug, Clone)]
pub struct MaurerCartanSlice {
    pub ell: usize,
    pub x_len: usize,
    pub pi: CMat,
}

impl MaurerCartanSlice {
    fn block(&self, r0: usize, rn: usize, c0: usize, cn: usize) -> CMat {
        self.pi.view((r0, c0), (rn, cn)).into_owned()
    }

    pub fn psi(&self) -> CMat {
        self.block(0, self.ell, 0, self.ell)
    }

    /// `theta_a^j`: the `Z`-to-`X` block.
    pub fn theta(&self) -> CMat {
        self.block(0, self.ell, self.ell, self.x_len)
    }

    /// `phi_a^b`: the `Z`-to-`Y` block.
    pub fn phi(&self) -> CMat {
        self.block(0, self.ell, self.ell + self.x_len, self.ell)
    }

    pub fn omega(&self) -> CMat {
        self.block(self.ell, self.x_len, self.ell, self.x_len)
    }

    pub fn psi_tilde(&self) -> CMat {
        let o = self.ell + self.x_len;
        self.block(o, self.ell, o, self.ell)
    }

    /// Residual of the symmetry pattern `pi G + G pi^* = 0` obtained by
    /// differentiating the pairing relations.
    pub fn gram_symmetry_residual(&self, kit: &FrameKit) -> f64 {
        let g = kit.gram_target();
        linalg::max_abs(&(&self.pi * g + g * self.pi.adjoint()))
    }

    /// Residual of the bilinear compatibility `pi B + B pi^t = 0`; zero for
    /// curves inside the `sp`/`so` orbit of the reference.
    pub fn bilinear_symmetry_residual(&self, kit: &FrameKit) -> Option<f64> {
        kit.bilinear_gram()
            .map(|b| linalg::max_abs(&(&self.pi * b + b * self.pi.transpose())))
    }

    /// Residual of the `phi`-block reduction: `phi - phi^t` for `sp`,
    /// `phi K^t + K phi^t` for `so` with `K = S(Z, Y)` of the reference.
    pub fn phi_reduction_residual(&self, kit: &FrameKit) -> Option<f64> {
        let b = kit.bilinear_gram()?;
        let n = kit.dim();
        let k = b
            .view((0, n - kit.ell), (kit.ell, kit.ell))
            .into_owned();
        let phi = self.phi();
        Some(match kit.group {
            FrameGroup::Sp { .. } => linalg::max_abs(&(&phi - phi.transpose())),
            FrameGroup::So { .. } => {
                let m = &phi * k.transpose();
                linalg::max_abs(&(&m + m.transpose()))
            }
            FrameGroup::Su { .. } => unreachable!(),
        })
    }
}

/// Maurer-Cartan slice of a frame curve at parameter `t`.
pub fn maurer_cartan(kit: &FrameKit, curve: &dyn FrameCurve, t: f64) -> Result<MaurerCartanSlice> {
    let f = curve.value(t);
    let drift = kit.relations_residual(&f);
    if drift > FRAME_DRIFT {
        return Err(Error::FrameDriftTooLarge(drift));
    }
    let fdot = curve.derivative(t);
    let finv = linalg::try_inverse(&f).ok_or(Error::Degenerate("singular frame".into()))?;
    let pi = (finv * fdot).transpose();
    Ok(MaurerCartanSlice {
        ell: kit.ell,
        x_len: kit.x_len(),
        pi,
    })
}

/// Finite-difference residual of the structure equation
/// `d omega + omega ∧ omega = 0` (`omega = F^{-1} dF`) on the two-parameter
/// family `F(s,t) = exp(sA) exp(tB) F0`, evaluated at `(0,0)` with central
/// differences of step `h`.
pub fn structure_equation_residual(kit: &FrameKit, a: &CMat, b: &CMat, h: f64) -> f64 {
    let f0 = &kit.reference;
    let omega_t = |s: f64| -> CMat {
        // F = exp(sA) exp(tB) F0 at t = 0; dF/dt = exp(sA) B F0
        let esa = linalg::expm(&(a * c(s)));
        let f = &esa * f0;
        let fdot = &esa * b * f0;
        linalg::try_inverse(&f).unwrap() * fdot
    };
    let omega_s = |t: f64| -> CMat {
        let etb = linalg::expm(&(b * c(t)));
        let f = &etb * f0;
        let fdot = a * &etb * f0;
        linalg::try_inverse(&f).unwrap() * fdot
    };
    let ds_omega_t = (omega_t(h) - omega_t(-h)) * c(0.5 / h);
    let dt_omega_s = (omega_s(h) - omega_s(-h)) * c(0.5 / h);
    let w_s = omega_s(0.0);
    let w_t = omega_t(0.0);
    let resid = ds_omega_t - dt_omega_s + &w_s * &w_t - &w_t * &w_s;
    linalg::max_abs(&resid)
}

// ---------------------------------------------------------------------------
// frame changes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum FrameChange {
    /// `Z~ = W Z`, `Y~ = V Y` with `conj(V)^t W = I` and `det W det V = 1`;
    /// `W`, `V` symmetric for `so`, skew-symmetric for `sp`.
    Position { w: CMat, v: CMat },
    /// `Y~ = Y + i H Z` with `H` Hermitian.
    RealVectors { h: CMat },
    /// `Z~_a = Z_a / lambda_a`, `Y~_a = lambda_a Y_a`, `lambda_a > 0`.
    Dilation { lambda: Vec<f64> },
    /// `X~_j = U_j^k X_k` with `U` in `SU(q-l, p-l)`.
    Rotation { u: CMat },
    /// `X~_j = X_j + C_j^b Z_b`, `Y~_a = Y_a + A_a^b Z_b + B_a^j X_j`
    /// with `C_j^a + B_j^a = 0` and `A + A^* + B eps B^* = 0`.
    Final { a: CMat, b: CMat, c: CMat },
}

impl FrameKit {
    /// The block matrix `U` of a change, acting on frame vectors by
    /// `new_L = U_L^G old_G` (so frames transform by `F -> F U^t`).
    pub fn change_matrix(&self, change: &FrameChange) -> Result<CMat> {
        let (ell, xl, n) = (self.ell, self.x_len(), self.dim());
        let mut u = linalg::eye(n);
        match change {
            FrameChange::Position { w, v } => {
                if w.nrows() != ell || w.ncols() != ell || v.nrows() != ell || v.ncols() != ell {
                    return Err(Error::InvalidParams("position blocks must be l x l".into()));
                }
                let res = linalg::max_abs(&(v.adjoint() * w - linalg::eye(ell)));
                if res > 1e-8 {
                    return Err(Error::InvalidParams(format!(
                        "conj(V)^t W = I violated, residual {res:.3e}"
                    )));
                }
                match self.group {
                    FrameGroup::So { .. } => {
                        if linalg::max_abs(&(w - w.transpose())) > 1e-8
                            || linalg::max_abs(&(v - v.transpose())) > 1e-8
                        {
                            return Err(Error::InvalidParams(
                                "so position change needs symmetric W, V".into(),
                            ));
                        }
                    }
                    FrameGroup::Sp { .. } => {
                        if linalg::max_abs(&(w + w.transpose())) > 1e-8
                            || linalg::max_abs(&(v + v.transpose())) > 1e-8
                        {
                            return Err(Error::InvalidParams(
                                "sp position change needs skew-symmetric W, V".into(),
                            ));
                        }
                    }
                    FrameGroup::Su { .. } => {}
                }
                let det = w.determinant() * v.determinant();
                if (det - c(1.0)).norm() > 1e-8 {
                    return Err(Error::InvalidParams(format!(
                        "det W det V = {det} must be 1 to keep det(frame) = 1"
                    )));
                }
                u.view_mut((0, 0), (ell, ell)).copy_from(w);
                u.view_mut((ell + xl, ell + xl), (ell, ell)).copy_from(v);
            }
            FrameChange::RealVectors { h } => {
                if h.nrows() != ell || h.ncols() != ell {
                    return Err(Error::InvalidParams("H must be l x l".into()));
                }
                if linalg::max_abs(&(h - h.adjoint())) > 1e-8 {
                    return Err(Error::InvalidParams("H must be Hermitian".into()));
                }
                let ih = h * Complex64::new(0.0, 1.0);
                u.view_mut((ell + xl, 0), (ell, ell)).copy_from(&ih);
            }
            FrameChange::Dilation { lambda } => {
                if lambda.len() != ell {
                    return Err(Error::InvalidParams("need l dilation factors".into()));
                }
                if lambda.iter().any(|&l| l <= 0.0) {
                    return Err(Error::InvalidParams("dilation factors must be positive".into()));
                }
                for a in 0..ell {
                    u[(a, a)] = c(1.0 / lambda[a]);
                    u[(ell + xl + a, ell + xl + a)] = c(lambda[a]);
                }
            }
            FrameChange::Rotation { u: rot } => {
                if rot.nrows() != xl || rot.ncols() != xl {
                    return Err(Error::InvalidParams("rotation must act on the X block".into()));
                }
                // U must preserve the X-block pairing diag(I_{q-l}, -I_{p-l})
                let mut eps = linalg::zeros(xl, xl);
                for j in 0..xl {
                    eps[(j, j)] = c(self.x_sign(j));
                }
                let res = linalg::max_abs(&(rot.map(|e| e.conj()) * &eps * rot.transpose() - &eps));
                if res > 1e-8 {
                    return Err(Error::InvalidParams(format!(
                        "rotation is not an SU(q-l, p-l) matrix, residual {res:.3e}"
                    )));
                }
                if (rot.determinant() - c(1.0)).norm() > 1e-8 {
                    return Err(Error::InvalidParams("rotation must have det 1".into()));
                }
                u.view_mut((ell, ell), (xl, xl)).copy_from(rot);
            }
            FrameChange::Final { a, b, c: cc } => {
                if a.nrows() != ell
                    || a.ncols() != ell
                    || b.nrows() != ell
                    || b.ncols() != xl
                    || cc.nrows() != xl
                    || cc.ncols() != ell
                {
                    return Err(Error::InvalidParams("final change block shapes".into()));
                }
                // B_j^a := eps_j conj(B_a^j); require C + B^dual = 0
                let mut bdual = linalg::zeros(xl, ell);
                for j in 0..xl {
                    for al in 0..ell {
                        bdual[(j, al)] = c(self.x_sign(j)) * b[(al, j)].conj();
                    }
                }
                if linalg::max_abs(&(cc + &bdual)) > 1e-8 {
                    return Err(Error::InvalidParams(
                        "C_j^a + B_j^a = 0 violated".into(),
                    ));
                }
                // A + A^* + B eps B^* = 0
                let mut eps = linalg::zeros(xl, xl);
                for j in 0..xl {
                    eps[(j, j)] = c(self.x_sign(j));
                }
                let res = a + a.adjoint() + b * eps * b.adjoint();
                if linalg::max_abs(&res) > 1e-8 {
                    return Err(Error::InvalidParams(
                        "A + A^* + B eps B^* = 0 violated".into(),
                    ));
                }
                u.view_mut((ell, 0), (xl, ell)).copy_from(cc);
                u.view_mut((ell + xl, 0), (ell, ell)).copy_from(a);
                u.view_mut((ell + xl, ell), (ell, xl)).copy_from(b);
            }
        }
        Ok(u)
    }

    /// Apply a frame change; the result is again a valid frame.
    pub fn frame_change(&self, frame: &SigmaFrame, change: &FrameChange) -> Result<SigmaFrame> {
        let u = self.change_matrix(change)?;
        let f = &frame.matrix * u.transpose();
        self.validate(&f)?;
        Ok(SigmaFrame { matrix: f })
    }
}

// ---------------------------------------------------------------------------
// parameter generators for the fuzzed law tests
// ---------------------------------------------------------------------------

/// Random admissible position change, `None` when the family is empty
/// (`sp` with odd `l` has no invertible skew-symmetric blocks).
pub fn random_position<R: Rng + ?Sized>(rng: &mut R, kit: &FrameKit) -> Option<FrameChange> {
    let ell = kit.ell;
    for _ in 0..20 {
        let raw = linalg::random_cmat(rng, ell, ell);
        let mut w = match kit.group {
            FrameGroup::Su { .. } => raw,
            FrameGroup::So { .. } => (&raw + raw.transpose()) * c(0.5),
            FrameGroup::Sp { .. } => {
                if ell % 2 == 1 {
                    return None;
                }
                (&raw - raw.transpose()) * c(0.5)
            }
        };
        if linalg::rank(&w) < ell {
            continue;
        }
        // phase-normalize so det(W) det(V) = 1 with V = W^{-*}
        let d = w.determinant();
        let phase = d / d.norm();
        let fix = phase.powf(-1.0 / ell as f64);
        w *= fix;
        let v = linalg::try_inverse(&w)?.adjoint();
        return Some(FrameChange::Position { w, v });
    }
    None
}

pub fn random_real_vectors<R: Rng + ?Sized>(rng: &mut R, kit: &FrameKit) -> FrameChange {
    let raw = linalg::random_cmat(rng, kit.ell, kit.ell);
    let h = (&raw + raw.adjoint()) * c(0.5);
    FrameChange::RealVectors { h }
}

pub fn random_dilation<R: Rng + ?Sized>(rng: &mut R, kit: &FrameKit) -> FrameChange {
    let lambda = (0..kit.ell).map(|_| rng.gen_range(0.3..3.0)).collect();
    FrameChange::Dilation { lambda }
}

pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R, kit: &FrameKit) -> FrameChange {
    let (qx, px) = (kit.q - kit.ell, kit.p - kit.ell);
    let xl = qx + px;
    // traceless element of u(qx, px), exponentiated
    let m = linalg::random_cmat(rng, xl, xl) * c(0.4);
    let k = (&m - m.adjoint()) * c(0.5);
    let mut a = k;
    for i in qx..xl {
        for j in 0..xl {
            a[(i, j)] = -a[(i, j)];
        }
    }
    let tr = a.trace() / c(xl as f64);
    for i in 0..xl {
        a[(i, i)] -= tr;
    }
    // the change matrix applies X~ = U X with the pairing conj(U) eps U^t = eps,
    // which is the transpose convention: exp of a suitable algebra element
    let u = linalg::expm(&a.transpose());
    FrameChange::Rotation { u }
}

pub fn random_final<R: Rng + ?Sized>(rng: &mut R, kit: &FrameKit) -> FrameChange {
    let (ell, xl) = (kit.ell, kit.x_len());
    let b = linalg::random_cmat(rng, ell, xl) * c(0.7);
    let mut cc = linalg::zeros(xl, ell);
    for j in 0..xl {
        for al in 0..ell {
            cc[(j, al)] = -c(kit.x_sign(j)) * b[(al, j)].conj();
        }
    }
    let mut eps = linalg::zeros(xl, xl);
    for j in 0..xl {
        eps[(j, j)] = c(kit.x_sign(j));
    }
    let m = &b * eps * b.adjoint();
    let s0 = linalg::random_cmat(rng, ell, ell);
    let skew = (&s0 - s0.adjoint()) * c(0.5);
    let a = m * c(-0.5) + skew;
    FrameChange::Final { a, b, c: cc }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kits() -> Vec<FrameKit> {
        vec![
            FrameKit::new(FrameGroup::Su { p: 3, q: 2 }, 1).unwrap(),
            FrameKit::new(FrameGroup::Sp { n: 3 }, 2).unwrap(),
            FrameKit::new(FrameGroup::So { n: 4 }, 2).unwrap(),
            FrameKit::new(FrameGroup::So { n: 4 }, 1).unwrap(),
        ]
    }

    #[test]
    fn references_satisfy_relations() {
        for kit in kits() {
            let f = kit.reference();
            assert!(kit.relations_residual(&f.matrix) < 1e-12, "{:?}", kit.group);
            assert!((f.matrix.determinant() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn make_frame_corrects_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for kit in kits() {
            let n = kit.dim();
            for _ in 0..5 {
                let noise = linalg::random_cmat(&mut rng, n, n) * Complex64::new(1e-2, 0.0);
                let guess = &kit.reference().matrix + noise;
                let fixed = kit.make_frame(&guess).unwrap();
                assert!(kit.relations_residual(&fixed.matrix) < 1e-12);
                // the correction stays close to the guess
                assert!(linalg::max_abs(&(&fixed.matrix - &guess)) < 0.2);
            }
        }
    }

    #[test]
    fn make_frame_rejects_bad_z_block() {
        // an Sp guess whose Z block is far from isotropic cannot be
        // corrected by small steps
        let kit = FrameKit::new(FrameGroup::Sp { n: 2 }, 1).unwrap();
        let mut guess = kit.reference().matrix.clone();
        // Z1 := e1 + e2 (J(Z1,Z1) = 0 still), instead poison the pairing by
        // making the Z column equal a Y-type vector
        guess.set_column(0, &guess.column(3).into_owned());
        assert!(kit.make_frame(&guess).is_err());
    }

    #[test]
    fn exp_curve_slices_satisfy_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        for kit in kits() {
            for _ in 0..20 {
                let a = kit.random_direction(&mut rng, 0.8);
                let curve = ExpCurve {
                    dir: a,
                    base: kit.reference().matrix.clone(),
                };
                let t: f64 = rng.gen_range(-0.4..0.4);
                let slice = maurer_cartan(&kit, &curve, t).unwrap();
                assert!(slice.gram_symmetry_residual(&kit) < 1e-10, "{:?}", kit.group);
                if let Some(r) = slice.bilinear_symmetry_residual(&kit) {
                    assert!(r < 1e-10, "{:?} bilinear {r:.2e}", kit.group);
                }
                // phi reduction: sp always; so only for even ell (odd ell
                // frames have S(Z, X) != 0 and the reduction mixes blocks)
                let even = kit.ell % 2 == 0;
                match kit.group {
                    FrameGroup::Sp { .. } => {
                        assert!(slice.phi_reduction_residual(&kit).unwrap() < 1e-10)
                    }
                    FrameGroup::So { .. } if even => {
                        assert!(slice.phi_reduction_residual(&kit).unwrap() < 1e-10)
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn one_parameter_slice_is_conjugated_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let kit = FrameKit::new(FrameGroup::Su { p: 3, q: 2 }, 1).unwrap();
        let a = kit.random_direction(&mut rng, 0.5);
        let curve = ExpCurve {
            dir: a.clone(),
            base: kit.reference().matrix.clone(),
        };
        // at any t: pi^t = F^{-1} A F, constant iff A commutes; at t = 0
        // pi = (F0^{-1} A F0)^t
        let slice = maurer_cartan(&kit, &curve, 0.0).unwrap();
        let f0 = kit.reference().matrix;
        let expect = (linalg::try_inverse(&f0).unwrap() * &a * &f0).transpose();
        assert!(linalg::max_abs(&(&slice.pi - expect)) < 1e-12);
    }

    #[test]
    fn structure_equation_residual_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        for kit in kits() {
            for _ in 0..3 {
                let a = kit.random_direction(&mut rng, 0.6);
                let b = kit.random_direction(&mut rng, 0.6);
                let res = structure_equation_residual(&kit, &a, &b, 1e-4);
                assert!(res < 1e-6, "{:?}: {res:.3e}", kit.group);
            }
        }
    }

    #[test]
    fn frame_drift_detected() {
        let kit = FrameKit::new(FrameGroup::Su { p: 3, q: 2 }, 1).unwrap();
        struct Bad(CMat);
        impl FrameCurve for Bad {
            fn value(&self, _t: f64) -> CMat {
                &self.0 * Complex64::new(1.001, 0.0)
            }
            fn derivative(&self, _t: f64) -> CMat {
                linalg::zeros(5, 5)
            }
        }
        let curve = Bad(kit.reference().matrix);
        assert!(matches!(
            maurer_cartan(&kit, &curve, 0.0),
            Err(Error::FrameDriftTooLarge(_))
        ));
    }

    #[test]
    fn frame_changes_preserve_relations() {
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        for kit in kits() {
            let f = kit.reference();
            for _ in 0..30 {
                let changes: Vec<FrameChange> = vec![
                    random_real_vectors(&mut rng, &kit),
                    random_dilation(&mut rng, &kit),
                    random_rotation(&mut rng, &kit),
                    random_final(&mut rng, &kit),
                ]
                .into_iter()
                .chain(random_position(&mut rng, &kit))
                .collect();
                for ch in &changes {
                    let g = kit.frame_change(&f, ch).unwrap();
                    assert!(
                        kit.relations_residual(&g.matrix) < 1e-10,
                        "{:?} {:?}",
                        kit.group,
                        ch
                    );
                }
            }
        }
    }

    #[test]
    fn transformation_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        for kit in kits() {
            let a = kit.random_direction(&mut rng, 0.7);
            let curve = ExpCurve {
                dir: a,
                base: kit.reference().matrix.clone(),
            };
            let slice = maurer_cartan(&kit, &curve, 0.1).unwrap();
            let theta = slice.theta();
            let phi = slice.phi();

            // dilation: theta~ = theta / lambda_a (rows), phi~ = phi /
            // (lambda_a lambda_b)
            let dil = random_dilation(&mut rng, &kit);
            let u = kit.change_matrix(&dil).unwrap();
            let pi2 = &u * &slice.pi * linalg::try_inverse(&u).unwrap();
            let s2 = MaurerCartanSlice {
                ell: kit.ell,
                x_len: kit.x_len(),
                pi: pi2,
            };
            let FrameChange::Dilation { lambda } = &dil else { unreachable!() };
            let mut expect_theta = theta.clone();
            let mut expect_phi = phi.clone();
            for al in 0..kit.ell {
                for j in 0..kit.x_len() {
                    expect_theta[(al, j)] /= Complex64::new(lambda[al], 0.0);
                }
                for be in 0..kit.ell {
                    expect_phi[(al, be)] /= Complex64::new(lambda[al] * lambda[be], 0.0);
                }
            }
            assert!(linalg::max_abs(&(s2.theta() - expect_theta)) < 1e-10);
            assert!(linalg::max_abs(&(s2.phi() - expect_phi)) < 1e-10);

            // rotation: phi unchanged exactly, theta~ = theta U^{-1}
            let rot = random_rotation(&mut rng, &kit);
            let u = kit.change_matrix(&rot).unwrap();
            let pi2 = &u * &slice.pi * linalg::try_inverse(&u).unwrap();
            let s2 = MaurerCartanSlice {
                ell: kit.ell,
                x_len: kit.x_len(),
                pi: pi2,
            };
            assert!(linalg::max_abs(&(s2.phi() - &phi)) < 1e-12);
            let FrameChange::Rotation { u: rmat } = &rot else { unreachable!() };
            let expect = &theta * linalg::try_inverse(rmat).unwrap();
            assert!(linalg::max_abs(&(s2.theta() - expect)) < 1e-10);

            // final change: phi unchanged, theta~ = theta - phi B
            let fin = random_final(&mut rng, &kit);
            let u = kit.change_matrix(&fin).unwrap();
            let pi2 = &u * &slice.pi * linalg::try_inverse(&u).unwrap();
            let s2 = MaurerCartanSlice {
                ell: kit.ell,
                x_len: kit.x_len(),
                pi: pi2,
            };
            let FrameChange::Final { b, .. } = &fin else { unreachable!() };
            assert!(linalg::max_abs(&(s2.phi() - &phi)) < 1e-10);
            let expect = &theta - &phi * b;
            assert!(linalg::max_abs(&(s2.theta() - expect)) < 1e-10);

            // position: theta~ = W theta, phi~ = W phi W^*
            if let Some(pos) = random_position(&mut rng, &kit) {
                let u = kit.change_matrix(&pos).unwrap();
                let pi2 = &u * &slice.pi * linalg::try_inverse(&u).unwrap();
                let s2 = MaurerCartanSlice {
                    ell: kit.ell,
                    x_len: kit.x_len(),
                    pi: pi2,
                };
                let FrameChange::Position { w, .. } = &pos else { unreachable!() };
                assert!(linalg::max_abs(&(s2.theta() - w * &theta)) < 1e-9);
                let expect = w * &phi * w.adjoint();
                assert!(linalg::max_abs(&(s2.phi() - expect)) < 1e-9);
            }
        }
    }

    #[test]
    fn dilation_identity_is_identity() {
        let kit = FrameKit::new(FrameGroup::Su { p: 3, q: 2 }, 1).unwrap();
        let dil = FrameChange::Dilation { lambda: vec![1.0] };
        let f = kit.reference();
        let g = kit.frame_change(&f, &dil).unwrap();
        assert!(linalg::max_abs(&(&g.matrix - &f.matrix)) == 0.0);
    }

    #[test]
    fn composition_acts_by_products() {
        // composing two constant changes multiplies the U factors:
        // pi -> (U2 U1) pi (U2 U1)^{-1}
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let kit = FrameKit::new(FrameGroup::Su { p: 3, q: 2 }, 1).unwrap();
        let f = kit.reference();
        let c1 = random_dilation(&mut rng, &kit);
        let c2 = random_final(&mut rng, &kit);
        let g1 = kit.frame_change(&f, &c1).unwrap();
        let g12 = kit.frame_change(&g1, &c2).unwrap();
        let u1 = kit.change_matrix(&c1).unwrap();
        let u2 = kit.change_matrix(&c2).unwrap();
        let direct = &f.matrix * (&u2 * &u1).transpose();
        assert!(linalg::max_abs(&(&g12.matrix - direct)) < 1e-12);
    }

    use rand::Rng;
}
