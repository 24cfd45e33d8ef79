//! Moduli maps induced by a proper polynomial map between domains: jet
//! spans along characteristic slices, the induced flag map, its
//! `V1`-projection with the holomorphic/anti-holomorphic classification,
//! index sequences, and the subgrassmannian-respecting report.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::Serialize;

use crate::domains::{DomainSpec, Location};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::moduli::{self, Dual, FlagPair, Level};
use crate::poly::{MPoly, MapEval, PolyMatrixMap};
use crate::sampling;
use crate::subspace::Subspace;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

// ---------------------------------------------------------------------------
// affine characteristic slices
// ---------------------------------------------------------------------------

/// Affine parametrization of `X_sigma ∩ chart`: `Z(t) = center + sum t_k
/// dirs_k`.  Characteristic subspaces are affine in Harish-Chandra
/// coordinates, so this is exact.
pub struct AffineSlice {
    pub spec: DomainSpec,
    pub center: CMat,
    pub dirs: Vec<CMat>,
}

impl AffineSlice {
    /// Solve the affine constraints `Z a = b` for `(a; b)` spanning `V1`
    /// and `C1 + C2 Z = 0` for rows annihilating `V2`, within the symmetry
    /// class of the source.
    pub fn through(spec: &DomainSpec, flag: &FlagPair) -> Result<AffineSlice> {
        if flag.dual() != spec.dual() {
            return Err(Error::InvalidFlag("flag dual mismatch".into()));
        }
        AffineSlice::from_subspaces(spec, flag.v1(), &flag.v2()?)
    }

    /// Same as [`AffineSlice::through`] for a raw pair `V1 ⊆ V2` (no moduli
    /// level needed, so degenerate hulls like `V1 = 0` are allowed).
    pub fn from_subspaces(spec: &DomainSpec, v1: &Subspace, v2: &Subspace) -> Result<AffineSlice> {
        let (rows, cols) = spec.matrix_shape();
        let nv = rows * cols;
        let q = spec.plane_dim();
        let n_amb = spec.ambient_dim();
        let mut sys_rows: Vec<CVec> = Vec::new();
        let mut rhs: Vec<Complex64> = Vec::new();
        let var = |i: usize, j: usize| j * rows + i;
        // V1 containment: Z a = b for each basis column (a; b) of V1
        for k in 0..v1.dim() {
            let col = v1.onb().column(k);
            let a = col.rows(0, q).into_owned();
            let b = col.rows(q, n_amb - q).into_owned();
            for i in 0..rows {
                let mut row = CVec::zeros(nv);
                for j in 0..cols {
                    row[var(i, j)] = a[j];
                }
                sys_rows.push(row);
                rhs.push(b[i]);
            }
        }
        // V2 containment: C1 + C2 Z = 0 with [C1 C2] the annihilator rows
        let comp = linalg::null_space(&v2.onb().adjoint()); // ambient x codim
        for k in 0..comp.ncols() {
            let cc = comp.column(k);
            let c1 = cc.rows(0, q).into_owned();
            let c2 = cc.rows(q, n_amb - q).into_owned();
            for j in 0..cols {
                let mut row = CVec::zeros(nv);
                for i in 0..rows {
                    row[var(i, j)] = c2[i].conj();
                }
                sys_rows.push(row);
                rhs.push(-c1[j].conj());
            }
        }
        // symmetry class
        let sym_sign = match spec {
            DomainSpec::TypeI { .. } => None,
            DomainSpec::TypeII { .. } => Some(1.0),
            DomainSpec::TypeIII { .. } => Some(-1.0),
        };
        if let Some(s) = sym_sign {
            for i in 0..rows {
                for j in (i + 1)..cols {
                    let mut row = CVec::zeros(nv);
                    row[var(i, j)] = c(1.0);
                    row[var(j, i)] = c(s);
                    sys_rows.push(row);
                    rhs.push(c(0.0));
                }
            }
        }
        let m = sys_rows.len();
        let mut a_mat = linalg::zeros(m, nv);
        let mut b_vec = linalg::zeros(m, 1);
        for (r, row) in sys_rows.iter().enumerate() {
            for j in 0..nv {
                a_mat[(r, j)] = row[j];
            }
            b_vec[(r, 0)] = rhs[r];
        }
        let sol = linalg::lstsq(&a_mat, &b_vec, 1e-10);
        // consistency
        let resid = linalg::max_abs(&(&a_mat * &sol - &b_vec));
        if resid > 1e-7 {
            return Err(Error::InvalidFlag(format!(
                "slice is empty in the chart, residual {resid:.2e}"
            )));
        }
        let center = linalg::unvectorize(&sol.column(0).into_owned(), rows, cols);
        let ns = linalg::null_space(&a_mat);
        let dirs = (0..ns.ncols())
            .map(|k| linalg::unvectorize(&ns.column(k).into_owned(), rows, cols))
            .collect();
        Ok(AffineSlice {
            spec: *spec,
            center,
            dirs,
        })
    }

    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    pub fn at(&self, t: &[Complex64]) -> CMat {
        let mut z = self.center.clone();
        for (k, &tk) in t.iter().enumerate() {
            z += &self.dirs[k] * tk;
        }
        z
    }

    /// Random interior point of the slice, shrinking the parameter scale
    /// until the point falls inside the domain.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R, tries: usize) -> Option<CMat> {
        let mut scale = 0.6;
        for _ in 0..tries {
            let t: Vec<Complex64> = (0..self.dim())
                .map(|_| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
                })
                .collect();
            let z = self.at(&t);
            if let Ok(Location::Interior) = self.spec.contains(&z) {
                return Some(z);
            }
            scale *= 0.7;
        }
        None
    }

    /// Recenter on a point of the slice.
    pub fn recentered(&self, z: &CMat) -> AffineSlice {
        AffineSlice {
            spec: self.spec,
            center: z.clone(),
            dirs: self.dirs.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// truncated jet arithmetic on matrices of polynomials
// ---------------------------------------------------------------------------

fn truncate(p: &MPoly, deg: usize) -> MPoly {
    let mut out = MPoly::zero(p.nvars);
    for (e, v) in &p.terms {
        let d: usize = e.iter().map(|&x| x as usize).sum();
        if d <= deg {
            out.terms.insert(e.clone(), *v);
        }
    }
    out
}

struct PolyMat {
    rows: usize,
    cols: usize,
    entries: Vec<MPoly>,
}

impl PolyMat {
    fn entry(&self, i: usize, j: usize) -> &MPoly {
        &self.entries[j * self.rows + i]
    }

    fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> MPoly) -> PolyMat {
        let mut entries = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                entries.push(f(i, j));
            }
        }
        PolyMat {
            rows,
            cols,
            entries,
        }
    }

    fn mul(&self, other: &PolyMat, deg: usize) -> PolyMat {
        assert_eq!(self.cols, other.rows);
        PolyMat::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = MPoly::zero(self.entries[0].nvars);
            for k in 0..self.cols {
                acc = acc.add(&self.entry(i, k).mul(other.entry(k, j)));
            }
            truncate(&acc, deg)
        })
    }

    fn constant_part(&self) -> CMat {
        let nv = self.entries[0].nvars;
        let zero = vec![0u16; nv];
        CMat::from_fn(self.rows, self.cols, |i, j| self.entry(i, j).coeff(&zero))
    }

    /// Truncated inverse via the Neumann series around the constant part.
    fn inverse(&self, deg: usize) -> Result<PolyMat> {
        assert_eq!(self.rows, self.cols);
        let a0 = self.constant_part();
        let a0inv = linalg::try_inverse(&a0).ok_or(Error::ChartFailure(
            "constant part of the chart matrix is singular".into(),
        ))?;
        let nv = self.entries[0].nvars;
        // E = A0^{-1} (A - A0): zero constant term
        let a0inv_pm = PolyMat::from_fn(self.rows, self.rows, |i, j| {
            MPoly::constant(nv, a0inv[(i, j)])
        });
        let mut a_shift = PolyMat::from_fn(self.rows, self.rows, |i, j| {
            let mut p = self.entry(i, j).clone();
            let zero_key = vec![0u16; nv];
            p.terms.remove(&zero_key);
            p
        });
        a_shift = a0inv_pm.mul(&a_shift, deg);
        // sum_{m} (-E)^m A0^{-1}
        let mut acc = PolyMat::from_fn(self.rows, self.rows, |i, j| {
            MPoly::constant(nv, if i == j { c(1.0) } else { c(0.0) })
        });
        let mut power = PolyMat::from_fn(self.rows, self.rows, |i, j| {
            MPoly::constant(nv, if i == j { c(1.0) } else { c(0.0) })
        });
        for _ in 0..deg {
            power = power.mul(&a_shift, deg);
            // acc += (-1)^m power: fold the sign into the multiply
            acc = PolyMat::from_fn(self.rows, self.rows, |i, j| {
                acc.entry(i, j).sub(power.entry(i, j))
            });
            // flip sign for next term: power holds E^m, signs alternate;
            // easier: keep power_signed = (-E)^m
            power = PolyMat::from_fn(self.rows, self.rows, |i, j| {
                power.entry(i, j).scale(c(-1.0))
            });
        }
        Ok(acc.mul(&a0inv_pm, deg))
    }
}

// ---------------------------------------------------------------------------
// jet spans
// ---------------------------------------------------------------------------

/// The span of chart derivatives of `f` along a slice at `P`, inside
/// `Hom(E, V'/E)` for `E = embed(f(P))`.
pub struct JetSpan {
    pub k: usize,
    pub span: Subspace,
    /// adapted bases of the target: `E` columns and a completion
    pub e_basis: CMat,
    pub d_basis: CMat,
    pub stabilized_at: Option<usize>,
}

/// Exact chart jets of `f` restricted to the slice, recentered at `p`.
/// Returns the per-order spans up to `k_max` (order-`k` span includes all
/// lower orders).
pub fn jet_span(
    f: &PolyMatrixMap,
    slice: &AffineSlice,
    p: &CMat,
    k: usize,
) -> Result<JetSpan> {
    let centered = slice.recentered(p);
    if f.source.contains(p)? != Location::Interior {
        return Err(Error::PointNotOnSlice);
    }
    // verify p actually sits on the slice: constraints were affine, so the
    // recentered slice must reproduce p at t = 0 and stay inside X_sigma;
    // cheap necessary check: f evaluates fine and the flag conditions were
    // encoded in the slice construction.
    let restricted = f.restrict_affine(&centered.center, &centered.dirs);
    let (tr, _tc) = f.target.matrix_shape();
    let q2 = f.target.plane_dim();
    let n2 = f.target.ambient_dim();
    let nv = centered.dirs.len();
    // stacked embedding [I; f(Z(t))] as a polynomial matrix
    let stack = PolyMat::from_fn(n2, q2, |i, j| {
        if i < q2 {
            MPoly::constant(nv, if i == j { c(1.0) } else { c(0.0) })
        } else {
            restricted[j * tr + (i - q2)].clone()
        }
    });
    // adapted bases at E = embed(f(P))
    let fp = f.eval(p)?;
    let e = f.target.embed_point(&fp)?;
    let e_basis = e.onb().clone();
    let d_basis = linalg::null_space(&e_basis.adjoint());
    // A(t) = E^H stack, B(t) = D^H stack; chart M(t) = B A^{-1}
    let e_pm = PolyMat::from_fn(q2, n2, |i, j| MPoly::constant(nv, e_basis[(j, i)].conj()));
    let d_pm = PolyMat::from_fn(n2 - q2, n2, |i, j| {
        MPoly::constant(nv, d_basis[(j, i)].conj())
    });
    let a = e_pm.mul(&stack, k);
    let b = d_pm.mul(&stack, k);
    let m = b.mul(&a.inverse(k)?, k);
    // span of all Taylor coefficients of order 1..k (coefficients span the
    // same space as the derivatives)
    let mut cols: Vec<CVec> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for entry in &m.entries {
        for e in entry.terms.keys() {
            let d: usize = e.iter().map(|&x| x as usize).sum();
            if d >= 1 && d <= k {
                seen.insert(e.clone());
            }
        }
    }
    for expo in seen {
        let mut v = CVec::zeros((n2 - q2) * q2);
        for j in 0..q2 {
            for i in 0..(n2 - q2) {
                v[j * (n2 - q2) + i] = m.entry(i, j).coeff(&expo);
            }
        }
        cols.push(v);
    }
    let span = if cols.is_empty() {
        Subspace::zero((n2 - q2) * q2)
    } else {
        let mut mat = linalg::zeros((n2 - q2) * q2, cols.len());
        for (j, v) in cols.iter().enumerate() {
            mat.set_column(j, v);
        }
        Subspace::canonicalize(&mat)?
    };
    Ok(JetSpan {
        k,
        span,
        e_basis,
        d_basis,
        stabilized_at: None,
    })
}

/// Increase the order until two consecutive spans agree; hard cap at
/// `dim Hom(E, V'/E)`.
pub fn jet_span_stabilized(
    f: &PolyMatrixMap,
    slice: &AffineSlice,
    p: &CMat,
) -> Result<JetSpan> {
    let q2 = f.target.plane_dim();
    let n2 = f.target.ambient_dim();
    let cap = ((n2 - q2) * q2).max(1);
    let mut prev = jet_span(f, slice, p, 1)?;
    let mut k = 1;
    loop {
        // polynomial maps of degree d have no new jets beyond k >= d *
        // slice-degree bound, but the cap keeps the loop finite regardless
        if k >= cap {
            prev.stabilized_at = Some(k);
            return Ok(prev);
        }
        let next = jet_span(f, slice, p, k + 1)?;
        if next.span.dim() == prev.span.dim() {
            let mut out = next;
            out.stabilized_at = Some(k);
            return Ok(out);
        }
        prev = next;
        k += 1;
    }
}

// ---------------------------------------------------------------------------
// induced flag map
// ---------------------------------------------------------------------------

/// Data of `f_sharp(sigma)` at one sample point.
struct SharpSample {
    v1: Subspace,
    v2: Subspace,
    dim_r: usize,
    dim_k: usize,
}

fn sharp_at_point(f: &PolyMatrixMap, slice: &AffineSlice, p: &CMat) -> Result<SharpSample> {
    let jet = jet_span_stabilized(f, slice, p)?;
    let q2 = f.target.plane_dim();
    let n2 = f.target.ambient_dim();
    let hom_rows = n2 - q2;
    // R = span of images, K = common kernel of the span matrices
    let basis = jet.span.onb();
    let mut img_cols: Vec<CVec> = Vec::new();
    let mut kernel_rows: Vec<CVec> = Vec::new();
    for b in 0..basis.ncols() {
        let a = linalg::unvectorize(&basis.column(b).into_owned(), hom_rows, q2);
        for j in 0..q2 {
            img_cols.push(a.column(j).into_owned());
        }
        for i in 0..hom_rows {
            kernel_rows.push(a.row(i).transpose());
        }
    }
    let r_sub = if img_cols.is_empty() {
        Subspace::zero(hom_rows)
    } else {
        let mut m = linalg::zeros(hom_rows, img_cols.len());
        for (j, v) in img_cols.iter().enumerate() {
            m.set_column(j, v);
        }
        Subspace::canonicalize(&linalg::column_space(&m))?
    };
    let k_sub = if kernel_rows.is_empty() {
        Subspace::full(q2)
    } else {
        let mut m = linalg::zeros(kernel_rows.len(), q2);
        for (i, v) in kernel_rows.iter().enumerate() {
            for j in 0..q2 {
                m[(i, j)] = v[j];
            }
        }
        Subspace::canonicalize(&linalg::null_space(&m))?
    };
    // ambient lifts
    let v1 = Subspace::canonicalize(&(&jet.e_basis * k_sub.onb()))?;
    let e_amb = Subspace::canonicalize(&jet.e_basis)?;
    let r_amb = if r_sub.dim() == 0 {
        Subspace::zero(n2)
    } else {
        Subspace::canonicalize(&(&jet.d_basis * r_sub.onb()))?
    };
    let v2 = e_amb.sum(&r_amb)?;
    Ok(SharpSample {
        v1,
        v2,
        dim_r: r_sub.dim(),
        dim_k: k_sub.dim(),
    })
}

/// The induced flag `f_sharp(sigma)`: jets at `n_points` interior points
/// of the slice, with the genericity acceptance that all samples agree in
/// the `Gr` dimensions.
pub fn f_sharp<R: Rng + ?Sized>(
    f: &PolyMatrixMap,
    sigma: &FlagPair,
    rng: &mut R,
) -> Result<FlagPair> {
    let slice = AffineSlice::through(&f.source, sigma)?;
    let n_points = 5;
    let mut samples = Vec::new();
    for _ in 0..n_points {
        let p = slice
            .sample_interior(rng, 60)
            .ok_or(Error::PointNotOnSlice)?;
        samples.push(sharp_at_point(f, &slice, &p)?);
    }
    let (dr, dk) = (samples[0].dim_r, samples[0].dim_k);
    if samples.iter().any(|s| s.dim_r != dr || s.dim_k != dk) {
        return Err(Error::DegenerateJet(
            "Gr dimension varies across sampled points".into(),
        ));
    }
    for s in &samples[1..] {
        if s.v1.projector_distance(&samples[0].v1) > 1e-6
            || s.v2.projector_distance(&samples[0].v2) > 1e-6
        {
            return Err(Error::DegenerateJet(
                "flag varies across sampled points".into(),
            ));
        }
    }
    let target_dual = f.target.dual();
    let sample = &samples[0];
    if sample.dim_k == 0 || sample.dim_k == f.target.plane_dim() {
        return Err(Error::DegenerateMap(format!(
            "kernel dimension {} is extremal",
            sample.dim_k
        )));
    }
    let level = target_dual
        .level_of_v1_dim(sample.v1.dim())
        .ok_or_else(|| {
            Error::DegenerateJet(format!(
                "no target level with dim V1 = {}",
                sample.v1.dim()
            ))
        })?;
    match target_dual {
        Dual::Gr { .. } => moduli::make_flag(target_dual, level, sample.v1.clone(), Some(sample.v2.clone())),
        _ => {
            let flag = moduli::make_flag(target_dual, level, sample.v1.clone(), None)?;
            // the R-side must be consistent with the annihilator V2
            let v2 = flag.v2()?;
            if !sample.v2.is_contained_in(&v2, 1e-6) {
                return Err(Error::DegenerateJet(
                    "image side exceeds the annihilator flag".into(),
                ));
            }
            Ok(flag)
        }
    }
}

/// Direct intersection oracle: the minimal flag whose subgrassmannian
/// contains sampled image planes.
pub fn f_sharp_oracle<R: Rng + ?Sized>(
    f: &dyn MapEval,
    source: &DomainSpec,
    sigma: &FlagPair,
    rng: &mut R,
    max_samples: usize,
) -> Result<FlagPair> {
    let slice = AffineSlice::through(source, sigma)?;
    let n2 = f.target().ambient_dim();
    let mut meet: Option<Subspace> = None;
    let mut join = Subspace::zero(n2);
    let mut stable = 0;
    let mut used = 0;
    for _ in 0..max_samples {
        let Some(p) = slice.sample_interior(rng, 60) else {
            break;
        };
        let img = f.eval(&p)?;
        let e = f.target().embed_point(&img)?;
        let new_meet = match &meet {
            None => e.clone(),
            Some(m) => m.intersect(&e)?,
        };
        let new_join = join.sum(&e)?;
        let unchanged = meet
            .as_ref()
            .map(|m| m.dim() == new_meet.dim())
            .unwrap_or(false)
            && new_join.dim() == join.dim();
        meet = Some(new_meet);
        join = new_join;
        used += 1;
        if unchanged {
            stable += 1;
            if stable >= 5 && used >= 10 {
                break;
            }
        } else {
            stable = 0;
        }
    }
    let v1 = meet.ok_or(Error::PointNotOnSlice)?;
    let dual = f.target().dual();
    let level = dual
        .level_of_v1_dim(v1.dim())
        .ok_or_else(|| Error::DegenerateJet(format!("no level for dim {}", v1.dim())))?;
    match dual {
        Dual::Gr { .. } => {
            // pad the join to the flag dimension if sampling left it short
            let want = dual.v2_dim(level).unwrap();
            let v2 = if join.dim() < want {
                moduli::extend_to_dim(&join, want)?
            } else {
                join
            };
            moduli::make_flag(dual, level, v1, Some(v2))
        }
        _ => moduli::make_flag(dual, level, v1, None),
    }
}

// ---------------------------------------------------------------------------
// index sequences
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct IndexSequence {
    /// `(source level, target index)` in increasing level order.
    pub entries: Vec<(String, usize)>,
    #[serde(skip)]
    pub levels: Vec<(Level, usize)>,
}

/// Source moduli levels in increasing order (half levels for type II).
pub fn source_levels(spec: &DomainSpec) -> Vec<Level> {
    let q = spec.rank();
    let mut out = Vec::new();
    for r in 1..q {
        out.push(Level::Int(r));
        if matches!(spec, DomainSpec::TypeII { .. }) {
            out.push(Level::Half(r));
        }
    }
    out
}

/// Target index of a flag: `q' - a` for type I/III targets, `2[n'/2] - a`
/// for type II.
pub fn target_index(target: &DomainSpec, flag: &FlagPair) -> usize {
    let a = flag.v1().dim();
    match target {
        DomainSpec::TypeII { n } => 2 * (n / 2) - a,
        _ => target.rank() - a,
    }
}

/// Compute the full index sequence, resampling flags per level until the
/// genericity protocol accepts (up to 20 retries), and assert strict
/// monotonicity.
pub fn index_sequence(f: &PolyMatrixMap, seed: u64) -> Result<IndexSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dual = f.source.dual();
    let mut entries = Vec::new();
    let mut levels = Vec::new();
    for level in source_levels(&f.source) {
        let mut accepted = None;
        let mut last_err = None;
        for _ in 0..20 {
            let sigma = moduli::random_flag_through_interior(&mut rng, dual, level);
            match f_sharp(f, &sigma, &mut rng) {
                Ok(flag) => {
                    accepted = Some(target_index(&f.target, &flag));
                    break;
                }
                Err(e @ Error::DegenerateMap(_)) => return Err(e),
                Err(e) => last_err = Some(e),
            }
        }
        let idx = accepted.ok_or_else(|| {
            last_err.unwrap_or(Error::DegenerateJet("no generic flag accepted".into()))
        })?;
        entries.push((level.to_string(), idx));
        levels.push((level, idx));
    }
    for w in levels.windows(2) {
        if w[1].1 <= w[0].1 {
            return Err(Error::MonotonicityViolation(format!(
                "i_{} = {} !< i_{} = {}",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    Ok(IndexSequence { entries, levels })
}

// ---------------------------------------------------------------------------
// the V1-projection and its holomorphy classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Holomorphy {
    Holomorphic,
    AntiHolomorphic,
}

/// Chart handle for `f_flat`: evaluates `V1 -> V1'` on isotropic flags.
pub struct FlatMap<'a> {
    pub f: &'a PolyMatrixMap,
    pub level: Level,
    pub verdict: Holomorphy,
    seed: u64,
}

impl<'a> FlatMap<'a> {
    /// Apply on a CR point: the flag is reconstructed from `V1` (type I
    /// uses the Hermitian annihilator, types II/III the bilinear one).
    pub fn apply(&self, v1: &Subspace) -> Result<Subspace> {
        let dual = self.f.source.dual();
        let point = moduli::SigmaPoint::from_v1(dual, self.level, v1.clone())?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let flag = f_sharp(self.f, point.flag(), &mut rng)?;
        Ok(flag.v1().clone())
    }

    /// Apply on a general flag.
    pub fn apply_flag(&self, sigma: &FlagPair) -> Result<Subspace> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let flag = f_sharp(self.f, sigma, &mut rng)?;
        Ok(flag.v1().clone())
    }
}

/// Classification by the leg-dependence test: vary one flag leg at a time
/// through a common interior witness and see which leg moves the image.
/// Type II/III sources are holomorphic with `f_flat = pr' ∘ f_sharp ∘
/// pr^{-1}` directly.
pub fn f_flat_classify<'a>(
    f: &'a PolyMatrixMap,
    level: Level,
    seed: u64,
    samples: usize,
) -> Result<FlatMap<'a>> {
    if !matches!(f.source, DomainSpec::TypeI { .. }) {
        return Ok(FlatMap {
            f,
            level,
            verdict: Holomorphy::Holomorphic,
            seed,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dual = f.source.dual();
    let Level::Int(r) = level else {
        return Err(Error::BadDimension("type I has integer levels".into()));
    };
    // Lemma hypothesis: i_r = i_{r-1} + 1
    let iseq = index_sequence(f, seed ^ 0x5eed)?;
    let pos = iseq
        .levels
        .iter()
        .position(|(l, _)| *l == level)
        .ok_or_else(|| Error::BadDimension("level outside the sequence".into()))?;
    let i_r = iseq.levels[pos].1;
    let i_prev = if pos == 0 { 0 } else { iseq.levels[pos - 1].1 };
    if i_r != i_prev + 1 {
        return Err(Error::RegimeViolation(format!(
            "holomorphy test needs i_r = i_(r-1) + 1, got {i_prev} -> {i_r}"
        )));
    }
    let mut depends_a = false;
    let mut depends_b = false;
    let mut tested = 0;
    while tested < samples {
        // common interior witness plane
        let z = sampling::random_interior_point(&mut rng, &f.source);
        let e = f.source.embed_point(&z)?;
        let (q, _p) = match f.source {
            DomainSpec::TypeI { p, q } => (q, p),
            _ => unreachable!(),
        };
        let a_dim = q - r;
        // shared A inside E
        let coeff = linalg::random_cmat(&mut rng, q, a_dim);
        let Ok(a_leg) = Subspace::canonicalize(&(e.onb() * coeff)) else {
            continue;
        };
        if a_leg.dim() != a_dim {
            continue;
        }
        // two B legs through E with codimension-one intersection pattern
        let b_dim = f.source.dual().v2_dim(level).unwrap();
        let Ok(b1) = extend_random(&mut rng, &e, b_dim) else { continue };
        let Ok(b2) = extend_random(&mut rng, &e, b_dim) else { continue };
        // two A legs sharing a hyperplane
        let coeff = linalg::random_cmat(&mut rng, q, a_dim);
        let Ok(a2) = Subspace::canonicalize(&(e.onb() * coeff)) else {
            continue;
        };
        if a2.dim() != a_dim {
            continue;
        }
        let s11 = moduli::make_flag(dual, level, a_leg.clone(), Some(b1.clone()))?;
        let s12 = moduli::make_flag(dual, level, a_leg.clone(), Some(b2.clone()))?;
        let s21 = moduli::make_flag(dual, level, a2.clone(), Some(b1.clone()))?;
        let (f11, f12, f21) = (
            f_sharp(f, &s11, &mut rng),
            f_sharp(f, &s12, &mut rng),
            f_sharp(f, &s21, &mut rng),
        );
        let (Ok(f11), Ok(f12), Ok(f21)) = (f11, f12, f21) else {
            continue;
        };
        if f11.v1().projector_distance(f12.v1()) > 1e-6 {
            depends_b = true;
        }
        if f11.v1().projector_distance(f21.v1()) > 1e-6 {
            depends_a = true;
        }
        tested += 1;
        if depends_a && depends_b {
            return Err(Error::InconsistentDependence);
        }
    }
    let verdict = match (depends_a, depends_b) {
        (true, false) => Holomorphy::Holomorphic,
        (false, true) => Holomorphy::AntiHolomorphic,
        (true, true) => return Err(Error::InconsistentDependence),
        (false, false) => {
            return Err(Error::DegenerateJet(
                "image flag does not vary with either leg".into(),
            ))
        }
    };
    Ok(FlatMap {
        f,
        level,
        verdict,
        seed,
    })
}

fn extend_random<R: Rng + ?Sized>(rng: &mut R, base: &Subspace, dim: usize) -> Result<Subspace> {
    let mut acc = base.clone();
    let mut guard = 0;
    while acc.dim() < dim {
        let extra = crate::subspace::random_subspace(rng, base.ambient_dim(), 1);
        acc = acc.sum(&extra)?;
        guard += 1;
        if guard > 4 * dim {
            return Err(Error::ChartFailure("extension failed".into()));
        }
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// respects-subgrassmannians report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct RespectEntry {
    pub kind: String,
    pub source_level: String,
    pub samples: usize,
    pub inclusions_passed: usize,
    pub trivial_fit_residual: Option<f64>,
    pub trivial_fit_accepted: Option<bool>,
    pub line_collinearity_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RespectReport {
    pub entries: Vec<RespectEntry>,
    pub all_inclusions_pass: bool,
}

/// Lemma-style verification that `f_flat` maps `Z_tau` into
/// `Z'_{f_sharp(tau)}` (levels `s < r`) and `Q_mu` into `Q'_{f_sharp(mu)}`
/// (`s > r`), plus the trivial-embedding fit of the restriction to a
/// `Z_tau` and a line-image collinearity diagnostic.
pub fn respects_check(
    f: &PolyMatrixMap,
    level: Level,
    seed: u64,
    n_flags: usize,
    n_points: usize,
) -> Result<RespectReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dual = f.source.dual();
    let mut entries = Vec::new();
    let Level::Int(r) = level else {
        return Err(Error::BadDimension("respects_check uses integer levels".into()));
    };
    let mut all_pass = true;

    // -- Z_tau at level s = r - 1 --------------------------------------
    if r >= 2 {
        let s_level = Level::Int(r - 1);
        let mut passed = 0;
        let mut samples = 0;
        let mut fit_pairs: Vec<(Subspace, Subspace)> = Vec::new();
        let mut line_res: Option<f64> = None;
        for _ in 0..n_flags {
            let tau = moduli::random_flag_through_interior(&mut rng, dual, s_level);
            let Ok(tau_img) = f_sharp(f, &tau, &mut rng) else {
                continue;
            };
            // sample sigma in Z_tau: V1 ⊂ tau.V1, V2 ⊃ tau.V2
            for _ in 0..n_points {
                let Some(sigma) = random_flag_inside(&mut rng, &tau, level) else {
                    continue;
                };
                let Ok(img) = f_sharp(f, &sigma, &mut rng) else {
                    continue;
                };
                samples += 1;
                let ok = moduli::z_tau_contains(
                    &tau_img,
                    img.level(),
                    img.v1(),
                )
                .unwrap_or(false);
                if ok {
                    passed += 1;
                } else {
                    all_pass = false;
                }
                fit_pairs.push((sigma.v1().clone(), img.v1().clone()));
            }
            if line_res.is_none() {
                line_res = line_image_residual(f, &tau, level, &mut rng).ok();
            }
        }
        let fit = crate::rigidity::detect_trivial(&fit_pairs);
        entries.push(RespectEntry {
            kind: "Z".into(),
            source_level: s_level.to_string(),
            samples,
            inclusions_passed: passed,
            trivial_fit_residual: fit.as_ref().ok().map(|m| m.residual).or_else(|| match &fit {
                Err(crate::rigidity::TrivialFitError::Reject { residual }) => Some(*residual),
                _ => None,
            }),
            trivial_fit_accepted: Some(fit.is_ok()),
            line_collinearity_residual: line_res,
        });
    }

    // -- Q_mu at level s = r + 1 ----------------------------------------
    let next_level = Level::Int(r + 1);
    if dual.v1_dim(next_level).is_some() {
        let mut passed = 0;
        let mut samples = 0;
        for _ in 0..n_flags {
            let mu = moduli::random_flag_through_interior(&mut rng, dual, next_level);
            let Ok(mu_img) = f_sharp(f, &mu, &mut rng) else {
                continue;
            };
            for _ in 0..n_points {
                let Some(sigma) = random_flag_containing(&mut rng, &mu, level) else {
                    continue;
                };
                let Ok(img) = f_sharp(f, &sigma, &mut rng) else {
                    continue;
                };
                samples += 1;
                let ok =
                    moduli::q_mu_contains(&mu_img, img.level(), img.v1()).unwrap_or(false);
                if ok {
                    passed += 1;
                } else {
                    all_pass = false;
                }
            }
        }
        entries.push(RespectEntry {
            kind: "Q".into(),
            source_level: next_level.to_string(),
            samples,
            inclusions_passed: passed,
            trivial_fit_residual: None,
            trivial_fit_accepted: None,
            line_collinearity_residual: None,
        });
    }

    Ok(RespectReport {
        entries,
        all_inclusions_pass: all_pass,
    })
}

/// A level-`r` flag inside `Z_tau` (i.e. `V1 ⊂ tau.V1`, `V2 ⊃ tau.V2`)
/// whose slice still meets the domain.
pub fn random_flag_inside<R: Rng + ?Sized>(
    rng: &mut R,
    tau: &FlagPair,
    level: Level,
) -> Option<FlagPair> {
    let dual = tau.dual();
    let want = dual.v1_dim(level)?;
    for _ in 0..30 {
        let coeff = linalg::random_cmat(rng, tau.v1().dim(), want);
        let Ok(v1) = Subspace::canonicalize(&(tau.v1().onb() * coeff)) else {
            continue;
        };
        if v1.dim() != want {
            continue;
        }
        let flag = match dual {
            Dual::Gr { .. } => {
                let b_dim = dual.v2_dim(level).unwrap();
                let Ok(v2base) = tau.v2() else { continue };
                let Ok(v2) = extend_random(rng, &v2base, b_dim) else {
                    continue;
                };
                moduli::make_flag(dual, level, v1, Some(v2))
            }
            _ => moduli::make_flag(dual, level, v1, None),
        };
        if let Ok(f) = flag {
            return Some(f);
        }
    }
    None
}

/// A level-`r` flag in `Q_mu` (`V1 ⊃ mu.V1`, `V2 ⊂ mu.V2`).
pub fn random_flag_containing<R: Rng + ?Sized>(
    rng: &mut R,
    mu: &FlagPair,
    level: Level,
) -> Option<FlagPair> {
    let dual = mu.dual();
    let want = dual.v1_dim(level)?;
    let v2mu = mu.v2().ok()?;
    for _ in 0..30 {
        // V1 = mu.V1 + extra directions inside mu.V2 (isotropic for II/III
        // duals is automatic only inside isotropic hulls; retry otherwise)
        let extra_dim = want - mu.v1().dim();
        let coeff = linalg::random_cmat(rng, v2mu.dim(), extra_dim);
        let Ok(extra) = Subspace::canonicalize(&(v2mu.onb() * coeff)) else {
            continue;
        };
        let Ok(v1) = mu.v1().sum(&extra) else { continue };
        if v1.dim() != want {
            continue;
        }
        let flag = match dual {
            Dual::Gr { .. } => {
                let b_dim = dual.v2_dim(level).unwrap();
                // V2 ⊂ mu.V2 of the right dimension containing V1
                let Ok(v2) = shrink_within(rng, &v2mu, &v1, b_dim) else {
                    continue;
                };
                moduli::make_flag(dual, level, v1, Some(v2))
            }
            _ => moduli::make_flag(dual, level, v1, None),
        };
        if let Ok(f) = flag {
            return Some(f);
        }
    }
    None
}

fn shrink_within<R: Rng + ?Sized>(
    rng: &mut R,
    big: &Subspace,
    must: &Subspace,
    dim: usize,
) -> Result<Subspace> {
    let extra = dim - must.dim();
    let coeff = linalg::random_cmat(rng, big.dim(), extra);
    let part = Subspace::canonicalize(&(big.onb() * coeff))?;
    let out = must.sum(&part)?;
    if out.dim() != dim || !out.is_contained_in(big, 1e-7) {
        return Err(Error::ChartFailure("shrink failed".into()));
    }
    Ok(out)
}

/// Collinearity of image points of a pencil in `Z_tau` in Pluecker
/// coordinates: points on a projective line span a 2-dimensional cone, so
/// the third singular value of the stacked coordinates must vanish.
fn line_image_residual<R: Rng + ?Sized>(
    f: &PolyMatrixMap,
    tau: &FlagPair,
    level: Level,
    rng: &mut R,
) -> Result<f64> {
    // pencil: V(t) = A ⊕ <u + t w> inside tau.V1
    let want = tau
        .dual()
        .v1_dim(level)
        .ok_or_else(|| Error::BadDimension("level".into()))?;
    let coeff = linalg::random_cmat(rng, tau.v1().dim(), want + 1);
    let hull = Subspace::canonicalize(&(tau.v1().onb() * coeff))?;
    if hull.dim() != want + 1 {
        return Err(Error::ChartFailure("pencil hull".into()));
    }
    let coeff = linalg::random_cmat(rng, hull.dim(), want - 1);
    let base = Subspace::canonicalize(&(hull.onb() * coeff))?;
    if base.dim() != want - 1 {
        return Err(Error::ChartFailure("pencil base".into()));
    }
    let mut images = Vec::new();
    for tval in [-0.8, -0.3, 0.2, 0.6, 1.1] {
        // point of the pencil
        let u: CVec = hull.onb().column(want - 1).into_owned();
        let w: CVec = hull.onb().column(want).into_owned();
        let dir = &u + &w * c(tval);
        let line = Subspace::from_cols(hull.ambient_dim(), &[dir])?;
        let v1 = base.sum(&line)?;
        let flag = match tau.dual() {
            Dual::Gr { .. } => {
                let b_dim = tau.dual().v2_dim(level).unwrap();
                let v2 = extend_random(rng, &tau.v2()?, b_dim)?;
                moduli::make_flag(tau.dual(), level, v1, Some(v2))?
            }
            _ => moduli::make_flag(tau.dual(), level, v1, None)?,
        };
        let img = f_sharp(f, &flag, rng)?;
        images.push(img.v1().clone());
    }
    // Pluecker vectors of the images
    let a = images[0].dim();
    let n2 = images[0].ambient_dim();
    let sets = combinations_list(n2, a);
    let mut mat = linalg::zeros(sets.len(), images.len());
    for (col, w) in images.iter().enumerate() {
        for (rowi, set) in sets.iter().enumerate() {
            let mut minor = linalg::zeros(a, a);
            for (i, &r) in set.iter().enumerate() {
                for j in 0..a {
                    minor[(i, j)] = w.onb()[(r, j)];
                }
            }
            mat[(rowi, col)] = minor.determinant();
        }
    }
    // normalize columns
    for col in 0..mat.ncols() {
        let norm = mat.column(col).norm();
        if norm > 0.0 {
            for row in 0..mat.nrows() {
                mat[(row, col)] /= c(norm);
            }
        }
    }
    let sv = linalg::singular_values(&mat);
    Ok(if sv.len() >= 3 { sv[2] } else { 0.0 })
}

fn combinations_list(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{diagonal_map, identity_map, transpose_map};

    #[test]
    fn slice_dimensions_match_characteristic_ranks() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        // type I: dim X_sigma = r (p - q + r)
        let spec = DomainSpec::type_i(3, 2);
        let sigma = moduli::random_flag_through_interior(&mut rng, spec.dual(), Level::Int(1));
        let slice = AffineSlice::through(&spec, &sigma).unwrap();
        assert_eq!(slice.dim(), 1 * (3 - 2 + 1));
        // type III: r(r+1)/2
        let spec = DomainSpec::type_iii(3);
        let sigma = moduli::random_flag_through_interior(&mut rng, spec.dual(), Level::Int(1));
        let slice = AffineSlice::through(&spec, &sigma).unwrap();
        assert_eq!(slice.dim(), 1);
        let sigma = moduli::random_flag_through_interior(&mut rng, spec.dual(), Level::Int(2));
        let slice = AffineSlice::through(&spec, &sigma).unwrap();
        assert_eq!(slice.dim(), 3);
        // type II: r(2r-1)
        let spec = DomainSpec::type_ii(4);
        let sigma = moduli::random_flag_through_interior(&mut rng, spec.dual(), Level::Int(1));
        let slice = AffineSlice::through(&spec, &sigma).unwrap();
        assert_eq!(slice.dim(), 1);
    }

    #[test]
    fn slice_points_stay_on_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(92);
        let spec = DomainSpec::type_i(3, 2);
        let sigma = moduli::random_flag_through_interior(&mut rng, spec.dual(), Level::Int(1));
        let slice = AffineSlice::through(&spec, &sigma).unwrap();
        let pred = spec.characteristic_slice(&sigma).unwrap();
        for _ in 0..10 {
            let z = slice.sample_interior(&mut rng, 40).unwrap();
            assert!(pred.contains(&z).unwrap());
        }
    }

    #[test]
    fn identity_jets_stabilize_at_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(93);
        let spec = DomainSpec::type_i(2, 2);
        let f = identity_map(spec);
        let sigma = moduli::random_flag_through_interior(&mut rng, spec.dual(), Level::Int(1));
        let slice = AffineSlice::through(&spec, &sigma).unwrap();
        let p = slice.sample_interior(&mut rng, 40).unwrap();
        let jet = jet_span_stabilized(&f, &slice, &p).unwrap();
        assert_eq!(jet.stabilized_at, Some(1));
        assert_eq!(jet.span.dim(), slice.dim());
        // monotonicity: order-1 span is contained in order-2
        let j1 = jet_span(&f, &slice, &p, 1).unwrap();
        let j2 = jet_span(&f, &slice, &p, 2).unwrap();
        assert!(j1.span.is_contained_in(&j2.span, 1e-7));
    }

    #[test]
    fn constant_map_jets_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(94);
        let spec = DomainSpec::type_i(2, 2);
        // constant map to 0 in a bigger target
        let n = 4;
        let entries = vec![MPoly::zero(n); 9];
        let f = PolyMatrixMap::new(spec, DomainSpec::type_i(3, 3), entries, false).unwrap();
        let sigma = moduli::random_flag_through_interior(&mut rng, spec.dual(), Level::Int(1));
        let slice = AffineSlice::through(&spec, &sigma).unwrap();
        let p = slice.sample_interior(&mut rng, 40).unwrap();
        for k in 1..=3 {
            let jet = jet_span(&f, &slice, &p, k).unwrap();
            assert_eq!(jet.span.dim(), 0);
        }
        // and f_sharp flags the degeneracy
        assert!(matches!(
            f_sharp(&f, &sigma, &mut rng),
            Err(Error::DegenerateMap(_))
        ));
    }

    #[test]
    fn identity_sharp_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(95);
        for spec in [DomainSpec::type_i(2, 2), DomainSpec::type_i(3, 2)] {
            let f = identity_map(spec);
            let sigma =
                moduli::random_flag_through_interior(&mut rng, spec.dual(), Level::Int(1));
            let img = f_sharp(&f, &sigma, &mut rng).unwrap();
            assert!(img.eq_within(&sigma, 1e-6));
        }
    }

    #[test]
    fn index_sequence_identity_and_diagonal() {
        let f = identity_map(DomainSpec::type_i(3, 3));
        let seq = index_sequence(&f, 7).unwrap();
        assert_eq!(
            seq.levels.iter().map(|e| e.1).collect::<Vec<_>>(),
            vec![1, 2]
        );
        // diagonal map with constant h: the h-graph line is common to all
        // image planes, so i_1 = 1
        let h = vec![MPoly::constant(4, c(0.3))];
        let f = diagonal_map(2, 2, 1, 1, h).unwrap();
        let seq = index_sequence(&f, 8).unwrap();
        assert_eq!(seq.levels[0].1, 1);
        // with nonconstant h the h-entry varies along rank-1 slices and the
        // minimal hull grows: i_1 = 2 (both jet and intersection routes)
        let h = vec![MPoly::var(4, 0).scale(c(0.3))];
        let f = diagonal_map(2, 2, 1, 1, h).unwrap();
        let seq = index_sequence(&f, 8).unwrap();
        assert_eq!(seq.levels[0].1, 2);
    }

    #[test]
    fn oracle_agrees_with_jets_on_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(96);
        let spec = DomainSpec::type_i(3, 2);
        let f = identity_map(spec);
        let sigma = moduli::random_flag_through_interior(&mut rng, spec.dual(), Level::Int(1));
        let a = f_sharp(&f, &sigma, &mut rng).unwrap();
        let b = f_sharp_oracle(&f, &spec, &sigma, &mut rng, 40).unwrap();
        assert!(a.v1().projector_distance(b.v1()) < 1e-8);
        assert!(a.v2().unwrap().projector_distance(&b.v2().unwrap()) < 1e-8);
    }

    #[test]
    fn holomorphy_of_identity_and_transpose() {
        let f = identity_map(DomainSpec::type_i(3, 3));
        let flat = f_flat_classify(&f, Level::Int(1), 11, 8).unwrap();
        assert_eq!(flat.verdict, Holomorphy::Holomorphic);
        let f = transpose_map(3, 3);
        let flat = f_flat_classify(&f, Level::Int(1), 12, 8).unwrap();
        assert_eq!(flat.verdict, Holomorphy::AntiHolomorphic);
    }
}
