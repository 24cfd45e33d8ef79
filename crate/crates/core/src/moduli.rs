//! Flag moduli of characteristic subspaces: pairs `(V1, V2)` with the
//! per-type dimension and isotropy constraints, the `V1`-projection, the
//! subgrassmannians `Z_tau` / `Q_mu`, the isotropic locus `Sigma_r`, and
//! chain connectivity.
//!
//! Levels follow the uniform bookkeeping `dim V1 = q - r` (Gr), `n - r`
//! (LGr) and `2([n/2] - level)` (OGr, where half-integer levels give the
//! odd dimensions).

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{BilinearForm, Form, HermitianForm};
use crate::linalg::{self, CVec};
use crate::sampling;
use crate::subspace::Subspace;

/// Compact dual descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "dual")]
pub enum Dual {
    /// Grassmannian `Gr(q, C^{p+q})`, `q <= p`.
    Gr { q: usize, p: usize },
    /// Orthogonal Grassmannian `OGr_n` in `C^{2n}` with the form `S_n`.
    OGr { n: usize },
    /// Lagrangian Grassmannian `LGr_n` in `C^{2n}` with the form `J_n`.
    LGr { n: usize },
}

impl Dual {
    pub fn ambient_dim(&self) -> usize {
        match *self {
            Dual::Gr { q, p } => p + q,
            Dual::OGr { n } | Dual::LGr { n } => 2 * n,
        }
    }

    /// Rank of the dual as a symmetric space.
    pub fn rank(&self) -> usize {
        match *self {
            Dual::Gr { q, .. } => q,
            Dual::OGr { n } => n / 2,
            Dual::LGr { n } => n,
        }
    }

    /// Dimension of the planes that are points of the dual.
    pub fn plane_dim(&self) -> usize {
        match *self {
            Dual::Gr { q, .. } => q,
            Dual::OGr { n } | Dual::LGr { n } => n,
        }
    }

    pub fn hermitian_form(&self) -> HermitianForm {
        match *self {
            Dual::Gr { q, p } => HermitianForm::new(p, q),
            Dual::OGr { n } | Dual::LGr { n } => HermitianForm::new(n, n),
        }
    }

    pub fn bilinear_form(&self) -> Option<BilinearForm> {
        match *self {
            Dual::Gr { .. } => None,
            Dual::OGr { n } => Some(BilinearForm::symmetric(n)),
            Dual::LGr { n } => Some(BilinearForm::antisymmetric(n)),
        }
    }

    pub fn supports_half_levels(&self) -> bool {
        matches!(self, Dual::OGr { .. })
    }

    /// `dim V1` of a flag at the given level; `None` when the level is out
    /// of range for this dual.
    pub fn v1_dim(&self, level: Level) -> Option<usize> {
        match *self {
            Dual::Gr { q, .. } => match level {
                Level::Int(0) => Some(q),
                Level::Int(r) if r < q => Some(q - r),
                _ => None,
            },
            Dual::LGr { n } => match level {
                Level::Int(0) => Some(n),
                Level::Int(r) if r < n => Some(n - r),
                _ => None,
            },
            Dual::OGr { n } => {
                let qh = n / 2;
                match level {
                    Level::Int(0) => Some(n),
                    Level::Int(r) if r < qh => Some(2 * (qh - r)),
                    Level::Half(r) if r >= 1 && r < qh => Some(2 * (qh - r) - 1),
                    _ => None,
                }
            }
        }
    }

    /// `dim V2` of a flag at the given level.
    pub fn v2_dim(&self, level: Level) -> Option<usize> {
        match *self {
            Dual::Gr { q, p } => match level {
                Level::Int(0) => Some(q),
                Level::Int(r) if r < q => Some(p + r),
                _ => None,
            },
            _ => self
                .v1_dim(level)
                .map(|a| self.ambient_dim() - a),
        }
    }

    /// Level whose `V1`-dimension equals `dim`, if any.
    pub fn level_of_v1_dim(&self, dim: usize) -> Option<Level> {
        match *self {
            Dual::Gr { q, .. } => {
                if dim == q {
                    Some(Level::Int(0))
                } else if dim >= 1 && dim < q {
                    Some(Level::Int(q - dim))
                } else {
                    None
                }
            }
            Dual::LGr { n } => {
                if dim == n {
                    Some(Level::Int(0))
                } else if dim >= 1 && dim < n {
                    Some(Level::Int(n - dim))
                } else {
                    None
                }
            }
            Dual::OGr { n } => {
                let qh = n / 2;
                if dim == n {
                    return Some(Level::Int(0));
                }
                if dim == 0 || dim >= 2 * qh {
                    return None;
                }
                if dim % 2 == 0 {
                    Some(Level::Int(qh - dim / 2))
                } else {
                    Some(Level::Half(qh - (dim + 1) / 2))
                }
            }
        }
    }
}

/// Integer or half-integer moduli level; `Half(r)` denotes `r + 1/2` and
/// only occurs for type II duals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    Int(usize),
    Half(usize),
}

impl Level {
    /// Twice the level value, for ordering.
    pub fn doubled(&self) -> usize {
        match *self {
            Level::Int(r) => 2 * r,
            Level::Half(r) => 2 * r + 1,
        }
    }
}

impl PartialOrd for Level {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.doubled().cmp(&other.doubled()))
    }
}

impl Ord for Level {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.doubled().cmp(&other.doubled())
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Level::Int(r) => write!(f, "{r}"),
            Level::Half(r) => write!(f, "{r}.5"),
        }
    }
}

/// A moduli point: the flag `(V1, V2)`.  Types II/III store only `V1` and
/// reconstruct `V2` as the annihilator, so the `V2 = perp(V1)` invariant
/// holds by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlagPair {
    dual: Dual,
    level: Level,
    v1: Subspace,
    v2: Option<Subspace>,
}

impl FlagPair {
    pub fn dual(&self) -> Dual {
        self.dual
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn v1(&self) -> &Subspace {
        &self.v1
    }

    pub fn v2(&self) -> Result<Subspace> {
        match (&self.v2, self.dual.bilinear_form()) {
            (Some(v2), _) => Ok(v2.clone()),
            (None, Some(b)) => self.v1.perp(&Form::Bilinear(b)),
            (None, None) => Err(Error::InvalidFlag("type I flag without V2".into())),
        }
    }

    pub fn eq_within(&self, other: &FlagPair, tol: f64) -> bool {
        if self.dual != other.dual || self.level != other.level {
            return false;
        }
        if self.v1.projector_distance(&other.v1) > tol {
            return false;
        }
        match (self.v2(), other.v2()) {
            (Ok(a), Ok(b)) => a.projector_distance(&b) <= tol,
            _ => false,
        }
    }
}

/// Construct a flag, validating dimensions and isotropy.  For type I the
/// caller supplies `V2` (except at level 0 where `V2 = V1`); for types
/// II/III `V2` is the annihilator and must not be supplied.
pub fn make_flag(dual: Dual, level: Level, v1: Subspace, v2: Option<Subspace>) -> Result<FlagPair> {
    let want = dual
        .v1_dim(level)
        .ok_or_else(|| Error::BadDimension(format!("level {level} invalid for {dual:?}")))?;
    if v1.ambient_dim() != dual.ambient_dim() {
        return Err(Error::BadDimension(format!(
            "V1 ambient {} vs dual ambient {}",
            v1.ambient_dim(),
            dual.ambient_dim()
        )));
    }
    if v1.dim() != want {
        return Err(Error::BadDimension(format!(
            "dim V1 = {} but level {level} of {dual:?} needs {want}",
            v1.dim()
        )));
    }
    if let Some(b) = dual.bilinear_form() {
        let form = Form::Bilinear(b);
        if !v1.is_isotropic(&form) {
            let res = linalg::max_abs(&form.gram(v1.onb()));
            return Err(Error::NotIsotropic(res));
        }
        if let Some(v2) = v2 {
            let perp = v1.perp(&form)?;
            if v2.projector_distance(&perp) > 1e-8 {
                return Err(Error::InvalidFlag(
                    "supplied V2 is not the annihilator of V1".into(),
                ));
            }
        }
        return Ok(FlagPair {
            dual,
            level,
            v1,
            v2: None,
        });
    }
    // type I
    let v2 = match (level, v2) {
        (Level::Int(0), None) => v1.clone(),
        (_, Some(v2)) => v2,
        (_, None) => return Err(Error::InvalidFlag("type I flag requires V2".into())),
    };
    let want2 = dual.v2_dim(level).unwrap();
    if v2.ambient_dim() != dual.ambient_dim() || v2.dim() != want2 {
        return Err(Error::BadDimension(format!(
            "dim V2 = {} but level {level} of {dual:?} needs {want2}",
            v2.dim()
        )));
    }
    if !v1.is_contained_in(&v2, 1e-8) {
        return Err(Error::InvalidFlag("V1 is not contained in V2".into()));
    }
    Ok(FlagPair {
        dual,
        level,
        v1,
        v2: Some(v2),
    })
}

/// A point of the CR locus: a flag whose `V1` is isotropic for the
/// indefinite Hermitian form.  `V1` determines the flag: for type I the
/// annihilator of `V1` is the canonical `V2`.
#[derive(Debug, Clone)]
pub struct SigmaPoint {
    flag: FlagPair,
}

impl SigmaPoint {
    pub fn from_v1(dual: Dual, level: Level, v1: Subspace) -> Result<SigmaPoint> {
        let h = Form::Hermitian(dual.hermitian_form());
        if !v1.is_isotropic(&h) {
            let res = linalg::max_abs(&h.gram(v1.onb()));
            return Err(Error::NotIsotropic(res));
        }
        let flag = if dual.bilinear_form().is_some() {
            make_flag(dual, level, v1, None)?
        } else {
            let v2 = v1.perp(&h)?;
            make_flag(dual, level, v1, Some(v2))?
        };
        Ok(SigmaPoint { flag })
    }

    pub fn flag(&self) -> &FlagPair {
        &self.flag
    }
}

/// The projection `pr(V1, V2) = V1`.
pub fn pr_project(flag: &FlagPair) -> &Subspace {
    flag.v1()
}

/// Membership of `W` in `Z_tau` inside the level-`r` projection: `W` is a
/// `D_r`-point contained in `tau.V1`.
pub fn z_tau_contains(tau: &FlagPair, r: Level, w: &Subspace) -> Result<bool> {
    if tau.level() >= r {
        return Err(Error::LevelOrderViolation(format!(
            "Z_tau requires tau level {} < {}",
            tau.level(),
            r
        )));
    }
    let want = tau
        .dual()
        .v1_dim(r)
        .ok_or_else(|| Error::BadDimension(format!("level {r} invalid")))?;
    if w.dim() != want {
        return Err(Error::BadDimension(format!(
            "W has dim {}, D_{r} needs {want}",
            w.dim()
        )));
    }
    Ok(w.is_contained_in(tau.v1(), 1e-8))
}

/// Membership of `W` in `Q_mu`: `mu.V1 ⊆ W ⊆ mu.V2`.
pub fn q_mu_contains(mu: &FlagPair, r: Level, w: &Subspace) -> Result<bool> {
    if mu.level() <= r {
        return Err(Error::LevelOrderViolation(format!(
            "Q_mu requires mu level {} > {}",
            mu.level(),
            r
        )));
    }
    let want = mu
        .dual()
        .v1_dim(r)
        .ok_or_else(|| Error::BadDimension(format!("level {r} invalid")))?;
    if w.dim() != want {
        return Err(Error::BadDimension(format!(
            "W has dim {}, D_{r} needs {want}",
            w.dim()
        )));
    }
    Ok(mu.v1().is_contained_in(w, 1e-8) && w.is_contained_in(&mu.v2()?, 1e-8))
}

/// Membership of `W` in `Sigma_r`: the indefinite form vanishes on `W`.
/// `W` must have the `D_r` dimension and satisfy the dual's bilinear
/// isotropy (types II/III).
pub fn sigma_contains(dual: Dual, r: Level, w: &Subspace) -> Result<bool> {
    let want = dual
        .v1_dim(r)
        .ok_or_else(|| Error::BadDimension(format!("level {r} invalid for {dual:?}")))?;
    if w.dim() != want || w.ambient_dim() != dual.ambient_dim() {
        return Err(Error::BadDimension(format!(
            "W has dim {} in C^{}, D_{r} of {dual:?} needs {want} in C^{}",
            w.dim(),
            w.ambient_dim(),
            dual.ambient_dim()
        )));
    }
    if let Some(b) = dual.bilinear_form() {
        let form = Form::Bilinear(b);
        if !w.is_isotropic(&form) {
            let res = linalg::max_abs(&form.gram(w.onb()));
            return Err(Error::NotIsotropic(res));
        }
    }
    Ok(w.is_isotropic(&Form::Hermitian(dual.hermitian_form())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainMode {
    Z,
    Q,
}

/// Connect two `D_r` points by a chain of subgrassmannians (Lemma-style
/// construction: walk one dimension at a time, keeping each intermediate
/// point isotropic for the dual's bilinear form).
///
/// Mode `Z` returns flags one level below (`W_i = V_i + V_{i+1}`); mode `Q`
/// returns flags one level above (`V1 = V_i ∩ V_{i+1}`).  Consecutive
/// subgrassmannians meet and the endpoints contain `a` resp. `b`.
pub fn chain_connect(
    dual: Dual,
    r: Level,
    a: &Subspace,
    b: &Subspace,
    mode: ChainMode,
) -> Result<Vec<FlagPair>> {
    let want = dual
        .v1_dim(r)
        .ok_or_else(|| Error::BadDimension(format!("level {r} invalid for {dual:?}")))?;
    if a.dim() != want || b.dim() != want {
        return Err(Error::BadDimension(format!(
            "chain endpoints must be D_{r} points of dim {want}"
        )));
    }
    let bilinear = dual.bilinear_form().map(Form::Bilinear);
    // Walk a -> b through points of D_r whose consecutive intersections
    // have codimension one.
    let mut path = vec![a.clone()];
    let mut current = a.clone();
    let mut guard = 0;
    while current.projector_distance(b) > 1e-9 {
        guard += 1;
        if guard > 4 * want + 8 {
            return Err(Error::ChartFailure("chain walk failed to converge".into()));
        }
        let meet = current.intersect(b)?;
        if meet.dim() == want {
            // same subspace numerically
            break;
        }
        // choose a vector of b outside current
        let bvec = pick_outside_vector(b, &current);
        // hyperplane of `current` containing `meet`, inside the kernel of
        // the bilinear pairing with bvec so the new point stays isotropic
        let hyper = hyperplane_containing(&current, &meet, bilinear.as_ref(), &bvec)?;
        let next = hyper.sum(&Subspace::from_cols(current.ambient_dim(), &[bvec])?)?;
        debug_assert_eq!(next.dim(), want);
        path.push(next.clone());
        current = next;
    }
    if path.len() == 1 {
        return Ok(Vec::new());
    }
    let mut chain = Vec::new();
    for pair in path.windows(2) {
        let (v, w) = (&pair[0], &pair[1]);
        match mode {
            ChainMode::Z => {
                let sum = v.sum(w)?;
                let tau_level = dual
                    .level_of_v1_dim(sum.dim())
                    .ok_or_else(|| Error::BadDimension("no level for chain sum".into()))?;
                let flag = match dual {
                    Dual::Gr { .. } => {
                        let v2 = extend_to_dim(&sum, dual.v2_dim(tau_level).unwrap())?;
                        make_flag(dual, tau_level, sum, Some(v2))?
                    }
                    _ => make_flag(dual, tau_level, sum, None)?,
                };
                chain.push(flag);
            }
            ChainMode::Q => {
                let meet = v.intersect(w)?;
                let mu_level = dual
                    .level_of_v1_dim(meet.dim())
                    .ok_or_else(|| Error::BadDimension("no level for chain meet".into()))?;
                let flag = match dual {
                    Dual::Gr { .. } => {
                        let sum = v.sum(w)?;
                        let v2 = extend_to_dim(&sum, dual.v2_dim(mu_level).unwrap())?;
                        make_flag(dual, mu_level, meet, Some(v2))?
                    }
                    _ => make_flag(dual, mu_level, meet, None)?,
                };
                chain.push(flag);
            }
        }
    }
    Ok(chain)
}

/// Basis vector of `b` with the largest component outside `sub`.
fn pick_outside_vector(b: &Subspace, sub: &Subspace) -> CVec {
    let mut best: Option<(f64, CVec)> = None;
    for j in 0..b.dim() {
        let v: CVec = b.onb().column(j).into_owned();
        let proj = sub.onb() * (sub.onb().adjoint() * &v);
        let res = (&v - proj).norm();
        if best.as_ref().map(|(r, _)| res > *r).unwrap_or(true) {
            best = Some((res, v));
        }
    }
    best.expect("nonempty basis").1
}

/// A hyperplane of `space` containing `must` and (when a form is given)
/// annihilating `bvec` under the bilinear pairing.
fn hyperplane_containing(
    space: &Subspace,
    must: &Subspace,
    form: Option<&Form>,
    bvec: &CVec,
) -> Result<Subspace> {
    let k = space.dim();
    if let Some(form) = form {
        // kernel of v -> form(bvec, v) restricted to `space`
        let b = Subspace::from_cols(space.ambient_dim(), &[bvec.clone()])?;
        let rows = form.annihilator_rows(b.onb()) * space.onb();
        let ns = linalg::null_space(&rows);
        if ns.ncols() >= k - 1 {
            let sub = Subspace::canonicalize(&(space.onb() * ns.columns(0, ns.ncols()).into_owned()))?;
            if sub.dim() == k {
                // the pairing vanishes on all of space: any hyperplane
                // containing `must` works
                return extend_within(space, must, k - 1);
            }
            if must.is_contained_in(&sub, 1e-8) {
                return Ok(sub);
            }
            // `must` is automatically inside the kernel when both sides lie
            // in an isotropic chain; fall through to the generic extension
            // only if that fails numerically.
            return extend_within(&sub.sum(must)?, must, k - 1);
        }
        Err(Error::ChartFailure("degenerate pairing in chain step".into()))
    } else {
        extend_within(space, must, k - 1)
    }
}

/// Extend `must` to a `target`-dimensional subspace of `space`.
fn extend_within(space: &Subspace, must: &Subspace, target: usize) -> Result<Subspace> {
    let mut acc = must.clone();
    for j in 0..space.dim() {
        if acc.dim() >= target {
            break;
        }
        let v: CVec = space.onb().column(j).into_owned();
        let proj = acc.onb() * (acc.onb().adjoint() * &v);
        if (&v - proj).norm() > 1e-6 {
            acc = acc.sum(&Subspace::from_cols(space.ambient_dim(), &[v])?)?;
        }
    }
    if acc.dim() != target {
        return Err(Error::ChartFailure("cannot extend inside space".into()));
    }
    Ok(acc)
}

/// Extend a subspace to the given dimension with standard basis vectors.
pub fn extend_to_dim(sub: &Subspace, target: usize) -> Result<Subspace> {
    let n = sub.ambient_dim();
    let mut acc = sub.clone();
    for i in 0..n {
        if acc.dim() >= target {
            break;
        }
        let mut v = CVec::zeros(n);
        v[i] = Complex64::new(1.0, 0.0);
        if !acc.contains_vector(&v, 1e-6) {
            acc = acc.sum(&Subspace::from_cols(n, &[v])?)?;
        }
    }
    if acc.dim() != target {
        return Err(Error::ChartFailure("cannot extend to target dimension".into()));
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// samplers
// ---------------------------------------------------------------------------

fn reference_null_vectors(dual: Dual, k: usize) -> Vec<CVec> {
    match dual {
        Dual::Gr { q, p } => sampling::gr_null_basis(p, q, k),
        Dual::LGr { n } => sampling::lgr_null_basis(n, k),
        Dual::OGr { n } => sampling::ogr_null_basis(n, k),
    }
}

fn random_isometry<R: Rng + ?Sized>(rng: &mut R, dual: Dual, scale: f64) -> linalg::CMat {
    match dual {
        Dual::Gr { q, p } => sampling::random_su_pq(rng, p, q, scale),
        Dual::OGr { n } => sampling::random_so(rng, n, scale),
        Dual::LGr { n } => sampling::random_sp(rng, n, scale),
    }
}

/// Random point of `Sigma_r`: a random isometry applied to the reference
/// null basis.
pub fn random_sigma_point<R: Rng + ?Sized>(rng: &mut R, dual: Dual, level: Level) -> SigmaPoint {
    let a = dual.v1_dim(level).expect("valid level");
    let refs = reference_null_vectors(dual, a);
    let g = random_isometry(rng, dual, 0.6);
    let v1 = Subspace::from_cols(dual.ambient_dim(), &refs)
        .and_then(|s| s.map(&g))
        .expect("sigma sample");
    SigmaPoint::from_v1(dual, level, v1).expect("reference null basis stays isotropic")
}

/// Random flag whose slice meets the domain: `V1` inside the plane of a
/// random interior point.
pub fn random_flag_through_interior<R: Rng + ?Sized>(
    rng: &mut R,
    dual: Dual,
    level: Level,
) -> FlagPair {
    let spec = match dual {
        Dual::Gr { q, p } => crate::domains::DomainSpec::type_i(p, q),
        Dual::OGr { n } => crate::domains::DomainSpec::type_ii(n),
        Dual::LGr { n } => crate::domains::DomainSpec::type_iii(n),
    };
    let a = dual.v1_dim(level).expect("valid level");
    loop {
        let z = sampling::random_interior_point(rng, &spec);
        let e = spec.embed_point(&z).expect("interior plane");
        // random a-dimensional subspace of the plane
        let coeff = linalg::random_cmat(rng, e.dim(), a);
        let v1 = match Subspace::canonicalize(&(e.onb() * coeff)) {
            Ok(s) if s.dim() == a => s,
            _ => continue,
        };
        let flag = match dual {
            Dual::Gr { .. } => {
                let b = dual.v2_dim(level).unwrap();
                // V2 = E + random directions
                let mut v2 = e.clone();
                while v2.dim() < b {
                    let extra = crate::subspace::random_subspace(rng, dual.ambient_dim(), 1);
                    v2 = match v2.sum(&extra) {
                        Ok(s) => s,
                        Err(_) => continue,
                    };
                }
                make_flag(dual, level, v1, Some(v2))
            }
            _ => make_flag(dual, level, v1, None),
        };
        if let Ok(f) = flag {
            return f;
        }
    }
}

/// Random flag in the stratum moduli `D_level(S_k)`: reference flag built
/// from a null block plus definite blocks, moved by a random isometry.
pub fn random_stratum_flag<R: Rng + ?Sized>(
    rng: &mut R,
    dual: Dual,
    level: Level,
    k: usize,
) -> Result<FlagPair> {
    let rank = dual.rank();
    let r_val = match level {
        Level::Int(r) => r,
        Level::Half(r) => r,
    };
    if k < r_val || k > rank {
        return Err(Error::LevelOrderViolation(format!(
            "stratum {k} needs level <= k <= rank {rank}"
        )));
    }
    let n_amb = dual.ambient_dim();
    let g = random_isometry(rng, dual, 0.5);
    match dual {
        Dual::Gr { q, p } => {
            let Level::Int(r) = level else {
                return Err(Error::BadDimension("half level on type I".into()));
            };
            // V1 = N0 (q-k null pairs) + positive block e_{q-k+1..q-r}
            let mut cols = sampling::gr_null_basis(p, q, q - k);
            for i in (q - k)..(q - r) {
                let mut v = CVec::zeros(n_amb);
                v[i] = Complex64::new(1.0, 0.0);
                cols.push(v);
            }
            let v1 = Subspace::from_cols(n_amb, &cols)?.map(&g)?;
            // V2 = V1 + positive tail + negative block avoiding N0 partners
            let mut cols2 = cols;
            for i in (q - r)..q {
                let mut v = CVec::zeros(n_amb);
                v[i] = Complex64::new(1.0, 0.0);
                cols2.push(v);
            }
            for j in 0..(p + r - q) {
                let mut v = CVec::zeros(n_amb);
                v[q + (q - k) + j] = Complex64::new(1.0, 0.0);
                cols2.push(v);
            }
            let v2 = Subspace::from_cols(n_amb, &cols2)?.map(&g)?;
            make_flag(dual, level, v1, Some(v2))
        }
        Dual::LGr { n } => {
            let Level::Int(r) = level else {
                return Err(Error::BadDimension("half level on type III".into()));
            };
            let mut cols = sampling::lgr_null_basis(n, n - k);
            for i in (n - k)..(n - r) {
                let mut v = CVec::zeros(n_amb);
                v[i] = Complex64::new(1.0, 0.0);
                cols.push(v);
            }
            let v1 = Subspace::from_cols(n_amb, &cols)?.map(&g)?;
            make_flag(dual, level, v1, None)
        }
        Dual::OGr { n } => {
            let qh = n / 2;
            let a = dual
                .v1_dim(level)
                .ok_or_else(|| Error::BadDimension(format!("level {level} invalid")))?;
            let null_count = 2 * (qh - k);
            let mut cols = sampling::ogr_null_basis(n, null_count);
            let mut i = null_count; // first-block indices not used by the null pairs
            while cols.len() < a {
                let mut v = CVec::zeros(n_amb);
                v[i] = Complex64::new(1.0, 0.0);
                cols.push(v);
                i += 1;
            }
            let v1 = Subspace::from_cols(n_amb, &cols)?.map(&g)?;
            make_flag(dual, level, v1, None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lgr_flag_from_line() {
        // LGr_2, r = 1, V1 = span{e1}: any line is J-isotropic, V2 has dim 3
        let dual = Dual::LGr { n: 2 };
        let v1 = Subspace::coordinate(4, &[0]);
        let flag = make_flag(dual, Level::Int(1), v1, None).unwrap();
        assert_eq!(flag.v2().unwrap().dim(), 3);
    }

    #[test]
    fn ogr_flag_dimension_pattern() {
        // OGr_4, r = 1: dim V1 = 2(q-r) = 2 with S(V1,V1)=0
        let dual = Dual::OGr { n: 4 };
        let cols = sampling::ogr_null_basis(4, 2);
        let v1 = Subspace::from_cols(8, &cols).unwrap();
        let flag = make_flag(dual, Level::Int(1), v1, None).unwrap();
        assert_eq!(flag.v2().unwrap().dim(), 6);
        // half level: dim V1 = 1
        assert_eq!(dual.v1_dim(Level::Half(1)), Some(1));
    }

    #[test]
    fn type_i_containment_violation() {
        let dual = Dual::Gr { q: 2, p: 3 };
        let v1 = Subspace::coordinate(5, &[0]);
        let v2 = Subspace::coordinate(5, &[1, 2, 3, 4]);
        assert!(matches!(
            make_flag(dual, Level::Int(1), v1, Some(v2)),
            Err(Error::InvalidFlag(_))
        ));
    }

    #[test]
    fn sigma_point_roundtrip_is_injective() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for (dual, level) in [
            (Dual::Gr { q: 2, p: 3 }, Level::Int(1)),
            (Dual::LGr { n: 3 }, Level::Int(1)),
            (Dual::OGr { n: 4 }, Level::Int(1)),
            (Dual::OGr { n: 4 }, Level::Half(1)),
        ] {
            for _ in 0..50 {
                let s = random_sigma_point(&mut rng, dual, level);
                let v1 = pr_project(s.flag()).clone();
                let rebuilt = SigmaPoint::from_v1(dual, level, v1.clone()).unwrap();
                assert!(rebuilt.flag().eq_within(s.flag(), 1e-8));
                assert!(sigma_contains(dual, level, &v1).unwrap());
            }
        }
    }

    #[test]
    fn z_tau_and_q_mu_basic() {
        let dual = Dual::Gr { q: 3, p: 3 };
        // tau at level 1: V1 of dim 2
        let tau_v1 = Subspace::coordinate(6, &[0, 1]);
        let tau_v2 = Subspace::coordinate(6, &[0, 1, 2, 3]);
        let tau = make_flag(dual, Level::Int(1), tau_v1, Some(tau_v2)).unwrap();
        // W in D_2 (dim 1) inside tau.V1
        let w = Subspace::coordinate(6, &[0]);
        assert!(z_tau_contains(&tau, Level::Int(2), &w).unwrap());
        let w_out = Subspace::coordinate(6, &[2]);
        assert!(!z_tau_contains(&tau, Level::Int(2), &w_out).unwrap());
        // wrong order
        assert!(matches!(
            z_tau_contains(&tau, Level::Int(1), &Subspace::coordinate(6, &[0, 1])),
            Err(Error::LevelOrderViolation(_))
        ));
        // mu at level 2, W in D_1 (dim 2) with mu.V1 ⊆ W ⊆ mu.V2
        let mu_v1 = Subspace::coordinate(6, &[0]);
        let mu_v2 = Subspace::coordinate(6, &[0, 1, 2, 3, 4]);
        let mu = make_flag(dual, Level::Int(2), mu_v1, Some(mu_v2)).unwrap();
        let w1 = Subspace::coordinate(6, &[0, 1]);
        assert!(q_mu_contains(&mu, Level::Int(1), &w1).unwrap());
        let w2 = Subspace::coordinate(6, &[1, 2]);
        assert!(!q_mu_contains(&mu, Level::Int(1), &w2).unwrap());
    }

    #[test]
    fn z_tau_of_sigma_flag_lies_in_sigma() {
        // Lemma: tau isotropic  <=>  all of Z_tau inside Sigma_r
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let dual = Dual::Gr { q: 3, p: 4 };
        for _ in 0..40 {
            let tau = random_sigma_point(&mut rng, dual, Level::Int(1));
            // sample W ⊆ tau.V1 of dim 1 (level 2)
            let coeff = linalg::random_cmat(&mut rng, 2, 1);
            let w = Subspace::canonicalize(&(tau.flag().v1().onb() * coeff)).unwrap();
            assert!(z_tau_contains(tau.flag(), Level::Int(2), &w).unwrap());
            assert!(sigma_contains(dual, Level::Int(2), &w).unwrap());
        }
        // converse direction: non-isotropic tau admits W in Z_tau off Sigma
        for _ in 0..40 {
            let flag = random_flag_through_interior(&mut rng, dual, Level::Int(1));
            let h = Form::Hermitian(dual.hermitian_form());
            if flag.v1().is_isotropic(&h) {
                continue;
            }
            let mut found_off_sigma = false;
            for _ in 0..30 {
                let coeff = linalg::random_cmat(&mut rng, 2, 1);
                if let Ok(w) = Subspace::canonicalize(&(flag.v1().onb() * coeff)) {
                    if w.dim() == 1 && !sigma_contains(dual, Level::Int(2), &w).unwrap() {
                        found_off_sigma = true;
                        break;
                    }
                }
            }
            assert!(found_off_sigma);
        }
    }

    #[test]
    fn chains_connect_and_verify() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        // Gr(2, C^5): random A, B
        let dual = Dual::Gr { q: 2, p: 3 };
        for _ in 0..20 {
            let a = crate::subspace::random_subspace(&mut rng, 5, 1);
            let b = crate::subspace::random_subspace(&mut rng, 5, 1);
            let chain = chain_connect(dual, Level::Int(1), &a, &b, ChainMode::Z).unwrap();
            assert!(!chain.is_empty());
            // endpoints are contained in the first/last subgrassmannian
            assert!(z_tau_contains(&chain[0], Level::Int(1), &a).unwrap());
            assert!(z_tau_contains(chain.last().unwrap(), Level::Int(1), &b).unwrap());
            // consecutive members intersect
            for w in chain.windows(2) {
                let meet = w[0].v1().intersect(w[1].v1()).unwrap();
                assert!(meet.dim() >= 1);
            }
        }
        // empty chain for equal endpoints
        let a = crate::subspace::random_subspace(&mut rng, 5, 1);
        assert!(chain_connect(dual, Level::Int(1), &a, &a, ChainMode::Z)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn chains_on_lagrangian_grassmannian() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let dual = Dual::LGr { n: 3 };
        let j = Form::Bilinear(dual.bilinear_form().unwrap());
        for _ in 0..15 {
            let a = random_sigma_point(&mut rng, dual, Level::Int(1));
            let b = random_flag_through_interior(&mut rng, dual, Level::Int(1));
            let chain = chain_connect(
                dual,
                Level::Int(1),
                a.flag().v1(),
                b.v1(),
                ChainMode::Q,
            )
            .unwrap();
            for mu in &chain {
                assert!(mu.v1().is_isotropic(&j));
                assert_eq!(mu.level(), Level::Int(2));
            }
            if let Some(first) = chain.first() {
                assert!(q_mu_contains(first, Level::Int(1), a.flag().v1()).unwrap());
                assert!(q_mu_contains(chain.last().unwrap(), Level::Int(1), b.v1()).unwrap());
            }
        }
    }

    #[test]
    fn single_step_chain_for_adjacent_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let dual = Dual::Gr { q: 3, p: 3 };
        // A, B of dim 2 sharing a line
        let common = crate::subspace::random_subspace(&mut rng, 6, 1);
        let a = common
            .sum(&crate::subspace::random_subspace(&mut rng, 6, 1))
            .unwrap();
        let b = common
            .sum(&crate::subspace::random_subspace(&mut rng, 6, 1))
            .unwrap();
        let chain = chain_connect(dual, Level::Int(1), &a, &b, ChainMode::Z).unwrap();
        assert_eq!(chain.len(), 1);
        let sum = a.sum(&b).unwrap();
        assert!(chain[0].v1().eq_within(&sum, 1e-7));
    }

    #[test]
    fn stratum_flags_have_expected_isotropy_defect() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let dual = Dual::Gr { q: 3, p: 4 };
        for k in 1..=3usize {
            for r in 1..=k.min(2) {
                let flag = random_stratum_flag(&mut rng, dual, Level::Int(r), k).unwrap();
                let (_, _, zero) = flag.v1().restrict_signature(&dual.hermitian_form());
                assert_eq!(zero, 3 - k, "k={k} r={r}");
            }
        }
    }
}
