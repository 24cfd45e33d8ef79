//! Multivariate polynomials with complex coefficients and matrix-valued
//! polynomial maps between Harish-Chandra charts.  Jets are exact: the
//! only error source is f64 rounding.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domains::DomainSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Sparse multivariate polynomial; keys are exponent vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MPoly {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u16>, Complex64>,
}

impl MPoly {
    pub fn zero(nvars: usize) -> MPoly {
        MPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, v: Complex64) -> MPoly {
        let mut p = MPoly::zero(nvars);
        if v.norm() > 0.0 {
            p.terms.insert(vec![0; nvars], v);
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> MPoly {
        let mut e = vec![0u16; nvars];
        e[i] = 1;
        let mut p = MPoly::zero(nvars);
        p.terms.insert(e, c(1.0));
        p
    }

    pub fn add_term(&mut self, expo: Vec<u16>, coeff: Complex64) {
        assert_eq!(expo.len(), self.nvars);
        let e = self.terms.entry(expo).or_insert(c(0.0));
        *e += coeff;
        // keep the map sparse
        let dead = e.norm() == 0.0;
        if dead {
            // re-borrow to remove
        }
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.terms.values().all(|v| v.norm() <= tol)
    }

    pub fn scale(&self, s: Complex64) -> MPoly {
        let mut out = MPoly::zero(self.nvars);
        for (e, v) in &self.terms {
            out.terms.insert(e.clone(), v * s);
        }
        out
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, v) in &other.terms {
            let slot = out.terms.entry(e.clone()).or_insert(c(0.0));
            *slot += v;
        }
        out.prune();
        out
    }

    pub fn sub(&self, other: &MPoly) -> MPoly {
        self.add(&other.scale(c(-1.0)))
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = MPoly::zero(self.nvars);
        for (ea, va) in &self.terms {
            for (eb, vb) in &other.terms {
                let e: Vec<u16> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let slot = out.terms.entry(e).or_insert(c(0.0));
                *slot += va * vb;
            }
        }
        out.prune();
        out
    }

    fn prune(&mut self) {
        self.terms.retain(|_, v| v.norm() > 0.0);
    }

    pub fn eval(&self, xs: &[Complex64]) -> Complex64 {
        assert_eq!(xs.len(), self.nvars);
        let mut acc = c(0.0);
        for (e, v) in &self.terms {
            let mut m = *v;
            for (i, &p) in e.iter().enumerate() {
                for _ in 0..p {
                    m *= xs[i];
                }
            }
            acc += m;
        }
        acc
    }

    pub fn partial(&self, i: usize) -> MPoly {
        let mut out = MPoly::zero(self.nvars);
        for (e, v) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            let slot = out.terms.entry(e2).or_insert(c(0.0));
            *slot += v * c(e[i] as f64);
        }
        out
    }

    /// Substitute `x_i = center_i + sum_j lin[i][j] t_j` and expand in the
    /// `t` variables.
    pub fn compose_affine(&self, center: &[Complex64], lin: &[Vec<Complex64>]) -> MPoly {
        assert_eq!(center.len(), self.nvars);
        let tvars = lin.first().map(|r| r.len()).unwrap_or(0);
        // affine forms per variable
        let forms: Vec<MPoly> = (0..self.nvars)
            .map(|i| {
                let mut f = MPoly::constant(tvars, center[i]);
                for j in 0..tvars {
                    if lin[i][j].norm() > 0.0 {
                        f = f.add(&MPoly::var(tvars, j).scale(lin[i][j]));
                    }
                }
                f
            })
            .collect();
        let mut out = MPoly::zero(tvars);
        for (e, v) in &self.terms {
            let mut term = MPoly::constant(tvars, *v);
            for (i, &p) in e.iter().enumerate() {
                for _ in 0..p {
                    term = term.mul(&forms[i]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Coefficient extraction: the Taylor coefficient of the monomial is
    /// `coeff * multinomial`, so `d^alpha p(0) = alpha! * coeff(alpha)`.
    pub fn coeff(&self, expo: &[u16]) -> Complex64 {
        self.terms.get(expo).copied().unwrap_or(c(0.0))
    }
}

// ---------------------------------------------------------------------------
// matrix-valued polynomial maps
// ---------------------------------------------------------------------------

/// A matrix-valued polynomial map between Harish-Chandra charts.  Entries
/// are polynomials in the source matrix entries (column-major order).
#[derive(Debug, Clone)]
pub struct PolyMatrixMap {
    pub source: DomainSpec,
    pub target: DomainSpec,
    /// target entries, column-major
    entries: Vec<MPoly>,
    pub claimed_proper: bool,
}

/// Anything that can evaluate source points to target points (the
/// intersection oracle needs evaluation only).
pub trait MapEval {
    fn source(&self) -> DomainSpec;
    fn target(&self) -> DomainSpec;
    fn eval(&self, z: &CMat) -> Result<CMat>;
}

impl PolyMatrixMap {
    pub fn nvars(&self) -> usize {
        let (r, cdim) = self.source.matrix_shape();
        r * cdim
    }

    pub fn new(
        source: DomainSpec,
        target: DomainSpec,
        entries: Vec<MPoly>,
        claimed_proper: bool,
    ) -> Result<PolyMatrixMap> {
        let (tr, tc) = target.matrix_shape();
        if entries.len() != tr * tc {
            return Err(Error::ShapeMismatch(format!(
                "need {} entries, got {}",
                tr * tc,
                entries.len()
            )));
        }
        let (sr, sc) = source.matrix_shape();
        for e in &entries {
            if e.nvars != sr * sc {
                return Err(Error::ShapeMismatch(
                    "entry variable count does not match the source shape".into(),
                ));
            }
        }
        let map = PolyMatrixMap {
            source,
            target,
            entries,
            claimed_proper,
        };
        // target symmetry must hold identically
        if let Some(sign) = match target {
            DomainSpec::TypeII { .. } => Some(-1.0),
            DomainSpec::TypeIII { .. } => Some(1.0),
            _ => None,
        } {
            for i in 0..tr {
                for j in 0..tc {
                    let diff = map.entry(i, j).sub(&map.entry(j, i).scale(c(sign)));
                    if !diff.is_zero(1e-12) {
                        return Err(Error::SymmetryViolation(1.0));
                    }
                }
            }
        }
        Ok(map)
    }

    pub fn entry(&self, i: usize, j: usize) -> &MPoly {
        let (tr, _) = self.target.matrix_shape();
        &self.entries[j * tr + i]
    }

    pub fn degree(&self) -> usize {
        self.entries.iter().map(|e| e.degree()).max().unwrap_or(0)
    }

    /// Restrict to an affine slice `Z(t) = center + sum t_k dirs_k`,
    /// producing one polynomial in `t` per target entry.
    pub fn restrict_affine(&self, center: &CMat, dirs: &[CMat]) -> Vec<MPoly> {
        let n = self.nvars();
        let cvec: Vec<Complex64> = center.iter().copied().collect();
        let lin: Vec<Vec<Complex64>> = (0..n)
            .map(|i| dirs.iter().map(|d| d[(i % center.nrows(), i / center.nrows())]).collect())
            .collect();
        self.entries
            .iter()
            .map(|e| e.compose_affine(&cvec, &lin))
            .collect()
    }
}

impl MapEval for PolyMatrixMap {
    fn source(&self) -> DomainSpec {
        self.source
    }

    fn target(&self) -> DomainSpec {
        self.target
    }

    fn eval(&self, z: &CMat) -> Result<CMat> {
        self.source.validate_point(z)?;
        let xs: Vec<Complex64> = z.iter().copied().collect();
        let (tr, tc) = self.target.matrix_shape();
        let mut out = linalg::zeros(tr, tc);
        for j in 0..tc {
            for i in 0..tr {
                out[(i, j)] = self.entries[j * tr + i].eval(&xs);
            }
        }
        Ok(out)
    }
}

/// Composition `g ∘ m` evaluated pointwise (for oracle routes; `m` may be
/// any evaluator, e.g. a Moebius action).
pub struct ComposedMap<'a> {
    pub first: &'a dyn MapEval,
    pub then: &'a dyn MapEval,
}

impl<'a> MapEval for ComposedMap<'a> {
    fn source(&self) -> DomainSpec {
        self.first.source()
    }

    fn target(&self) -> DomainSpec {
        self.then.target()
    }

    fn eval(&self, z: &CMat) -> Result<CMat> {
        self.then.eval(&self.first.eval(z)?)
    }
}

/// Moebius action as an evaluator.
pub struct MobiusMap {
    pub spec: DomainSpec,
    pub g: CMat,
}

impl MapEval for MobiusMap {
    fn source(&self) -> DomainSpec {
        self.spec
    }

    fn target(&self) -> DomainSpec {
        self.spec
    }

    fn eval(&self, z: &CMat) -> Result<CMat> {
        self.spec.mobius(&self.g, z)
    }
}

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

/// Identity map on a domain.
pub fn identity_map(spec: DomainSpec) -> PolyMatrixMap {
    let (r, cdim) = spec.matrix_shape();
    let n = r * cdim;
    let entries = (0..r * cdim).map(|k| MPoly::var(n, k)).collect();
    PolyMatrixMap::new(spec, spec, entries, true).expect("identity")
}

/// Transpose map `Z -> Z^t` from `D^I_{p,q}` to `D^I_{q,p}`.
pub fn transpose_map(p: usize, q: usize) -> PolyMatrixMap {
    let source = DomainSpec::type_i(p, q);
    let target = if q <= p {
        DomainSpec::TypeI { p: q, q: p }
    } else {
        DomainSpec::type_i(q, p)
    };
    // target entries (i,j) = source entry (j,i); source column-major with
    // p rows: var index of (j,i) is i*p + j
    let n = p * q;
    let mut entries = Vec::with_capacity(n);
    for j in 0..p {
        for i in 0..q {
            entries.push(MPoly::var(n, i * p + j));
        }
    }
    PolyMatrixMap {
        source,
        target,
        entries,
        claimed_proper: true,
    }
}

/// Block diagonal map `Z -> diag(Z, H(Z))` into `D^I_{p + hr, q + hc}`
/// where `H` is a matrix of polynomials in the source entries.
pub fn diagonal_map(
    p: usize,
    q: usize,
    h_rows: usize,
    h_cols: usize,
    h: Vec<MPoly>,
) -> Result<PolyMatrixMap> {
    let source = DomainSpec::type_i(p, q);
    let target = DomainSpec::type_i(p + h_rows, q + h_cols);
    let n = p * q;
    assert_eq!(h.len(), h_rows * h_cols);
    let (tr, tc) = target.matrix_shape();
    let mut entries = vec![MPoly::zero(n); tr * tc];
    for j in 0..q {
        for i in 0..p {
            entries[j * tr + i] = MPoly::var(n, j * p + i);
        }
    }
    for j in 0..h_cols {
        for i in 0..h_rows {
            let e = h[j * h_rows + i].clone();
            assert_eq!(e.nvars, n);
            entries[(q + j) * tr + (p + i)] = e;
        }
    }
    PolyMatrixMap::new(source, target, entries, true)
}

/// Zero-padding block embedding `Z -> [Z; 0]` into `D^I_{p', q}`.
pub fn block_embedding(p: usize, q: usize, p_target: usize) -> PolyMatrixMap {
    assert!(p_target >= p);
    let source = DomainSpec::type_i(p, q);
    let target = DomainSpec::type_i(p_target, q);
    let n = p * q;
    let (tr, tc) = target.matrix_shape();
    let mut entries = vec![MPoly::zero(n); tr * tc];
    for j in 0..q {
        for i in 0..p {
            entries[j * tr + i] = MPoly::var(n, j * p + i);
        }
    }
    PolyMatrixMap {
        source,
        target,
        entries,
        claimed_proper: true,
    }
}

/// Inclusion of symmetric matrices: `D^III_n -> D^I_{n,n}`.
pub fn symmetric_inclusion(n: usize) -> PolyMatrixMap {
    let source = DomainSpec::type_iii(n);
    let target = DomainSpec::type_i(n, n);
    let nv = n * n;
    let entries = (0..nv).map(|k| MPoly::var(nv, k)).collect();
    PolyMatrixMap {
        source,
        target,
        entries,
        claimed_proper: true,
    }
}

// ---------------------------------------------------------------------------
// serde config format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TermJson {
    coeffs: Vec<u16>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    row: usize,
    col: usize,
    terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
pub struct MapConfig {
    pub source: DomainSpec,
    pub target: DomainSpec,
    pub degree: usize,
    entries: Vec<EntryJson>,
}

impl MapConfig {
    pub fn from_map(map: &PolyMatrixMap) -> MapConfig {
        let (tr, tc) = map.target.matrix_shape();
        let mut entries = Vec::new();
        for i in 0..tr {
            for j in 0..tc {
                let poly = map.entry(i, j);
                if poly.terms.is_empty() {
                    continue;
                }
                entries.push(EntryJson {
                    row: i,
                    col: j,
                    terms: poly
                        .terms
                        .iter()
                        .map(|(e, v)| TermJson {
                            coeffs: e.clone(),
                            re: v.re,
                            im: v.im,
                        })
                        .collect(),
                });
            }
        }
        MapConfig {
            source: map.source,
            target: map.target,
            degree: map.degree(),
            entries,
        }
    }

    pub fn build(&self) -> Result<PolyMatrixMap> {
        let (sr, sc) = self.source.matrix_shape();
        let n = sr * sc;
        let (tr, tc) = self.target.matrix_shape();
        let mut entries = vec![MPoly::zero(n); tr * tc];
        for e in &self.entries {
            if e.row >= tr || e.col >= tc {
                return Err(Error::Input(format!(
                    "entry ({}, {}) outside {}x{}",
                    e.row, e.col, tr, tc
                )));
            }
            let mut p = MPoly::zero(n);
            for t in &e.terms {
                if t.coeffs.len() != n {
                    return Err(Error::Input(format!(
                        "multi-index length {} expected {}",
                        t.coeffs.len(),
                        n
                    )));
                }
                p.add_term(t.coeffs.clone(), Complex64::new(t.re, t.im));
            }
            entries[e.col * tr + e.row] = p;
        }
        PolyMatrixMap::new(self.source, self.target, entries, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn poly_arithmetic_and_eval() {
        // p = x0^2 + 2 x1
        let x0 = MPoly::var(2, 0);
        let x1 = MPoly::var(2, 1);
        let p = x0.mul(&x0).add(&x1.scale(c(2.0)));
        assert_eq!(p.degree(), 2);
        let v = p.eval(&[c(3.0), c(5.0)]);
        assert_eq!(v, c(19.0));
        let dp = p.partial(0);
        assert_eq!(dp.eval(&[c(3.0), c(5.0)]), c(6.0));
    }

    #[test]
    fn affine_composition_matches_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        // random quadratic in 4 vars, restricted to a random affine plane
        let mut p = MPoly::zero(4);
        for _ in 0..10 {
            let e: Vec<u16> = (0..4).map(|_| rng.gen_range(0..2u16)).collect();
            p.add_term(e, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        let center: Vec<Complex64> = (0..4)
            .map(|_| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
            .collect();
        let lin: Vec<Vec<Complex64>> = (0..4)
            .map(|_| {
                (0..2)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        let q = p.compose_affine(&center, &lin);
        for _ in 0..10 {
            let t: Vec<Complex64> = (0..2)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let xs: Vec<Complex64> = (0..4)
                .map(|i| center[i] + lin[i][0] * t[0] + lin[i][1] * t[1])
                .collect();
            let lhs = q.eval(&t);
            let rhs = p.eval(&xs);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_and_transpose_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(82);
        let id = identity_map(DomainSpec::type_i(3, 2));
        let z = crate::sampling::random_interior_point(&mut rng, &DomainSpec::type_i(3, 2));
        assert!(linalg::max_abs(&(id.eval(&z).unwrap() - &z)) < 1e-14);
        let tr = transpose_map(3, 3);
        let z = crate::sampling::random_interior_point(&mut rng, &DomainSpec::type_i(3, 3));
        assert!(linalg::max_abs(&(tr.eval(&z).unwrap() - z.transpose())) < 1e-14);
    }

    #[test]
    fn diagonal_map_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        // h(z) = 0.3 z_11 as a 1x1 block
        let h = vec![MPoly::var(4, 0).scale(c(0.3))];
        let f = diagonal_map(2, 2, 1, 1, h).unwrap();
        let z = crate::sampling::random_interior_point(&mut rng, &DomainSpec::type_i(2, 2));
        let w = f.eval(&z).unwrap();
        assert_eq!(w.nrows(), 3);
        assert!((w[(2, 2)] - c(0.3) * z[(0, 0)]).norm() < 1e-14);
        assert!((w[(0, 0)] - z[(0, 0)]).norm() < 1e-14);
        assert!(w[(2, 0)].norm() < 1e-14);
    }

    #[test]
    fn map_config_roundtrip() {
        let h = vec![MPoly::var(4, 0).scale(c(0.3))];
        let f = diagonal_map(2, 2, 1, 1, h).unwrap();
        let cfg = MapConfig::from_map(&f);
        let s = serde_json::to_string(&cfg).unwrap();
        let cfg2: MapConfig = serde_json::from_str(&s).unwrap();
        let f2 = cfg2.build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(84);
        let z = crate::sampling::random_interior_point(&mut rng, &DomainSpec::type_i(2, 2));
        assert!(linalg::max_abs(&(f.eval(&z).unwrap() - f2.eval(&z).unwrap())) < 1e-14);
    }

    #[test]
    fn type_iii_symmetry_enforced() {
        // a map into type III whose entries are not symmetric must fail
        let n = 4; // vars of a 2x2 source
        let mut entries = vec![MPoly::zero(n); 4];
        entries[1] = MPoly::var(n, 0); // (1,0) entry
        let bad = PolyMatrixMap::new(
            DomainSpec::type_i(2, 2),
            DomainSpec::type_iii(2),
            entries,
            false,
        );
        assert!(bad.is_err());
    }
}
