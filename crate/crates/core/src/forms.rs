//! Hermitian and bilinear forms in the block conventions of the matrix
//! realizations: `I_{p,q} = diag(I_q, -I_p)`, `S_n = [[0,I],[I,0]]`,
//! `J_n = [[0,I],[-I,0]]`.
//!
//! The Hermitian pairing is conjugate-linear in the second argument,
//! `<u,v> = sum_i eps_i u_i conj(v_i)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{eye, zeros, CMat};

/// The indefinite Hermitian form `I_{p,q}` with +1 on the first `q`
/// coordinates and -1 on the last `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianForm {
    pub p: usize,
    pub q: usize,
}

impl HermitianForm {
    pub fn new(p: usize, q: usize) -> Self {
        HermitianForm { p, q }
    }

    pub fn ambient_dim(&self) -> usize {
        self.p + self.q
    }

    pub fn matrix(&self) -> CMat {
        let n = self.ambient_dim();
        let mut m = zeros(n, n);
        for i in 0..n {
            let s = if i < self.q { 1.0 } else { -1.0 };
            m[(i, i)] = Complex64::new(s, 0.0);
        }
        m
    }

    /// Gram matrix of the columns of `b`: `G[i][j] = <b_j, b_i>`.
    pub fn gram(&self, b: &CMat) -> CMat {
        assert_eq!(b.nrows(), self.ambient_dim());
        b.adjoint() * self.matrix() * b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BilinearKind {
    Symmetric,
    Antisymmetric,
}

/// The bilinear form `S_n` (symmetric) or `J_n` (antisymmetric) on `C^{2n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearForm {
    pub kind: BilinearKind,
    pub n: usize,
}

impl BilinearForm {
    pub fn symmetric(n: usize) -> Self {
        BilinearForm {
            kind: BilinearKind::Symmetric,
            n,
        }
    }

    pub fn antisymmetric(n: usize) -> Self {
        BilinearForm {
            kind: BilinearKind::Antisymmetric,
            n,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        2 * self.n
    }

    pub fn matrix(&self) -> CMat {
        let n = self.n;
        let mut m = zeros(2 * n, 2 * n);
        let id = eye(n);
        m.view_mut((0, n), (n, n)).copy_from(&id);
        let sign = match self.kind {
            BilinearKind::Symmetric => 1.0,
            BilinearKind::Antisymmetric => -1.0,
        };
        m.view_mut((n, 0), (n, n))
            .copy_from(&(id * Complex64::new(sign, 0.0)));
        m
    }

    /// Gram matrix of the columns of `b`: `G[i][j] = form(b_i, b_j)`.
    pub fn gram(&self, b: &CMat) -> CMat {
        assert_eq!(b.nrows(), self.ambient_dim());
        b.transpose() * self.matrix() * b
    }
}

/// Either form kind, for operations generic over the pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Form {
    Hermitian(HermitianForm),
    Bilinear(BilinearForm),
}

impl Form {
    pub fn ambient_dim(&self) -> usize {
        match self {
            Form::Hermitian(h) => h.ambient_dim(),
            Form::Bilinear(b) => b.ambient_dim(),
        }
    }

    pub fn gram(&self, b: &CMat) -> CMat {
        match self {
            Form::Hermitian(h) => h.gram(b),
            Form::Bilinear(f) => f.gram(b),
        }
    }

    /// Constraint rows whose null space is the annihilator of the columns
    /// of `b`: Hermitian `b* I`, bilinear `b^t M`.
    pub(crate) fn annihilator_rows(&self, b: &CMat) -> CMat {
        match self {
            Form::Hermitian(h) => b.adjoint() * h.matrix(),
            Form::Bilinear(f) => b.transpose() * f.matrix(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn hermitian_signature_pattern() {
        let h = HermitianForm::new(3, 2);
        let m = h.matrix();
        assert_eq!(m[(0, 0)].re, 1.0);
        assert_eq!(m[(1, 1)].re, 1.0);
        assert_eq!(m[(2, 2)].re, -1.0);
        assert!(max_abs(&(m.adjoint() - &m)) == 0.0);
    }

    #[test]
    fn bilinear_symmetry_classes() {
        let s = BilinearForm::symmetric(3).matrix();
        assert_eq!(max_abs(&(&s - s.transpose())), 0.0);
        let j = BilinearForm::antisymmetric(3).matrix();
        assert_eq!(max_abs(&(&j + j.transpose())), 0.0);
    }
}
