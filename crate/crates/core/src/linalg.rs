//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const HERMITIAN_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry of `m - m†`, relative to the largest entry of `m` when that exceeds one.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst / max_abs(m).max(1.0)
}

pub fn ensure_hermitian(m: &CMatrix) -> Result<()> {
    let d = hermiticity_defect(m);
    if d > HERMITIAN_TOL {
        Err(Error::NonHermitian(d))
    } else {
        Ok(())
    }
}

/// `‖U†U − I‖` in spectral norm.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    spectral_norm(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

/// Spectral distance after removing the global phase that best aligns `b` with `a`
/// (the phase of `Tr(b†a)`).
pub fn phase_aligned_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let overlap: C64 = b.adjoint().component_mul(&a.transpose()).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        real(1.0)
    };
    spectral_norm(&(a - b * phase))
}

/// Eigendecomposition of a Hermitian matrix, reusable for `exp(−iHt)` at many times.
#[derive(Clone, Debug)]
pub struct Propagator {
    values: DVector<f64>,
    vectors: CMatrix,
}

impl Propagator {
    pub fn new(h: &CMatrix) -> Result<Self> {
        ensure_hermitian(h)?;
        Ok(Self::new_unchecked(h))
    }

    pub(crate) fn new_unchecked(h: &CMatrix) -> Self {
        // Symmetrize so round-off in the lower triangle cannot leak into the decomposition.
        let sym = (h + h.adjoint()) * real(0.5);
        let eig = SymmetricEigen::new(sym);
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.vectors
    }

    /// `exp(−iHt)`.
    pub fn unitary(&self, t: f64) -> CMatrix {
        self.function(|e| C64::from_polar(1.0, -e * t))
    }

    /// `V f(Λ) V†` for a scalar function of the eigenvalues.
    pub fn function(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &e) in self.values.iter().enumerate() {
            let z = f(e);
            for x in scaled.column_mut(j).iter_mut() {
                *x *= z;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// `exp(−iHt) v` without forming the full unitary.
    pub fn apply(&self, t: f64, v: &CVector) -> CVector {
        let mut coeffs = self.vectors.adjoint() * v;
        for (z, &e) in coeffs.iter_mut().zip(self.values.iter()) {
            *z *= C64::from_polar(1.0, -e * t);
        }
        &self.vectors * coeffs
    }
}

/// `exp(−iHt)` for Hermitian `H`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> Result<CMatrix> {
    Ok(Propagator::new(h)?.unitary(t))
}

/// `exp(A)` for anti-Hermitian `A`, via the Hermitian matrix `iA`.
pub fn expm_antihermitian(a: &CMatrix) -> Result<CMatrix> {
    let h = a * c(0.0, 1.0);
    // exp(A) = exp(−i (iA))
    expm_hermitian(&h, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[real(0.0), c(0.0, 1.0), c(0.0, -1.0), real(0.0)])
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = CMatrix::identity(2, 2);
        let i3 = CMatrix::identity(3, 3);
        assert_eq!(kron(&i2, &i3), CMatrix::identity(6, 6));
    }

    #[test]
    fn spectral_norm_of_pauli_commutator() {
        let x = CMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(1.0), real(0.0)]);
        let z = CMatrix::from_row_slice(2, 2, &[real(-1.0), real(0.0), real(0.0), real(1.0)]);
        assert!((spectral_norm(&commutator(&x, &z)) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exp_of_pauli_matches_closed_form() {
        let y = pauli_y();
        let t = 0.37;
        let u = expm_hermitian(&y, t).unwrap();
        let expected = CMatrix::identity(2, 2) * real(t.cos()) - &y * c(0.0, t.sin());
        assert!((u - expected).norm() < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(0.0), real(0.0)]);
        assert!(matches!(Propagator::new(&m), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn phase_alignment_removes_global_phase() {
        let y = pauli_y();
        let u = expm_hermitian(&y, 0.4).unwrap();
        let v = &u * C64::from_polar(1.0, 1.1);
        assert!(phase_aligned_distance(&u, &v) < 1e-14);
        assert!(spectral_norm(&(u - v)) > 0.5);
    }
}
