//! Scalar fields supported by the crate: `f64` for ℝ and `Complex64` for ℂ.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{ComplexField, DMatrix, Dyn, Schur};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// The field a tensor, matrix or decomposition lives over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Field {
    Real,
    Complex,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Real => f.write_str("real"),
            Field::Complex => f.write_str("complex"),
        }
    }
}

/// Entry type of every matrix and tensor in the crate.
///
/// Orthogonality is always measured with the bilinear form `uᵀv`; no
/// conjugation happens anywhere, also over ℂ.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    const FIELD: Field;

    fn to_c64(self) -> Complex64;

    /// Over ℝ the imaginary part is dropped.
    fn from_c64(z: Complex64) -> Self;

    /// Standard Gaussian sample; complex samples have unit expected modulus squared.
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Eigenvalues from a Schur form. `None` if the QR iteration fails to converge.
    fn eigenvalues(m: &DMatrix<Self>) -> Option<Vec<Complex64>>;
}

const SCHUR_MAX_ITER: usize = 10_000;

/// The Schur iteration can stall on matrices that are within rounding of a
/// multiple of the identity; loosen the deflation threshold step by step.
fn schur<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Option<Schur<T, Dyn>> {
    [f64::EPSILON, 1e-14, 1e-12, 1e-10]
        .into_iter()
        .find_map(|eps| Schur::try_new(m.clone(), eps, SCHUR_MAX_ITER))
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;

    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    fn from_c64(z: Complex64) -> Self {
        z.re
    }

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn eigenvalues(m: &DMatrix<Self>) -> Option<Vec<Complex64>> {
        match m.nrows() {
            0 => Some(Vec::new()),
            1 => Some(alloc::vec![Complex64::new(m[(0, 0)], 0.0)]),
            _ => {
                let schur = schur(m)?;
                Some(schur.complex_eigenvalues().iter().copied().collect())
            }
        }
    }
}

impl Scalar for Complex64 {
    const FIELD: Field = Field::Complex;

    fn to_c64(self) -> Complex64 {
        self
    }

    fn from_c64(z: Complex64) -> Self {
        z
    }

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
    }

    fn eigenvalues(m: &DMatrix<Self>) -> Option<Vec<Complex64>> {
        match m.nrows() {
            0 => Some(Vec::new()),
            1 => Some(alloc::vec![m[(0, 0)]]),
            _ => {
                let (_, t) = schur(m)?.unpack();
                Some(t.diagonal().iter().copied().collect())
            }
        }
    }
}

/// Embed a matrix over either field into ℂ.
pub fn to_complex_matrix<T: Scalar>(m: &DMatrix<T>) -> DMatrix<Complex64> {
    m.map(|x| x.to_c64())
}

/// Inverse of [`to_complex_matrix`]; drops imaginary parts when `T` is real.
pub fn from_complex_matrix<T: Scalar>(m: &DMatrix<Complex64>) -> DMatrix<T> {
    m.map(T::from_c64)
}
