//! Rank, commutators, kernels and inverses under a [`TolerancePolicy`].

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::policy::TolerancePolicy;
use crate::scalar::Scalar;

/// Singular values in descending order. Empty for an empty matrix.
pub fn singular_values<T: Scalar>(m: &DMatrix<T>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `rank_rel_tol · max(rows, cols) · σ_max`.
pub fn numeric_rank<T: Scalar>(m: &DMatrix<T>, pol: &TolerancePolicy) -> usize {
    numeric_rank_with_scale(m, 0.0, pol)
}

/// As [`numeric_rank`] with the cutoff measured against `max(σ_max, scale)`.
///
/// Used when `m` is a difference of larger quantities, so that a cancellation
/// down to rounding level reads as rank zero.
pub fn numeric_rank_with_scale<T: Scalar>(m: &DMatrix<T>, scale: f64, pol: &TolerancePolicy) -> usize {
    let sv = singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0).max(scale);
    if smax == 0.0 {
        return 0;
    }
    let cutoff = pol.rank_rel_tol * (m.nrows().max(m.ncols()) as f64) * smax;
    sv.iter().filter(|&&s| s > cutoff).count()
}

fn check_square<T: Scalar>(m: &DMatrix<T>, what: &str) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// `AB − BA`.
pub fn commutator<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = check_square(a, "A")?;
    if b.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "commutator of {n}x{n} and {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(a * b - b * a)
}

/// `‖[A, B]‖ / (‖A‖·‖B‖)`, zero when either matrix is zero.
pub fn relative_commutator<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<f64> {
    let c = commutator(a, b)?;
    let s = a.norm() * b.norm();
    Ok(if s > 0.0 { c.norm() / s } else { 0.0 })
}

/// Largest [`relative_commutator`] over all pairs, with the offending pair.
pub fn max_commutator_residual<T: Scalar>(ms: &[DMatrix<T>]) -> Result<(f64, (usize, usize))> {
    let mut worst = (0.0, (0, 0));
    for i in 0..ms.len() {
        for j in i + 1..ms.len() {
            let r = relative_commutator(&ms[i], &ms[j])?;
            if r > worst.0 {
                worst = (r, (i, j));
            }
        }
    }
    Ok(worst)
}

/// Extreme singular values of a square matrix, failing when it is numerically singular.
pub fn check_invertible<T: Scalar>(m: &DMatrix<T>, pol: &TolerancePolicy) -> Result<(f64, f64)> {
    let n = check_square(m, "matrix")?;
    let sv = singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    if smax == 0.0 || smin <= pol.rank_rel_tol * (n as f64) * smax {
        return Err(Error::Singular {
            smallest_singular_value: smin,
            largest_singular_value: smax,
        });
    }
    Ok((smin, smax))
}

pub fn inverse<T: Scalar>(m: &DMatrix<T>, pol: &TolerancePolicy) -> Result<DMatrix<T>> {
    let (smin, smax) = check_invertible(m, pol)?;
    m.clone().try_inverse().ok_or(Error::Singular {
        smallest_singular_value: smin,
        largest_singular_value: smax,
    })
}

/// Generalized commutator `A₂A₁⁻¹A₃ − A₃A₁⁻¹A₂` with conditioning data.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedCommutator<T> {
    pub matrix: DMatrix<T>,
    /// `‖A₂A₁⁻¹A₃‖ + ‖A₃A₁⁻¹A₂‖`, the natural scale for ranking `matrix`.
    pub scale: f64,
    /// 2-norm condition number of `A₁`.
    pub condition: f64,
}

pub fn generalized_commutator<T: Scalar>(
    a1: &DMatrix<T>,
    a2: &DMatrix<T>,
    a3: &DMatrix<T>,
    pol: &TolerancePolicy,
) -> Result<GeneralizedCommutator<T>> {
    let n = check_square(a1, "A1")?;
    if a2.shape() != (n, n) || a3.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "slices must all be {n}x{n}"
        )));
    }
    let (smin, smax) = check_invertible(a1, pol)?;
    let lu = a1.clone().lu();
    let x3 = lu.solve(a3).ok_or(Error::Singular {
        smallest_singular_value: smin,
        largest_singular_value: smax,
    })?;
    let x2 = lu.solve(a2).ok_or(Error::Singular {
        smallest_singular_value: smin,
        largest_singular_value: smax,
    })?;
    let p = a2 * x3;
    let q = a3 * x2;
    let scale = p.norm() + q.norm();
    Ok(GeneralizedCommutator {
        matrix: p - q,
        scale,
        condition: if n == 0 { 1.0 } else { smax / smin },
    })
}

/// Orthonormal basis (as columns) of the `k`-dimensional subspace spanned by
/// the right singular vectors of the `k` smallest singular values.
pub fn trailing_right_singular_vectors<T: Scalar>(m: &DMatrix<T>, k: usize) -> DMatrix<T> {
    let c = m.ncols();
    if k == 0 || c == 0 {
        return DMatrix::zeros(c, 0);
    }
    let square = if m.nrows() < c {
        let mut s = DMatrix::zeros(c, c);
        s.view_mut((0, 0), (m.nrows(), c)).copy_from(m);
        s
    } else {
        m.clone()
    };
    let svd = SVD::new(square, false, true);
    let v_t = svd.v_t.expect("V requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let picked = &order[order.len() - k..];
    DMatrix::from_fn(c, k, |row, col| v_t[(picked[col], row)].conjugate())
}

/// Orthonormal basis of the numerical kernel.
pub fn null_space<T: Scalar>(m: &DMatrix<T>, pol: &TolerancePolicy) -> DMatrix<T> {
    let rank = numeric_rank(m, pol);
    trailing_right_singular_vectors(m, m.ncols() - rank)
}

/// `Σ c_i M_i`.
pub fn linear_combination<T: Scalar>(ms: &[DMatrix<T>], coeffs: &[T]) -> DMatrix<T> {
    let (r, c) = ms.first().map(|m| m.shape()).unwrap_or((0, 0));
    let mut out = DMatrix::zeros(r, c);
    for (m, &a) in ms.iter().zip(coeffs) {
        out += m * a;
    }
    out
}

/// Bilinear form `uᵀv` (no conjugation).
pub fn bilinear<T: Scalar>(u: &DVector<T>, v: &DVector<T>) -> T {
    u.iter().zip(v.iter()).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

/// `M diag(d)`.
pub fn scale_columns<T: Scalar>(m: &DMatrix<T>, d: &DVector<T>) -> DMatrix<T> {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= d[j];
    }
    out
}

/// Relative size of the deviation from symmetry, `‖M − Mᵀ‖ / scale`.
pub fn asymmetry<T: Scalar>(m: &DMatrix<T>, scale: f64) -> f64 {
    let d = (m - m.transpose()).norm();
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

pub(crate) fn sqrt(x: f64) -> f64 {
    ComplexField::sqrt(x)
}
