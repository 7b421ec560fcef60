//! Orthogonal extension of vector families and completion of dual bases.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{bilinear, sqrt, trailing_right_singular_vectors};
use crate::policy::TolerancePolicy;
use crate::scalar::{from_complex_matrix, to_complex_matrix, Field, Scalar};

fn gram<T: Scalar>(us: &[DVector<T>]) -> DMatrix<T> {
    let r = us.len();
    DMatrix::from_fn(r, r, |i, j| bilinear(&us[i], &us[j]))
}

/// Extend `u_1..u_r ∈ K^n` to pairwise orthogonal `v_1..v_r ∈ K^{n+r}` whose
/// first `n` coordinates are copied from `u_i`.
///
/// With `A_ij = −⟨u_i,u_j⟩` the tail coordinates are the rows of `L` where
/// `LLᵀ = B`:
/// * over ℝ, `B = A + λI` with `λ = max(0, −λ_min(A)) + 1` and `L` its Cholesky factor,
///   so every `v_i` is nonzero;
/// * over ℂ, `B = A + I` factored by [`takagi_factor`], giving `⟨v_i, v_i⟩ = 1`.
pub fn orthogonal_extension<T: Scalar>(us: &[DVector<T>]) -> Result<Vec<DVector<T>>> {
    let Some(first) = us.first() else {
        return Ok(Vec::new());
    };
    let n = first.len();
    if let Some(i) = us.iter().position(|u| u.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "vector {i} has length {}, vector 0 has {n}",
            us[i].len()
        )));
    }
    let r = us.len();
    let a = -gram(us);
    let l: DMatrix<T> = match T::FIELD {
        Field::Real => {
            let eig = SymmetricEigen::new(a.clone());
            let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            let lambda = (-lmin).max(0.0) + 1.0;
            let b = &a + DMatrix::identity(r, r) * T::from_real(lambda);
            Cholesky::new(b)
                .ok_or_else(|| Error::IllConditioned("shifted Gram matrix is not positive definite".into()))?
                .l()
        }
        Field::Complex => {
            let b = to_complex_matrix(&a) + DMatrix::<Complex64>::identity(r, r);
            from_complex_matrix(&takagi_factor(&b))
        }
    };
    Ok((0..r)
        .map(|i| {
            DVector::from_fn(n + r, |c, _| if c < n { us[i][c] } else { l[(i, c - n)] })
        })
        .collect())
}

/// `L` (square, same size as `B`) with `L Lᵀ = B` for complex symmetric `B`.
///
/// Computed from the Takagi factorization `B = W Σ Wᵀ` as `L = W Σ^{1/2}`. The
/// real symmetric matrix `H = [[Re B, Im B], [Im B, −Re B]]` has eigenvalues
/// `±σ_i`; for each eigenvector `[x; y]` of a positive eigenvalue `σ`,
/// `w = x + iy` satisfies `B w̄ = σ w`, and these `w` are orthonormal. Columns
/// for zero Takagi values are zero.
pub fn takagi_factor(b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = b.nrows();
    let h = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = b[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) => z.re,
            (true, false) | (false, true) => z.im,
            (false, false) => -z.re,
        }
    });
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let cutoff = f64::EPSILON * (2 * n) as f64 * top;
    let mut l = DMatrix::<Complex64>::zeros(n, n);
    for (col, &idx) in order.iter().take(n).enumerate() {
        let sigma = eig.eigenvalues[idx];
        if sigma <= cutoff {
            break;
        }
        let s = sqrt(sigma);
        for i in 0..n {
            let w = Complex64::new(eig.eigenvectors[(i, idx)], eig.eigenvectors[(i + n, idx)]);
            l[(i, col)] = w * s;
        }
    }
    l
}

/// Complete `U, V` (both `r × n`, `UᵀV = I_n`) to square `U', V'` with
/// `U'ᵀV' = I_r`, keeping the first `n` columns exactly.
///
/// A basis `B` of `ker(Uᵀ)` is appended to `V`; `U'` is the inverse transpose
/// of `V' = [V | B]` with its first `n` columns overwritten by `U`.
pub fn complete_dual_bases<T: Scalar>(
    u: &DMatrix<T>,
    v: &DMatrix<T>,
    pol: &TolerancePolicy,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let (r, n) = u.shape();
    if v.shape() != (r, n) {
        return Err(Error::DimensionMismatch(format!(
            "U is {r}x{n}, V is {}x{}",
            v.nrows(),
            v.ncols()
        )));
    }
    let gap = (u.transpose() * v - DMatrix::identity(n, n)).norm();
    let tol = pol.residual_tol * (u.norm() * v.norm()).max(1.0);
    if r < n || !(gap <= tol) {
        return Err(Error::Precondition {
            what: "UᵀV = I",
            residual: gap,
        });
    }
    if r == n {
        return Ok((u.clone(), v.clone()));
    }
    let b = trailing_right_singular_vectors(&u.transpose(), r - n);
    let mut vp = DMatrix::<T>::zeros(r, r);
    vp.view_mut((0, 0), (r, n)).copy_from(v);
    vp.view_mut((0, n), (r, r - n)).copy_from(&b);
    let inv = vp
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned("[V | ker Uᵀ] is singular".into()))?;
    let mut up = inv.transpose();
    up.view_mut((0, 0), (r, n)).copy_from(u);
    Ok((up, vp))
}
