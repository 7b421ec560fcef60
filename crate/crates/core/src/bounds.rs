//! Rank lower bounds for `n × n × 3` tensors: the commutator bound, the Koszul
//! flattening bound, and the size bound for commuting embeddings of a pair.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{check_invertible, generalized_commutator, linear_combination, numeric_rank, numeric_rank_with_scale};
use crate::plant::seeded;
use crate::policy::TolerancePolicy;
use crate::scalar::Scalar;
use crate::tensor::{Axis, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundMethod {
    Strassen,
    Koszul,
    EmbeddingPair,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundReport {
    pub value: usize,
    pub method: BoundMethod,
    pub applies_to_border_rank: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

fn format_nn3<T: Scalar>(t: &Tensor3<T>) -> Result<usize> {
    let [m, n, p] = t.shape();
    if m != n || p != 3 {
        return Err(Error::WrongFormat(format!(
            "expected an n x n x 3 tensor, got {:?}",
            t.shape()
        )));
    }
    Ok(n)
}

/// `n + ⌈rank(A₂A₁⁻¹A₃ − A₃A₁⁻¹A₂) / 2⌉` from the z-slices `A₁, A₂, A₃`.
///
/// Rounding up is sound because rank is an integer. Slices are used as given;
/// compose with [`rotate_to_invertible`] when `A₁` is singular.
pub fn strassen_bound<T: Scalar>(t: &Tensor3<T>, pol: &TolerancePolicy) -> Result<BoundReport> {
    let n = format_nn3(t)?;
    let z = t.slices(Axis::Z);
    let g = generalized_commutator(&z[0], &z[1], &z[2], pol)?;
    let rank = numeric_rank_with_scale(&g.matrix, g.scale, pol);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("commutator_rank".into(), rank as f64);
    diagnostics.insert("a1_condition".into(), g.condition);
    diagnostics.insert(
        "commutator_relative_norm".into(),
        if g.scale > 0.0 { g.matrix.norm() / g.scale } else { 0.0 },
    );
    Ok(BoundReport {
        value: n + rank.div_ceil(2),
        method: BoundMethod::Strassen,
        applies_to_border_rank: true,
        diagnostics,
    })
}

/// Replace the z-slices `A_1..A_3` by `Σ c_k A_k` followed by the remaining
/// slices in order, dropping the slice `j` with the largest `|c_j|`.
///
/// The slice span is unchanged, hence so is the rank.
pub fn slice_rotation<T: Scalar>(t: &Tensor3<T>, coeffs: &[T]) -> Result<Tensor3<T>> {
    format_nn3(t)?;
    if coeffs.len() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "expected 3 coefficients, got {}",
            coeffs.len()
        )));
    }
    let pivot = (0..3)
        .max_by(|&a, &b| coeffs[a].modulus().total_cmp(&coeffs[b].modulus()))
        .expect("three coefficients");
    if coeffs[pivot].is_zero() {
        return Err(Error::Precondition {
            what: "rotation coefficients must not all vanish",
            residual: 0.0,
        });
    }
    let z = t.slices(Axis::Z);
    let mut lead = if coeffs[pivot] == T::one() {
        z[pivot].clone()
    } else {
        &z[pivot] * coeffs[pivot]
    };
    for k in (0..3).filter(|&k| k != pivot && !coeffs[k].is_zero()) {
        lead += &z[k] * coeffs[k];
    }
    let mut slices = alloc::vec![lead];
    slices.extend((0..3).filter(|&k| k != pivot).map(|k| z[k].clone()));
    Tensor3::from_slices(Axis::Z, &slices)
}

/// An invertible combination `Σ c_k M_k` of a matrix family.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertibleCombination<T> {
    pub coeffs: Vec<T>,
    pub matrix: DMatrix<T>,
    /// `σ_min / σ_max` of `matrix`.
    pub relative_smallest_singular_value: f64,
    pub trials: usize,
}

/// Search the span of square matrices for an invertible member: first the
/// first matrix itself, then up to `pol.invertible_trials` seeded Gaussian
/// combinations with real coefficients.
pub fn invertible_combination<T: Scalar>(
    ms: &[DMatrix<T>],
    pol: &TolerancePolicy,
    seed: u64,
) -> Result<InvertibleCombination<T>> {
    if ms.is_empty() {
        return Err(Error::NoInvertibleCombination { trials: 0, best: 0.0 });
    }
    let mut rng = seeded(seed);
    let mut best: f64 = 0.0;
    for trial in 0..=pol.invertible_trials {
        let coeffs: Vec<T> = if trial == 0 {
            (0..ms.len()).map(|k| if k == 0 { T::one() } else { T::zero() }).collect()
        } else {
            (0..ms.len()).map(|_| T::from_real(f64::gaussian(&mut rng))).collect()
        };
        let matrix = if trial == 0 {
            ms[0].clone()
        } else {
            linear_combination(ms, &coeffs)
        };
        match check_invertible(&matrix, pol) {
            Ok((smin, smax)) => {
                return Ok(InvertibleCombination {
                    coeffs,
                    matrix,
                    relative_smallest_singular_value: if smax > 0.0 { smin / smax } else { 0.0 },
                    trials: trial + 1,
                })
            }
            Err(Error::Singular {
                smallest_singular_value,
                largest_singular_value,
            }) => {
                if largest_singular_value > 0.0 {
                    best = best.max(smallest_singular_value / largest_singular_value);
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoInvertibleCombination {
        trials: pol.invertible_trials + 1,
        best,
    })
}

/// Result of [`rotate_to_invertible`].
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation<T> {
    pub tensor: Tensor3<T>,
    pub coeffs: Vec<T>,
    pub trials: usize,
}

/// [`slice_rotation`] with coefficients found by [`invertible_combination`].
/// A tensor whose first slice is already invertible comes back unchanged.
pub fn rotate_to_invertible<T: Scalar>(t: &Tensor3<T>, pol: &TolerancePolicy, seed: u64) -> Result<Rotation<T>> {
    format_nn3(t)?;
    let comb = invertible_combination(&t.slices(Axis::Z), pol, seed)?;
    let tensor = slice_rotation(t, &comb.coeffs)?;
    Ok(Rotation {
        tensor,
        coeffs: comb.coeffs,
        trials: comb.trials,
    })
}

/// `L(T) = [[0, A₂, −A₃], [A₃, A₁, 0], [A₂, 0, A₁]]` built from the z-slices.
pub fn koszul_flattening<T: Scalar>(t: &Tensor3<T>) -> Result<DMatrix<T>> {
    let n = format_nn3(t)?;
    let z = t.slices(Axis::Z);
    let mut l = DMatrix::<T>::zeros(3 * n, 3 * n);
    let mut put = |bi: usize, bj: usize, m: &DMatrix<T>| {
        l.view_mut((bi * n, bj * n), (n, n)).copy_from(m);
    };
    put(0, 1, &z[1]);
    put(0, 2, &(-&z[2]));
    put(1, 0, &z[2]);
    put(1, 1, &z[0]);
    put(2, 0, &z[1]);
    put(2, 2, &z[0]);
    Ok(l)
}

/// `⌈rank(L(T)) / 2⌉`.
pub fn koszul_bound<T: Scalar>(t: &Tensor3<T>, pol: &TolerancePolicy) -> Result<BoundReport> {
    let l = koszul_flattening(t)?;
    let rank = numeric_rank(&l, pol);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("flattening_rank".into(), rank as f64);
    Ok(BoundReport {
        value: rank.div_ceil(2),
        method: BoundMethod::Koszul,
        applies_to_border_rank: true,
        diagnostics,
    })
}

/// `|det L(T) − det(A₁)²·det(−G)| / max(1, |det L(T)|)` with `G` the
/// generalized commutator. Determinants come from LU with partial pivoting.
///
/// The Schur complement of the block `diag(A₁, A₁)` in `L(T)` is
/// `−[A₂, −A₃] diag(A₁, A₁)⁻¹ [A₃; A₂] = −G`, hence the sign `(−1)^n` relative
/// to `det(A₁)² det(G)`.
pub fn det_identity_residual<T: Scalar>(t: &Tensor3<T>, pol: &TolerancePolicy) -> Result<f64> {
    format_nn3(t)?;
    let z = t.slices(Axis::Z);
    let g = generalized_commutator(&z[0], &z[1], &z[2], pol)?;
    let det_l = koszul_flattening(t)?.determinant();
    let det_a1 = z[0].clone().determinant();
    let rhs = det_a1 * det_a1 * (-g.matrix).determinant();
    Ok((det_l - rhs).modulus() / det_l.modulus().max(1.0))
}

fn pair_commutator_rank<T: Scalar>(a2: &DMatrix<T>, a3: &DMatrix<T>, pol: &TolerancePolicy) -> Result<(usize, usize)> {
    let n = a2.nrows();
    if !a2.is_square() || a3.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "pair must be two square matrices of one size, got {:?} and {:?}",
            a2.shape(),
            a3.shape()
        )));
    }
    let p = a2 * a3;
    let q = a3 * a2;
    let scale = p.norm() + q.norm();
    Ok((n, numeric_rank_with_scale(&(p - q), scale, pol)))
}

/// Whether size `N` is not excluded for a commuting embedding of the pair,
/// i.e. `2N ≥ 2n + rank[A₂, A₃]`.
pub fn embedding_pair_bound<T: Scalar>(a2: &DMatrix<T>, a3: &DMatrix<T>, size: usize, pol: &TolerancePolicy) -> Result<bool> {
    let (n, c) = pair_commutator_rank(a2, a3, pol)?;
    Ok(2 * size >= 2 * n + c)
}

/// Smallest embedding size not excluded by [`embedding_pair_bound`]: `n + ⌈rank[A₂,A₃]/2⌉`.
pub fn embedding_pair_report<T: Scalar>(a2: &DMatrix<T>, a3: &DMatrix<T>, pol: &TolerancePolicy) -> Result<BoundReport> {
    let (n, c) = pair_commutator_rank(a2, a3, pol)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("commutator_rank".into(), c as f64);
    Ok(BoundReport {
        value: n + c.div_ceil(2),
        method: BoundMethod::EmbeddingPair,
        applies_to_border_rank: false,
        diagnostics,
    })
}
