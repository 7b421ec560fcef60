//! Commuting embeddings: enlarge a tuple of `n × n` matrices to `N × N`
//! matrices that keep the originals as their top-left blocks and pairwise
//! commute, and read rank upper bounds back off such embeddings.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::bounds::embedding_pair_bound;
use crate::decomposition::{assemble, from_slice_factorization, to_slice_factorization, Decomposition, SliceFactorization};
use crate::eigen::{is_diagonalizable, joint_diagonalize_similarity};
use crate::error::{Error, Result};
use crate::extension::complete_dual_bases;
use crate::matrix::{max_commutator_residual, sqrt};
use crate::policy::TolerancePolicy;
use crate::scalar::Scalar;
use crate::tensor::{Axis, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmbeddingProperties {
    /// `max_{i,j} ‖[Z'_i, Z'_j]‖ / (‖Z'_i‖‖Z'_j‖)`.
    pub pairwise_commuting: f64,
    pub all_diagonalizable: bool,
    /// `max_{i,j} ‖Z'_i Z'_j‖ / (‖Z'_i‖‖Z'_j‖) ≤ residual_tol`.
    pub products_zero: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    pub originals: Vec<DMatrix<T>>,
    pub extended: Vec<DMatrix<T>>,
    pub size: usize,
    pub properties: EmbeddingProperties,
}

impl<T: Scalar> Embedding<T> {
    fn new(originals: Vec<DMatrix<T>>, mut extended: Vec<DMatrix<T>>, pol: &TolerancePolicy) -> Result<Self> {
        let size = extended.first().map_or(0, |z| z.nrows());
        for (z, a) in extended.iter_mut().zip(&originals) {
            let n = a.nrows();
            z.view_mut((0, 0), (n, n)).copy_from(a);
        }
        let properties = properties(&extended, pol)?;
        Ok(Self {
            originals,
            extended,
            size,
            properties,
        })
    }

    pub fn n(&self) -> usize {
        self.originals.first().map_or(0, |a| a.nrows())
    }

    /// Exact equality of every original with the top-left block of its extension.
    pub fn blocks_preserved(&self) -> bool {
        let n = self.n();
        self.originals.len() == self.extended.len()
            && self
                .originals
                .iter()
                .zip(&self.extended)
                .all(|(a, z)| z.nrows() >= n && z.view((0, 0), (n, n)) == *a)
    }

    pub fn is_commuting(&self, pol: &TolerancePolicy) -> bool {
        self.properties.pairwise_commuting <= pol.residual_tol
    }

    /// The `N × N × p` tensor with the extended matrices as z-slices.
    pub fn tensor(&self) -> Result<Tensor3<T>> {
        Tensor3::from_slices(Axis::Z, &self.extended)
    }
}

fn properties<T: Scalar>(zs: &[DMatrix<T>], pol: &TolerancePolicy) -> Result<EmbeddingProperties> {
    let (pairwise_commuting, _) = max_commutator_residual(zs)?;
    let all_diagonalizable = zs.iter().all(|z| is_diagonalizable(z, T::FIELD, pol));
    let mut worst: f64 = 0.0;
    for a in zs {
        for b in zs {
            let scale = a.norm() * b.norm();
            if scale > 0.0 {
                worst = worst.max((a * b).norm() / scale);
            }
        }
    }
    Ok(EmbeddingProperties {
        pairwise_commuting,
        all_diagonalizable,
        products_zero: worst <= pol.residual_tol,
    })
}

fn check_tuple<T: Scalar>(zs: &[DMatrix<T>]) -> Result<usize> {
    let n = zs
        .first()
        .ok_or_else(|| Error::DimensionMismatch("empty matrix tuple".into()))?
        .nrows();
    if let Some(z) = zs.iter().find(|z| z.shape() != (n, n)) {
        return Err(Error::DimensionMismatch(format!(
            "expected {n}x{n} matrices, got {}x{}",
            z.nrows(),
            z.ncols()
        )));
    }
    Ok(n)
}

/// `Z'_i = [[Z_i, −Z_i], [Z_i, −Z_i]]`. Every product `Z'_i Z'_j` vanishes, so
/// the tuple commutes; each `Z'_i` squares to zero and is diagonalizable only
/// when `Z_i = 0`.
pub fn trivial_embed_2n<T: Scalar>(zs: &[DMatrix<T>], pol: &TolerancePolicy) -> Result<Embedding<T>> {
    let n = check_tuple(zs)?;
    let extended = zs
        .iter()
        .map(|z| {
            let mut e = DMatrix::zeros(2 * n, 2 * n);
            e.view_mut((0, 0), (n, n)).copy_from(z);
            e.view_mut((0, n), (n, n)).copy_from(&-z);
            e.view_mut((n, 0), (n, n)).copy_from(z);
            e.view_mut((n, n), (n, n)).copy_from(&-z);
            e
        })
        .collect();
    Embedding::new(zs.to_vec(), extended, pol)
}

/// `[[A₂, A₃], [A₃, A₂]]` and `[[A₃, A₂], [A₂, A₃]]`, which commute for any pair.
pub fn strassen_pair_embed<T: Scalar>(a2: &DMatrix<T>, a3: &DMatrix<T>, pol: &TolerancePolicy) -> Result<Embedding<T>> {
    let pair = [a2.clone(), a3.clone()];
    let n = check_tuple(&pair)?;
    let block = |x: &DMatrix<T>, y: &DMatrix<T>| {
        let mut e = DMatrix::zeros(2 * n, 2 * n);
        e.view_mut((0, 0), (n, n)).copy_from(x);
        e.view_mut((0, n), (n, n)).copy_from(y);
        e.view_mut((n, 0), (n, n)).copy_from(y);
        e.view_mut((n, n), (n, n)).copy_from(x);
        e
    };
    let extended = alloc::vec![block(a2, a3), block(a3, a2)];
    Embedding::new(pair.to_vec(), extended, pol)
}

fn check_decomposition<T: Scalar>(t: &Tensor3<T>, d: &Decomposition<T>, pol: &TolerancePolicy) -> Result<()> {
    if let Some(dims) = d.dims() {
        if dims != t.shape() {
            return Err(Error::DimensionMismatch(format!(
                "decomposition has dimensions {dims:?}, tensor {:?}",
                t.shape()
            )));
        }
    }
    let gap = t.relative_distance(&assemble(d, t.shape())?)?;
    if !(gap <= pol.residual_tol) {
        return Err(Error::Precondition {
            what: "assemble(D) = T",
            residual: gap,
        });
    }
    Ok(())
}

/// Size `r + n` commuting diagonalizable embedding built from an `r`-term
/// decomposition of the tensor with slices `as_`.
///
/// `n` extra terms with zero weights on the given slices realize
/// `I_n − Σ u_i v_iᵀ` through its SVD, so that an extra identity slice would be
/// `U'ᵀV' = I_n`. Completing `U', V'` to dual bases `U''ᵀV'' = I` makes every
/// `Z'_k = U''ᵀ D_k V''` a similarity transform of a diagonal matrix.
pub fn commuting_embed<T: Scalar>(as_: &[DMatrix<T>], d: &Decomposition<T>, pol: &TolerancePolicy) -> Result<Embedding<T>> {
    let n = check_tuple(as_)?;
    let t = Tensor3::from_slices(Axis::Z, as_)?;
    check_decomposition(&t, d, pol)?;
    let f = to_slice_factorization(d);
    let r = d.len();
    let (u, v) = if r == 0 {
        (DMatrix::<T>::zeros(0, n), DMatrix::<T>::zeros(0, n))
    } else {
        (f.u.clone(), f.v.clone())
    };

    let gap = DMatrix::<T>::identity(n, n) - u.transpose() * &v;
    let svd = gap.svd(true, true);
    let (x, yt) = (
        svd.u.ok_or(Error::NoConvergence)?,
        svd.v_t.ok_or(Error::NoConvergence)?,
    );
    let mut up = DMatrix::<T>::zeros(r + n, n);
    let mut vp = DMatrix::<T>::zeros(r + n, n);
    up.view_mut((0, 0), (r, n)).copy_from(&u);
    vp.view_mut((0, 0), (r, n)).copy_from(&v);
    for j in 0..n {
        let s = T::from_real(sqrt(svd.singular_values[j]));
        for a in 0..n {
            up[(r + j, a)] = x[(a, j)] * s;
            vp[(r + j, a)] = yt[(j, a)] * s;
        }
    }
    let (upp, vpp) = complete_dual_bases(&up, &vp, pol)?;
    let diags = (0..as_.len())
        .map(|k| DVector::from_fn(r + n, |i, _| if i < r { f.diags[k][i] } else { T::zero() }))
        .collect();
    let extended = SliceFactorization {
        u: upp,
        v: vpp,
        diags,
    }
    .slices();
    let e = Embedding::new(as_.to_vec(), extended, pol)?;
    if !e.is_commuting(pol) {
        return Err(Error::ResidualTooLarge {
            what: "commutator of the embedding",
            residual: e.properties.pairwise_commuting,
            tolerance: pol.residual_tol,
        });
    }
    Ok(e)
}

/// Size `r` embedding of the slices of `t` (first slice `I_n`) with first
/// extended slice `I_r`, from an `r`-term decomposition whose `w_{i1}` are all
/// nonzero. Terms are rescaled to `w_{i1} = 1`, which gives `UᵀV = I_n`.
pub fn first_slice_identity_embed<T: Scalar>(t: &Tensor3<T>, d: &Decomposition<T>, pol: &TolerancePolicy) -> Result<Embedding<T>> {
    let [m, n, p] = t.shape();
    if m != n || p == 0 {
        return Err(Error::WrongFormat(format!(
            "expected an n x n x p tensor, got {:?}",
            t.shape()
        )));
    }
    let slices = t.slices(Axis::Z);
    let off = (&slices[0] - DMatrix::<T>::identity(n, n)).norm();
    if !(off <= pol.residual_tol * sqrt(n as f64)) {
        return Err(Error::Precondition {
            what: "first slice = I",
            residual: off,
        });
    }
    check_decomposition(t, d, pol)?;
    let mut f = to_slice_factorization(d);
    let r = d.len();
    for i in 0..r {
        let w1 = f.diags[0][i];
        let wnorm = sqrt(f.diags.iter().map(|dk| dk[i].modulus_squared()).sum());
        if w1.modulus() <= pol.rank_rel_tol * wnorm || wnorm == 0.0 {
            return Err(Error::ZeroLeadingWeight { term: i });
        }
        for a in 0..n {
            f.u[(i, a)] *= w1;
        }
        for dk in f.diags.iter_mut() {
            dk[i] /= w1;
        }
        f.diags[0][i] = T::one();
    }
    let (u, v) = complete_dual_bases(&f.u, &f.v, pol)?;
    let mut extended = SliceFactorization { u, v, diags: f.diags }.slices();
    // U'ᵀV' = I holds up to rounding; the first slice is set to it exactly.
    extended[0] = DMatrix::identity(r, r);
    let e = Embedding::new(slices, extended, pol)?;
    if !e.is_commuting(pol) {
        return Err(Error::ResidualTooLarge {
            what: "commutator of the embedding",
            residual: e.properties.pairwise_commuting,
            tolerance: pol.residual_tol,
        });
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankUpperBound<T> {
    pub size: usize,
    /// `N`-term decomposition of the tensor with the original slices.
    pub decomposition: Decomposition<T>,
    pub residual: f64,
}

/// Jointly diagonalize the extended tuple, `Z'_k = P⁻¹ D_k P`, and truncate
/// the resulting `N`-term decomposition to the leading `n × n` block. This
/// certifies `rank ≤ N` for the tensor of originals.
pub fn embedding_to_rank_bound<T: Scalar>(e: &Embedding<T>, pol: &TolerancePolicy, seed: u64) -> Result<RankUpperBound<T>> {
    let n = e.n();
    let jd = joint_diagonalize_similarity(&e.extended, pol, seed)?;
    let f = SliceFactorization {
        u: jd.q_inv.transpose().columns(0, n).into_owned(),
        v: jd.q.columns(0, n).into_owned(),
        diags: jd.diags,
    };
    let decomposition = from_slice_factorization(&f)?;
    let t = Tensor3::from_slices(Axis::Z, &e.originals)?;
    let residual = t.relative_distance(&assemble(&decomposition, t.shape())?)?;
    if !(residual <= pol.residual_tol) {
        return Err(Error::ResidualTooLarge {
            what: "truncated decomposition",
            residual,
            tolerance: pol.residual_tol,
        });
    }
    Ok(RankUpperBound {
        size: e.size,
        decomposition,
        residual,
    })
}

/// Whether every commuting pair of the embedding respects
/// `N ≥ n + ½·rank[A_i, A_j]`. Pairs whose extensions do not commute impose
/// nothing.
pub fn satisfies_pair_bound<T: Scalar>(e: &Embedding<T>, pol: &TolerancePolicy) -> Result<bool> {
    for i in 0..e.originals.len() {
        for j in i + 1..e.originals.len() {
            let (zi, zj) = (&e.extended[i], &e.extended[j]);
            let scale = zi.norm() * zj.norm();
            let c = (zi * zj - zj * zi).norm();
            if c <= pol.residual_tol * scale && !embedding_pair_bound(&e.originals[i], &e.originals[j], e.size, pol)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
