//! Diagonalizability, joint diagonalization by similarity and simultaneous
//! diagonalization by equivalence.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{inverse, max_commutator_residual, singular_values, trailing_right_singular_vectors};
use crate::plant::seeded;
use crate::policy::TolerancePolicy;
use crate::scalar::{to_complex_matrix, Field, Scalar};

/// A group of numerically equal eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub center: Complex64,
    pub members: Vec<usize>,
}

/// Single-linkage clustering: values within `radius` of each other (transitively) merge.
pub fn cluster_eigenvalues(values: &[Complex64], radius: f64) -> Vec<Cluster> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for a in 0..n {
        for b in a + 1..n {
            if (values[a] - values[b]).norm() <= radius {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[rb.max(ra)] = rb.min(ra);
                }
            }
        }
    }
    let mut out: Vec<Cluster> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = alloc::vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_slot[r] {
            Some(s) => out[s].members.push(i),
            None => {
                root_slot[r] = Some(out.len());
                out.push(Cluster {
                    center: Complex64::new(0.0, 0.0),
                    members: alloc::vec![i],
                });
            }
        }
    }
    for c in &mut out {
        let sum: Complex64 = c.members.iter().map(|&i| values[i]).sum();
        c.center = sum / c.members.len() as f64;
    }
    out
}

/// Outcome of the clustered semisimplicity test.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonalizability {
    pub diagonalizable: bool,
    /// Largest `σ_{n−k+1}(M − λI) / ‖M‖_F` over clusters of size `k`.
    pub worst_defect: f64,
    /// Largest `|Im λ| / ‖M‖_F`.
    pub max_imaginary: f64,
    pub clusters: usize,
}

/// Clustered semisimplicity test.
///
/// Eigenvalues are grouped with radius `eig_cluster_tol·‖M‖_F`. For each group
/// of size `k` with center `λ`, `M − λI` must have `k` singular values at most
/// `defect_tol·‖M‖_F`, i.e. the geometric multiplicity matches the algebraic
/// one. Over ℝ every eigenvalue must also lie within `real_axis_tol·‖M‖_F` of
/// the real axis.
pub fn diagonalizability<T: Scalar>(m: &DMatrix<T>, field: Field, pol: &TolerancePolicy) -> Diagonalizability {
    let mut out = Diagonalizability {
        diagonalizable: false,
        worst_defect: 0.0,
        max_imaginary: 0.0,
        clusters: 0,
    };
    if !m.is_square() {
        return out;
    }
    let n = m.nrows();
    let scale = m.norm();
    if n == 0 || scale == 0.0 {
        out.diagonalizable = true;
        out.clusters = usize::from(n > 0);
        return out;
    }
    let Some(eigs) = T::eigenvalues(m) else {
        return out;
    };
    out.max_imaginary = eigs.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale;
    let real_ok = field == Field::Complex || out.max_imaginary <= pol.real_axis_tol;
    let clusters = cluster_eigenvalues(&eigs, pol.eig_cluster_tol * scale);
    out.clusters = clusters.len();
    let mc = to_complex_matrix(m);
    for c in &clusters {
        let mut lambda = c.center;
        if field == Field::Real {
            lambda.im = 0.0;
        }
        let shifted = &mc - DMatrix::<Complex64>::identity(n, n) * lambda;
        let sv = singular_values(&shifted);
        let k = c.members.len();
        out.worst_defect = out.worst_defect.max(sv[n - k] / scale);
    }
    out.diagonalizable = real_ok && out.worst_defect <= pol.defect_tol;
    out
}

pub fn is_diagonalizable<T: Scalar>(m: &DMatrix<T>, field: Field, pol: &TolerancePolicy) -> bool {
    diagonalizability(m, field, pol).diagonalizable
}

/// `M_i = Q⁻¹ diag(diags[i]) Q` for every input matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDiagonalization<T> {
    pub q: DMatrix<T>,
    /// Columns are the common eigenvectors.
    pub q_inv: DMatrix<T>,
    pub diags: Vec<DVector<T>>,
    /// `max_i ‖M_i − Q⁻¹D_iQ‖ / max_i ‖M_i‖`.
    pub residual: f64,
}

const SPLIT_ATTEMPTS: usize = 4;
const OUTER_ATTEMPTS: usize = 4;

fn check_family<T: Scalar>(ms: &[DMatrix<T>]) -> Result<usize> {
    let first = ms
        .first()
        .ok_or_else(|| Error::DimensionMismatch("empty matrix family".into()))?;
    let n = first.nrows();
    for (i, m) in ms.iter().enumerate() {
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "matrix {i} is {}x{}, expected {n}x{n}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    Ok(n)
}

/// Diagonalize commuting, individually diagonalizable matrices with one common basis.
///
/// A random real combination of the family is diagonalized; eigenvalue
/// clusters that stay degenerate after a few fresh combinations are refined by
/// restricting the family to the cluster's eigenspace and recursing.
pub fn joint_diagonalize_similarity<T: Scalar>(
    ms: &[DMatrix<T>],
    pol: &TolerancePolicy,
    seed: u64,
) -> Result<JointDiagonalization<T>> {
    let n = check_family(ms)?;
    let (worst, pair) = max_commutator_residual(ms)?;
    if worst > pol.residual_tol {
        return Err(Error::NotCommuting {
            max_residual: worst,
            pair,
        });
    }
    for (index, m) in ms.iter().enumerate() {
        if !is_diagonalizable(m, T::FIELD, pol) {
            return Err(Error::NotDiagonalizable {
                index,
                field: T::FIELD,
            });
        }
    }
    let scale = ms.iter().map(|m| m.norm()).fold(0.0, f64::max);
    if scale == 0.0 || n <= 1 {
        return Ok(JointDiagonalization {
            q: DMatrix::identity(n, n),
            q_inv: DMatrix::identity(n, n),
            diags: ms.iter().map(|m| m.diagonal()).collect(),
            residual: 0.0,
        });
    }
    let mut rng = seeded(seed);
    let mut best: Option<JointDiagonalization<T>> = None;
    for _ in 0..OUTER_ATTEMPTS {
        let x = match eigenbasis(ms, scale, pol, &mut rng, 0) {
            Ok(x) => x,
            Err(e) => {
                if best.is_none() && matches!(e, Error::NoConvergence) {
                    return Err(e);
                }
                continue;
            }
        };
        let Some(q) = x.clone().try_inverse() else {
            continue;
        };
        let diags: Vec<DVector<T>> = ms.iter().map(|m| (&q * m * &x).diagonal()).collect();
        let residual = ms
            .iter()
            .zip(&diags)
            .map(|(m, d)| (m - crate::matrix::scale_columns(&x, d) * &q).norm())
            .fold(0.0, f64::max)
            / scale;
        let candidate = JointDiagonalization {
            q,
            q_inv: x,
            diags,
            residual,
        };
        if residual <= pol.residual_tol {
            return Ok(candidate);
        }
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(candidate);
        }
    }
    Err(match best {
        Some(b) => Error::ResidualTooLarge {
            what: "joint diagonalization",
            residual: b.residual,
            tolerance: pol.residual_tol,
        },
        None => Error::IllConditioned("no stable common eigenbasis found".into()),
    })
}

/// Columns form a common eigenbasis of the (commuting) family.
fn eigenbasis<T: Scalar, R: Rng>(
    ms: &[DMatrix<T>],
    global_scale: f64,
    pol: &TolerancePolicy,
    rng: &mut R,
    depth: usize,
) -> Result<DMatrix<T>> {
    let n = ms[0].nrows();
    if n == 1 {
        return Ok(DMatrix::identity(1, 1));
    }
    let nf = T::from_real(n as f64);
    let devs: Vec<DMatrix<T>> = ms
        .iter()
        .map(|m| m - DMatrix::identity(n, n) * (m.trace() / nf))
        .collect();
    let dev_scale = devs.iter().map(|d| d.norm()).fold(0.0, f64::max);
    if dev_scale <= pol.rank_rel_tol * (n as f64) * global_scale {
        return Ok(DMatrix::identity(n, n));
    }
    if depth > 2 * n + 4 {
        return Err(Error::IllConditioned("eigenspace refinement does not terminate".into()));
    }

    let mut best: Option<(Vec<Cluster>, DMatrix<T>)> = None;
    for _ in 0..SPLIT_ATTEMPTS {
        let mut c = DMatrix::<T>::zeros(n, n);
        for d in &devs {
            let coef: f64 = f64::gaussian(rng);
            c += d * T::from_real(coef / d.norm().max(f64::MIN_POSITIVE));
        }
        let mut eigs = T::eigenvalues(&c).ok_or(Error::NoConvergence)?;
        if T::FIELD == Field::Real {
            for z in &mut eigs {
                z.im = 0.0;
            }
        }
        let clusters = cluster_eigenvalues(&eigs, pol.eig_cluster_tol * c.norm());
        let done = clusters.len() == n;
        if best.as_ref().is_none_or(|(b, _)| clusters.len() > b.len()) {
            best = Some((clusters, c));
        }
        if done {
            break;
        }
    }
    let (clusters, c) = best.expect("at least one attempt");
    if clusters.len() == 1 {
        return Err(Error::IllConditioned(
            "random combinations do not separate the spectrum".into(),
        ));
    }

    let mut x = DMatrix::<T>::zeros(n, n);
    let mut col = 0;
    for cl in &clusters {
        let k = cl.members.len();
        let shifted = &c - DMatrix::identity(n, n) * T::from_c64(cl.center);
        let mut basis = trailing_right_singular_vectors(&shifted, k);
        if k > 1 {
            let restricted: Vec<DMatrix<T>> =
                ms.iter().map(|m| basis.adjoint() * m * &basis).collect();
            let y = eigenbasis(&restricted, global_scale, pol, rng, depth + 1)?;
            basis = basis * y;
        }
        x.view_mut((0, col), (n, k)).copy_from(&basis);
        col += k;
    }
    Ok(x)
}

/// `A_i = P diag(diags[i]) Q` for every input matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SimDiagEquivalence<T> {
    pub p: DMatrix<T>,
    pub q: DMatrix<T>,
    pub diags: Vec<DVector<T>>,
}

impl<T: Scalar> SimDiagEquivalence<T> {
    pub fn reconstruct(&self, i: usize) -> DMatrix<T> {
        crate::matrix::scale_columns(&self.p, &self.diags[i]) * &self.q
    }
}

/// Simultaneous diagonalization by equivalence through the family `A⁻¹A_i`:
/// if `A⁻¹A_i = Q⁻¹D_iQ` then `A_i = P D_i Q` with `P = A Q⁻¹`.
pub fn simdiag_equivalence<T: Scalar>(
    as_: &[DMatrix<T>],
    a: &DMatrix<T>,
    pol: &TolerancePolicy,
    seed: u64,
) -> Result<SimDiagEquivalence<T>> {
    let n = check_family(as_)?;
    if a.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, family is {n}x{n}",
            a.nrows(),
            a.ncols()
        )));
    }
    let ainv = inverse(a, pol)?;
    let ms: Vec<DMatrix<T>> = as_.iter().map(|ai| &ainv * ai).collect();
    let jd = joint_diagonalize_similarity(&ms, pol, seed)?;
    Ok(SimDiagEquivalence {
        p: a * &jd.q_inv,
        q: jd.q,
        diags: jd.diags,
    })
}
