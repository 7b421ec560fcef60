//! Independent decompositions: detection through an invertible slice
//! combination, Jennrich-style reconstruction, and rank certificates that pad
//! a decomposition to square invertible factors.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::bounds::{invertible_combination, InvertibleCombination};
use crate::decomposition::{assemble, to_slice_factorization, Decomposition, SliceFactorization, Term};
use crate::eigen::{diagonalizability, simdiag_equivalence};
use crate::error::{Error, Result};
use crate::matrix::{check_invertible, inverse, linear_combination, max_commutator_residual, numeric_rank};
use crate::ortho::{Check, Verification};
use crate::plant::{gaussian_matrix, seeded};
use crate::policy::TolerancePolicy;
use crate::scalar::Scalar;
use crate::tensor::{is_subtensor, Axis, SubtensorMode, Tensor3};
use alloc::string::String;

#[derive(Debug, Clone, PartialEq)]
pub struct IndordiReport<T> {
    pub passed: bool,
    /// Coefficients of the invertible combination `Z = Σ c_k Z_k` that was used.
    pub witness_coeffs: Vec<T>,
    pub witness_relative_smallest_singular_value: f64,
    /// Largest relative commutator among the `Z⁻¹Z_i`.
    pub max_commutator: f64,
    /// First `i` with `Z⁻¹Z_i` not diagonalizable.
    pub non_diagonalizable: Option<usize>,
    pub max_defect: f64,
}

fn square_slices<T: Scalar>(s: &Tensor3<T>) -> Result<Vec<DMatrix<T>>> {
    let [m, n, _] = s.shape();
    if m != n {
        return Err(Error::WrongFormat(format!(
            "expected an r x r x p tensor, got {:?}",
            s.shape()
        )));
    }
    Ok(s.slices(Axis::Z))
}

fn evaluate_at<T: Scalar>(z: &[DMatrix<T>], comb: &InvertibleCombination<T>, pol: &TolerancePolicy) -> Result<IndordiReport<T>> {
    let zinv = inverse(&comb.matrix, pol)?;
    let ms: Vec<DMatrix<T>> = z.iter().map(|zi| &zinv * zi).collect();
    let (max_commutator, _) = max_commutator_residual(&ms)?;
    let mut non_diagonalizable = None;
    let mut max_defect: f64 = 0.0;
    for (i, m) in ms.iter().enumerate() {
        let d = diagonalizability(m, T::FIELD, pol);
        max_defect = max_defect.max(d.worst_defect);
        if !d.diagonalizable && non_diagonalizable.is_none() {
            non_diagonalizable = Some(i);
        }
    }
    Ok(IndordiReport {
        passed: max_commutator <= pol.residual_tol && non_diagonalizable.is_none(),
        witness_coeffs: comb.coeffs.clone(),
        witness_relative_smallest_singular_value: comb.relative_smallest_singular_value,
        max_commutator,
        non_diagonalizable,
        max_defect,
    })
}

/// Whether `S` (`r × r × p`) has an independent decomposition: find an
/// invertible `Z` in the z-slice span and test that the `Z⁻¹Z_i` commute and
/// are diagonalizable. One invertible `Z` decides the question.
pub fn indordi_check<T: Scalar>(s: &Tensor3<T>, pol: &TolerancePolicy, seed: u64) -> Result<IndordiReport<T>> {
    let z = square_slices(s)?;
    let comb = invertible_combination(&z, pol, seed)?;
    evaluate_at(&z, &comb, pol)
}

const JENNRICH_ATTEMPTS: u64 = 5;

/// Recover an `r`-term decomposition with linearly independent `u` and `v`
/// families from `Z_i = P D_i Q`: `u_i` is column `i` of `P`, `v_i` row `i` of
/// `Q`, `w_i` the `i`-th diagonal entries. Fresh combinations are tried when
/// eigenvalues cluster.
pub fn jennrich_decompose<T: Scalar>(s: &Tensor3<T>, pol: &TolerancePolicy, seed: u64) -> Result<Decomposition<T>> {
    let z = square_slices(s)?;
    let report = indordi_check(s, pol, seed)?;
    if report.max_commutator > pol.residual_tol {
        return Err(Error::NotCommuting {
            max_residual: report.max_commutator,
            pair: (0, 0),
        });
    }
    if let Some(index) = report.non_diagonalizable {
        return Err(Error::NotDiagonalizable { index, field: T::FIELD });
    }
    let shape = s.shape();
    let r = shape[0];
    let mut rng = seeded(seed ^ 0x6a09_e667_f3bc_c908);
    let mut best = f64::INFINITY;
    for attempt in 0..JENNRICH_ATTEMPTS {
        let comb = if attempt == 0 {
            invertible_combination(&z, pol, seed)?
        } else {
            random_invertible_combination(&z, pol, &mut rng)?
        };
        let Ok(sd) = simdiag_equivalence(&z, &comb.matrix, pol, seed.wrapping_add(attempt)) else {
            continue;
        };
        let terms = (0..r)
            .map(|i| {
                let u = sd.p.column(i).into_owned();
                let v = sd.q.row(i).transpose();
                let (nu, nv) = (u.norm(), v.norm());
                let w = DVector::from_fn(z.len(), |k, _| sd.diags[k][i] * T::from_real(nu * nv));
                Term::new(u / T::from_real(nu), v / T::from_real(nv), w)
            })
            .collect();
        let Ok(d) = Decomposition::new(terms) else {
            continue;
        };
        let residual = s.relative_distance(&assemble(&d, shape)?)?;
        if residual <= pol.residual_tol {
            return Ok(d);
        }
        best = best.min(residual);
    }
    Err(Error::IllConditioned(format!(
        "no well-separated combination after {JENNRICH_ATTEMPTS} attempts (best residual {best:e})"
    )))
}

/// Seeded Gaussian combination that is numerically invertible.
fn random_invertible_combination<T: Scalar>(
    ms: &[DMatrix<T>],
    pol: &TolerancePolicy,
    rng: &mut impl Rng,
) -> Result<InvertibleCombination<T>> {
    let mut best: f64 = 0.0;
    for trial in 0..pol.invertible_trials {
        let coeffs: Vec<T> = (0..ms.len()).map(|_| T::from_real(f64::gaussian(rng))).collect();
        let matrix = linear_combination(ms, &coeffs);
        match check_invertible(&matrix, pol) {
            Ok((smin, smax)) => {
                return Ok(InvertibleCombination {
                    coeffs,
                    matrix,
                    relative_smallest_singular_value: smin / smax,
                    trials: trial + 1,
                })
            }
            Err(Error::Singular {
                smallest_singular_value,
                largest_singular_value,
            }) if largest_singular_value > 0.0 => {
                best = best.max(smallest_singular_value / largest_singular_value);
            }
            Err(Error::Singular { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoInvertibleCombination {
        trials: pol.invertible_trials,
        best,
    })
}

pub const CHECK_INVERTIBLE_SPAN: &str = "invertible_span";
pub const CHECK_COMMUTE_DIAGONALIZABLE: &str = "commute_diagonalizable";
pub const CHECK_SUBTENSOR: &str = "subtensor";
pub const CHECK_SIZE: &str = "size";

/// Witness for `rank(T) ≤ r` (`srank` when `symmetric`): an `r × r × p` (or
/// symmetric `r × r × r`) tensor `S` with an invertible z-slice combination
/// `Z` such that the `Z⁻¹S_k` commute and are diagonalizable, containing `T`
/// as a leading block.
#[derive(Debug, Clone, PartialEq)]
pub struct IndCertificate<T> {
    pub t: Tensor3<T>,
    pub s: Tensor3<T>,
    pub r: usize,
    pub symmetric: bool,
    pub checks: BTreeMap<String, Check>,
    /// Coefficients of the invertible combination of the z-slices of `S`.
    pub witness_z: Vec<T>,
    pub seed: u64,
}

/// Append seeded Gaussian columns to the `r × n` matrix `u` until it is `r × r`
/// and numerically invertible.
fn pad_to_invertible<T: Scalar>(u: &DMatrix<T>, pol: &TolerancePolicy, rng: &mut impl Rng) -> Result<DMatrix<T>> {
    let (r, n) = u.shape();
    for _ in 0..10 {
        let mut full = DMatrix::<T>::zeros(r, r);
        full.view_mut((0, 0), (r, n)).copy_from(u);
        if r > n {
            full.view_mut((0, n), (r, r - n)).copy_from(&gaussian_matrix::<T>(r, r - n, rng));
        }
        if numeric_rank(&full, pol) == r {
            return Ok(full);
        }
    }
    Err(Error::IllConditioned(
        "padding columns stayed rank deficient after 10 draws".into(),
    ))
}

/// Pad the slice factorization `T_k = Uᵀ D_k V` to square invertible
/// `U' = [U | G]`, `V' = [V | H]` and set `S_k = U'ᵀ D_k V'` (ordinary) or
/// `S = Σ v'_i^{⊗3}` with the rows of `U'` (symmetric). The leading block of
/// `S` is then overwritten with `T` exactly.
pub fn build_ind_certificate<T: Scalar>(
    t: &Tensor3<T>,
    d: &Decomposition<T>,
    symmetric: bool,
    pol: &TolerancePolicy,
    seed: u64,
) -> Result<IndCertificate<T>> {
    let [m, n, _] = t.shape();
    if m != n {
        return Err(Error::WrongFormat(format!(
            "expected an n x n x p tensor, got {:?}",
            t.shape()
        )));
    }
    if symmetric && !(t.is_symmetric() && d.is_symmetric()) {
        return Err(Error::FlavorMismatch(
            "symmetric certificates need a symmetric tensor and decomposition".into(),
        ));
    }
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
    let r = d.len();
    if r < n {
        return Err(Error::Precondition {
            what: "r >= n",
            residual: (n - r) as f64,
        });
    }
    invertible_combination(&t.slices(Axis::Z), pol, seed)?;

    let f = to_slice_factorization(d);
    let mut rng = seeded(seed);
    let up = pad_to_invertible(&f.u, pol, &mut rng)?;
    let mut s = if symmetric {
        let rows = (0..r).map(|i| up.row(i).transpose()).collect();
        assemble(&Decomposition::symmetric(rows)?, [r, r, r])?.symmetrized()?
    } else {
        let vp = pad_to_invertible(&f.v, pol, &mut rng)?;
        let slices = SliceFactorization {
            u: up,
            v: vp,
            diags: f.diags,
        }
        .slices();
        Tensor3::from_slices(Axis::Z, &slices)?
    };
    s.copy_block_from(t)?;
    let mut cert = IndCertificate {
        t: t.clone(),
        s,
        r,
        symmetric,
        checks: BTreeMap::new(),
        witness_z: Vec::new(),
        seed,
    };
    let v = verify_ind_certificate(&cert, pol);
    cert.checks = v.checks;
    if let Ok(comb) = invertible_combination(&cert.s.slices(Axis::Z), pol, seed) {
        cert.witness_z = comb.coeffs;
    }
    Ok(cert)
}

/// Re-evaluate an [`IndCertificate`]: the size of `S`, (i) an invertible
/// combination in the span, (ii) the commuting/diagonalizable test at that
/// witness and at `pol.witness_checks` further random invertible
/// combinations, (iii) the exact subtensor relation. Randomness comes from
/// `cert.seed`.
pub fn verify_ind_certificate<T: Scalar>(cert: &IndCertificate<T>, pol: &TolerancePolicy) -> Verification {
    let seed = cert.seed;
    let mut checks = BTreeMap::new();
    let [a, b, c] = cert.s.shape();
    let n = cert.t.shape()[0];
    let size_ok = a == cert.r && b == cert.r && (!cert.symmetric || c == cert.r) && cert.r >= n;
    checks.insert(
        CHECK_SIZE.into(),
        Check {
            passed: size_ok,
            metric: a as f64,
        },
    );

    let z = cert.s.slices(Axis::Z);
    let witness = if a == b { invertible_combination(&z, pol, seed).ok() } else { None };
    checks.insert(
        CHECK_INVERTIBLE_SPAN.into(),
        Check {
            passed: witness.is_some(),
            metric: witness.as_ref().map_or(0.0, |w| w.relative_smallest_singular_value),
        },
    );

    let mut ok = witness.is_some();
    let mut metric: f64 = 0.0;
    if let Some(w) = &witness {
        let mut rng = seeded(seed ^ 0xbb67_ae85_84ca_a73b);
        let mut combs = alloc::vec![w.clone()];
        for _ in 0..pol.witness_checks {
            match random_invertible_combination(&z, pol, &mut rng) {
                Ok(cmb) => combs.push(cmb),
                Err(_) => ok = false,
            }
        }
        for cmb in &combs {
            match evaluate_at(&z, cmb, pol) {
                Ok(rep) => {
                    metric = metric.max(rep.max_commutator);
                    ok &= rep.passed;
                }
                Err(_) => ok = false,
            }
        }
    }
    checks.insert(CHECK_COMMUTE_DIAGONALIZABLE.into(), Check { passed: ok, metric });

    let mode = if cert.symmetric {
        SubtensorMode::Cube
    } else {
        SubtensorMode::SliceBlock
    };
    let sub = is_subtensor(&cert.t, &cert.s, mode).unwrap_or(false);
    checks.insert(
        CHECK_SUBTENSOR.into(),
        Check {
            passed: sub,
            metric: if sub { 0.0 } else { 1.0 },
        },
    );
    Verification::from_checks(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{planted_independent, planted_jordan_violation, random_decomposition};
    use num_complex::Complex64;

    fn pol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        m[(i, j)] = 1.0;
        m
    }

    #[test]
    fn planted_independent_passes_and_recovers() {
        for seed in 0..20 {
            let r = 2 + (seed as usize % 7);
            let p = 2 + (seed as usize % 4);
            let mut rng = seeded(seed);
            let planted = planted_independent::<f64>(r, p, &mut rng);
            assert!(indordi_check(&planted.tensor, &pol(), seed).unwrap().passed);
            let d = jennrich_decompose(&planted.tensor, &pol(), seed).unwrap();
            assert_eq!(d.len(), r);
            let back = assemble(&d, [r, r, p]).unwrap();
            assert!(planted.tensor.relative_distance(&back).unwrap() < 1e-8);

            let planted = planted_independent::<Complex64>(r, p, &mut rng);
            let d = jennrich_decompose(&planted.tensor, &pol(), seed).unwrap();
            let back = assemble(&d, [r, r, p]).unwrap();
            assert!(planted.tensor.relative_distance(&back).unwrap() < 1e-8);
        }
    }

    #[test]
    fn jordan_plants_fail() {
        for seed in 0..20 {
            let r = 2 + (seed as usize % 7);
            let mut rng = seeded(seed);
            let t = planted_jordan_violation::<f64>(r, 3, &mut rng);
            let rep = indordi_check(&t, &pol(), seed).unwrap();
            assert!(!rep.passed, "seed {seed}");
            assert!(jennrich_decompose(&t, &pol(), seed).is_err());
        }
    }

    #[test]
    fn identity_and_nilpotent_slices() {
        let t = Tensor3::from_slices(Axis::Z, &[DMatrix::identity(2, 2), unit(2, 0, 1)]).unwrap();
        let rep = indordi_check(&t, &pol(), 0).unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.non_diagonalizable, Some(1));
    }

    #[test]
    fn diagonal_tensor() {
        let n = 4;
        let t = Tensor3::<f64>::from_fn([n, n, n], |i, j, k| if i == j && j == k { (i + 1) as f64 } else { 0.0 });
        assert!(indordi_check(&t, &pol(), 0).unwrap().passed);
        let d = jennrich_decompose(&t, &pol(), 0).unwrap();
        for tm in d.terms() {
            assert_eq!(tm.u.iter().filter(|x| x.abs() > 1e-10).count(), 1);
            assert_eq!(tm.v.iter().filter(|x| x.abs() > 1e-10).count(), 1);
        }
    }

    #[test]
    fn singular_span_is_refused() {
        let t = Tensor3::from_slices(Axis::Z, &[unit(3, 0, 1), unit(3, 1, 2), unit(3, 0, 2)]).unwrap();
        assert!(matches!(
            jennrich_decompose(&t, &pol(), 0),
            Err(Error::NoInvertibleCombination { .. })
        ));
    }

    #[test]
    fn diagonal_certificate_is_trivial() {
        let n = 3;
        let t = Tensor3::<f64>::from_fn([n, n, 2], |i, j, k| if i == j { (i + k + 1) as f64 } else { 0.0 });
        let terms = (0..n)
            .map(|i| {
                let e = DVector::from_fn(n, |a, _| if a == i { 1.0 } else { 0.0 });
                Term::new(e.clone(), e, DVector::from_fn(2, |k, _| (i + k + 1) as f64))
            })
            .collect();
        let d = Decomposition::new(terms).unwrap();
        let cert = build_ind_certificate(&t, &d, false, &pol(), 0).unwrap();
        assert_eq!(cert.s, t);
        assert!(cert.checks.values().all(|c| c.passed));
    }

    #[test]
    fn certificates_and_mutations() {
        let mut rng = seeded(8);
        let d = random_decomposition::<f64>([3, 3, 3], 5, &mut rng);
        let t = assemble(&d, [3, 3, 3]).unwrap();
        let cert = build_ind_certificate(&t, &d, false, &pol(), 3).unwrap();
        assert_eq!(cert.s.shape(), [5, 5, 3]);
        assert!(verify_ind_certificate(&cert, &pol()).passed, "{:?}", cert.checks);

        let mut bad = cert.clone();
        bad.t.set(2, 2, 0, bad.t[(2, 2, 0)] + 1.0);
        assert_eq!(verify_ind_certificate(&bad, &pol()).failing(), alloc::vec![CHECK_SUBTENSOR]);

        let mut jordan = cert.clone();
        let mut slices = jordan.s.slices(Axis::Z);
        slices.push(unit(5, 0, 1));
        jordan.s = Tensor3::from_slices(Axis::Z, &slices).unwrap();
        assert_eq!(
            verify_ind_certificate(&jordan, &pol()).failing(),
            alloc::vec![CHECK_COMMUTE_DIAGONALIZABLE]
        );

        let mut small = cert.clone();
        small.r -= 1;
        assert_eq!(verify_ind_certificate(&small, &pol()).failing(), alloc::vec![CHECK_SIZE]);
    }

    #[test]
    fn symmetric_certificate() {
        let mut rng = seeded(9);
        let xs = (0..4).map(|_| crate::plant::gaussian_vector::<Complex64>(3, &mut rng)).collect();
        let d = Decomposition::symmetric(xs).unwrap();
        let t = assemble(&d, [3, 3, 3]).unwrap().symmetrized().unwrap();
        let cert = build_ind_certificate(&t, &d, true, &pol(), 1).unwrap();
        assert_eq!(cert.s.shape(), [4, 4, 4]);
        assert!(cert.s.is_symmetric());
        assert!(cert.checks.values().all(|c| c.passed), "{:?}", cert.checks);
    }
}
