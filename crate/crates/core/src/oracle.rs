//! Desk-scale rank oracle: CP-ALS upper bounds, flattening/Strassen/Koszul
//! lower bounds, and the bracket combining them.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::bounds::{koszul_bound, rotate_to_invertible, strassen_bound};
use crate::decomposition::Decomposition;
use crate::error::Result;
use crate::matrix::{numeric_rank, sqrt};
use crate::plant::{gaussian_matrix, seeded};
use crate::policy::TolerancePolicy;
use crate::scalar::Scalar;
use crate::tensor::{Axis, Tensor3};

#[derive(Debug, Clone, PartialEq)]
pub struct AlsFit<T> {
    pub decomposition: Decomposition<T>,
    /// `‖T − assemble(D)‖ / ‖T‖` (absolute when `T = 0`).
    pub residual: f64,
    /// Residual after each accepted sweep of the winning restart.
    pub history: Vec<f64>,
    /// Index of the winning restart.
    pub restart: usize,
}

fn seed_for(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn residual_of<T: Scalar>(t: &Tensor3<T>, a: &DMatrix<T>, b: &DMatrix<T>, c: &DMatrix<T>) -> f64 {
    let [m, n, p] = t.shape();
    let r = a.ncols();
    let mut diff = 0.0;
    for i in 0..m {
        for j in 0..n {
            for k in 0..p {
                let mut s = T::zero();
                for l in 0..r {
                    s += a[(i, l)] * b[(j, l)] * c[(k, l)];
                }
                diff += (t[(i, j, k)] - s).modulus_squared();
            }
        }
    }
    let scale = t.norm();
    if scale > 0.0 {
        sqrt(diff) / scale
    } else {
        sqrt(diff)
    }
}

/// Least-squares update of the factor whose rows are indexed by `axis`:
/// `min_F ‖T_(axis) − F Kᵀ‖` with `K` the Khatri–Rao product of the others.
fn update<T: Scalar>(t: &Tensor3<T>, axis: Axis, f1: &DMatrix<T>, f2: &DMatrix<T>) -> Option<DMatrix<T>> {
    let unfolded = t.unfold(axis);
    let r = f1.ncols();
    let rows2 = f2.nrows();
    // Column c of the unfolding pairs the remaining two indices as c / rows2, c % rows2.
    let k = DMatrix::from_fn(unfolded.ncols(), r, |c, l| f1[(c / rows2, l)] * f2[(c % rows2, l)]);
    let svd = k.svd(true, true);
    let cutoff = svd.singular_values.max() * 1e-13;
    let sol = svd.solve(&unfolded.transpose(), cutoff).ok()?;
    Some(sol.transpose())
}

/// Rescale columns so that the three factors of each term have equal norm.
fn balance<T: Scalar>(a: &mut DMatrix<T>, b: &mut DMatrix<T>, c: &mut DMatrix<T>) {
    for l in 0..a.ncols() {
        let (na, nb, nc) = (a.column(l).norm(), b.column(l).norm(), c.column(l).norm());
        if na == 0.0 || nb == 0.0 || nc == 0.0 {
            continue;
        }
        let g = nalgebra::ComplexField::cbrt(na * nb * nc);
        a.column_mut(l).scale_mut(g / na);
        b.column_mut(l).scale_mut(g / nb);
        c.column_mut(l).scale_mut(g / nc);
    }
}

/// Best of `restarts` CP-ALS runs from seeded Gaussian starts.
///
/// A sweep that would increase the residual is rejected and ends the run, so
/// each run's history is non-increasing. Runs also stop once the residual is
/// below `pol.fit_threshold · 1e-4` or the relative improvement drops under
/// `pol.als_tol`.
pub fn als_fit<T: Scalar>(
    t: &Tensor3<T>,
    r: usize,
    restarts: usize,
    iters: usize,
    seed: u64,
    pol: &TolerancePolicy,
) -> Result<AlsFit<T>> {
    let [m, n, p] = t.shape();
    let mut best: Option<(f64, [DMatrix<T>; 3], Vec<f64>, usize)> = None;
    for restart in 0..restarts.max(1) {
        let mut rng = seeded(seed_for(seed, restart));
        let mut a = gaussian_matrix::<T>(m, r, &mut rng);
        let mut b = gaussian_matrix::<T>(n, r, &mut rng);
        let mut c = gaussian_matrix::<T>(p, r, &mut rng);
        let mut res = residual_of(t, &a, &b, &c);
        let mut history = alloc::vec![res];
        for _ in 0..iters {
            let Some(na) = update(t, Axis::X, &b, &c) else { break };
            let Some(nb) = update(t, Axis::Y, &na, &c) else { break };
            let Some(nc) = update(t, Axis::Z, &na, &nb) else { break };
            let (mut na, mut nb, mut nc) = (na, nb, nc);
            balance(&mut na, &mut nb, &mut nc);
            let next = residual_of(t, &na, &nb, &nc);
            if !(next <= res) {
                break;
            }
            let gain = res - next;
            a = na;
            b = nb;
            c = nc;
            res = next;
            history.push(res);
            if res <= pol.fit_threshold * 1e-4 || gain <= pol.als_tol * res {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, ..)| res < *b) {
            best = Some((res, [a, b, c], history, restart));
        }
    }
    let (residual, [a, b, c], history, restart) = best.expect("at least one restart");
    Ok(AlsFit {
        decomposition: Decomposition::from_columns(&a, &b, &c)?,
        residual,
        history,
        restart,
    })
}

/// Lower bound on `rank(T)` with the value of every applicable method.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LowerBound {
    pub value: usize,
    /// Name of the first method attaining `value` (Strassen, then Koszul, then
    /// flattenings).
    pub method: String,
    pub candidates: BTreeMap<String, usize>,
}

/// `T` with `axis` moved to the last position, so that its slices along
/// `axis` become z-slices.
fn with_slices_last<T: Scalar>(t: &Tensor3<T>, axis: Axis) -> Tensor3<T> {
    let [m, n, p] = t.shape();
    match axis {
        Axis::X => Tensor3::from_fn([n, p, m], |j, k, i| t[(i, j, k)]),
        Axis::Y => Tensor3::from_fn([m, p, n], |i, k, j| t[(i, j, k)]),
        Axis::Z => t.clone(),
    }
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::X => "x",
        Axis::Y => "y",
        Axis::Z => "z",
    }
}

/// Max of the three matricization ranks and, for every direction with three
/// square slices, the Strassen bound (after rotating an invertible slice to
/// the front) and the Koszul bound.
pub fn rank_lower<T: Scalar>(t: &Tensor3<T>, pol: &TolerancePolicy, seed: u64) -> LowerBound {
    let mut ordered: Vec<(String, usize)> = Vec::new();
    let mut flattenings = Vec::new();
    for axis in Axis::ALL {
        let s = with_slices_last(t, axis);
        let [a, b, c] = s.shape();
        if a == b && c == 3 && a > 0 {
            if let Ok(rot) = rotate_to_invertible(&s, pol, seed) {
                if let Ok(rep) = strassen_bound(&rot.tensor, pol) {
                    ordered.push((alloc::format!("strassen_{}", axis_name(axis)), rep.value));
                }
            }
            if let Ok(rep) = koszul_bound(&s, pol) {
                flattenings.push((alloc::format!("koszul_{}", axis_name(axis)), rep.value));
            }
        }
    }
    ordered.append(&mut flattenings);
    for axis in Axis::ALL {
        ordered.push((
            alloc::format!("flattening_{}", axis_name(axis)),
            numeric_rank(&t.unfold(axis), pol),
        ));
    }
    let value = ordered.iter().map(|(_, v)| *v).max().unwrap_or(0);
    let method = ordered
        .iter()
        .find(|(_, v)| *v == value)
        .map(|(name, _)| name.clone())
        .unwrap_or_default();
    LowerBound {
        value,
        method,
        candidates: ordered.into_iter().collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankBracket<T> {
    pub lower: LowerBound,
    /// Smallest `r ≤ r_max` whose fit reached `pol.fit_threshold`.
    pub upper: Option<usize>,
    pub witness: Option<Decomposition<T>>,
    /// Best residual found for each `r` tried.
    pub fits: Vec<(usize, f64)>,
    pub resolved: bool,
}

/// `lower` from [`rank_lower`]; `upper` from [`als_fit`] with `budget`
/// restarts per `r`, scanning upward from the lower bound. A failed fit is
/// evidence, not proof, that the rank is larger.
pub fn rank_bracket<T: Scalar>(
    t: &Tensor3<T>,
    r_max: usize,
    budget: usize,
    seed: u64,
    pol: &TolerancePolicy,
) -> Result<RankBracket<T>> {
    let lower = rank_lower(t, pol, seed);
    let mut fits = Vec::new();
    let mut upper = None;
    let mut witness = None;
    if t.is_zero() {
        upper = Some(0);
        witness = Some(Decomposition::new(Vec::new())?);
    } else {
        for r in lower.value.max(1)..=r_max {
            let fit = als_fit(t, r, budget, pol.als_max_iters, seed_for(seed, r), pol)?;
            fits.push((r, fit.residual));
            if fit.residual < pol.fit_threshold {
                upper = Some(r);
                witness = Some(fit.decomposition);
                break;
            }
        }
    }
    let resolved = upper == Some(lower.value);
    Ok(RankBracket {
        lower,
        upper,
        witness,
        fits,
        resolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{assemble, Term};
    use crate::plant::{gaussian_tensor, gaussian_vector, random_decomposition};

    fn pol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        m[(i, j)] = 1.0;
        m
    }

    fn strassen_fixture() -> Tensor3<f64> {
        Tensor3::from_slices(Axis::Z, &[DMatrix::identity(2, 2), unit(2, 0, 1), unit(2, 1, 0)]).unwrap()
    }

    fn diagonal3() -> Tensor3<f64> {
        Tensor3::from_fn([3, 3, 3], |i, j, k| if i == j && j == k { 1.0 } else { 0.0 })
    }

    fn non_increasing(h: &[f64]) -> bool {
        h.windows(2).all(|w| w[1] <= w[0])
    }

    #[test]
    fn rank_one_fit() {
        let mut rng = seeded(1);
        let d = Decomposition::new(alloc::vec![Term::new(
            gaussian_vector::<f64>(3, &mut rng),
            gaussian_vector(4, &mut rng),
            gaussian_vector(2, &mut rng),
        )])
        .unwrap();
        let t = assemble(&d, [3, 4, 2]).unwrap();
        let fit = als_fit(&t, 1, 3, 500, 0, &pol()).unwrap();
        assert!(fit.residual < 1e-10);
        assert!(non_increasing(&fit.history));
    }

    #[test]
    fn diagonal_fits() {
        let t = diagonal3();
        let fit = als_fit(&t, 3, 5, 3000, 0, &pol()).unwrap();
        assert!(fit.residual < 1e-8, "{}", fit.residual);
        let fit = als_fit(&t, 2, 50, 500, 0, &pol()).unwrap();
        assert!(fit.residual > 1e-2, "{}", fit.residual);
        assert!(non_increasing(&fit.history));
    }

    #[test]
    fn lower_bounds() {
        let zero = Tensor3::<f64>::zeros([2, 3, 4]);
        assert_eq!(rank_lower(&zero, &pol(), 0).value, 0);

        let lb = rank_lower(&strassen_fixture(), &pol(), 0);
        assert_eq!(lb.value, 3);
        assert_eq!(lb.method, "strassen_z");

        let mut rng = seeded(2);
        let d = random_decomposition::<f64>([3, 3, 3], 1, &mut rng);
        let lb = rank_lower(&assemble(&d, [3, 3, 3]).unwrap(), &pol(), 0);
        assert_eq!(lb.value, 1);
        assert!(lb.method.starts_with("strassen") || lb.method.starts_with("koszul") || lb.method.starts_with("flattening"));
        assert_eq!(lb.candidates["flattening_x"], 1);
    }

    #[test]
    fn brackets() {
        let b = rank_bracket(&diagonal3(), 5, 5, 0, &pol()).unwrap();
        assert_eq!((b.lower.value, b.upper), (3, Some(3)));
        assert!(b.resolved);

        let b = rank_bracket(&strassen_fixture(), 5, 5, 0, &pol()).unwrap();
        assert_eq!((b.lower.value, b.upper), (3, Some(3)));
        assert!(b.fits[0].1 < 1e-8);

        for seed in 0..5 {
            let t = gaussian_tensor::<f64>([2, 2, 2], &mut seeded(seed));
            let b = rank_bracket(&t, 4, 5, seed, &pol()).unwrap();
            assert!(b.upper.unwrap() <= 3);
            assert!(b.lower.value >= 1 && b.lower.value <= b.upper.unwrap());
        }
    }

    #[test]
    fn zero_bracket() {
        let b = rank_bracket(&Tensor3::<f64>::zeros([2, 2, 2]), 3, 2, 0, &pol()).unwrap();
        assert!(b.resolved);
        assert_eq!(b.upper, Some(0));
    }

    #[test]
    fn axis_permutation_keeps_slices() {
        let mut rng = seeded(4);
        let t = gaussian_tensor::<f64>([3, 2, 4], &mut rng);
        let s = with_slices_last(&t, Axis::X);
        assert_eq!(s.slices(Axis::Z), t.slices(Axis::X));
        let s = with_slices_last(&t, Axis::Y);
        assert_eq!(s.slices(Axis::Z), t.slices(Axis::Y));
    }
}
