//! Orthogonal decompositions in four flavors (symmetric or ordinary, over ℝ
//! or ℂ): slice tests, reconstruction, and rank certificates built on them.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::decomposition::{assemble, Decomposition, Term};
use crate::eigen::{cluster_eigenvalues, diagonalizability};
use crate::error::{Error, Result};
use crate::extension::orthogonal_extension;
use crate::matrix::{
    asymmetry, bilinear, linear_combination, max_commutator_residual, numeric_rank,
    numeric_rank_with_scale, singular_values, trailing_right_singular_vectors,
};
use crate::plant::seeded;
use crate::policy::TolerancePolicy;
use crate::scalar::{Field, Scalar};
use crate::tensor::{is_subtensor, Axis, SubtensorMode, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OdecoFlavor {
    pub symmetric: bool,
    pub field: Field,
}

impl OdecoFlavor {
    pub const SYM_REAL: Self = Self { symmetric: true, field: Field::Real };
    pub const SYM_COMPLEX: Self = Self { symmetric: true, field: Field::Complex };
    pub const REAL: Self = Self { symmetric: false, field: Field::Real };
    pub const COMPLEX: Self = Self { symmetric: false, field: Field::Complex };
    pub const ALL: [Self; 4] = [Self::SYM_REAL, Self::SYM_COMPLEX, Self::REAL, Self::COMPLEX];

    pub fn name(self) -> &'static str {
        match (self.symmetric, self.field) {
            (true, Field::Real) => "sym-real",
            (true, Field::Complex) => "sym-complex",
            (false, Field::Real) => "real",
            (false, Field::Complex) => "complex",
        }
    }
}

impl fmt::Display for OdecoFlavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OdecoFlavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::FlavorMismatch(format!("unknown flavor {s:?}")))
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for OdecoFlavor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for OdecoFlavor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The slice pair (or single slice) that deviates most from the flavor's conditions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Offender {
    pub axis: Axis,
    pub k: usize,
    pub l: usize,
    pub condition: String,
    pub residual: f64,
}

/// `rank X_k` next to `rank X_kᵀX_k`, reported for every slice in the complex ordinary flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankPair {
    pub axis: Axis,
    pub k: usize,
    pub rank: usize,
    pub gram_rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OdecoReport {
    pub odeco: bool,
    pub flavor: OdecoFlavor,
    /// Largest residual seen per condition name.
    pub residuals: BTreeMap<String, f64>,
    pub worst: Option<Offender>,
    pub rank_pairs: Vec<RankPair>,
}

impl OdecoReport {
    fn new(flavor: OdecoFlavor) -> Self {
        Self {
            odeco: true,
            flavor,
            residuals: BTreeMap::new(),
            worst: None,
            rank_pairs: Vec::new(),
        }
    }

    /// Record a residual; `tol` decides pass/fail for it.
    fn record(&mut self, axis: Axis, k: usize, l: usize, condition: &str, residual: f64, tol: f64) {
        let entry = self.residuals.entry(condition.into()).or_insert(0.0);
        *entry = entry.max(residual);
        let failing = !(residual <= tol);
        if failing {
            self.odeco = false;
        }
        let replace = match &self.worst {
            None => true,
            Some(w) => residual / tol > w.residual / tol_of(w, tol),
        };
        if replace && (failing || self.odeco) {
            self.worst = Some(Offender {
                axis,
                k,
                l,
                condition: condition.into(),
                residual,
            });
        }
    }

    fn fail(&mut self, axis: Axis, k: usize, l: usize, condition: &str, residual: f64) {
        self.odeco = false;
        self.worst = Some(Offender {
            axis,
            k,
            l,
            condition: condition.into(),
            residual,
        });
    }
}

fn tol_of(_w: &Offender, tol: f64) -> f64 {
    tol
}

fn check_format<T: Scalar>(t: &Tensor3<T>, flavor: OdecoFlavor) -> Result<usize> {
    if flavor.field != T::FIELD {
        return Err(Error::FlavorMismatch(format!(
            "flavor {flavor} needs {} entries, tensor is {}",
            flavor.field,
            T::FIELD
        )));
    }
    if !t.is_cubic() {
        return Err(Error::WrongFormat(format!(
            "orthogonal decompositions need a cubic tensor, got {:?}",
            t.shape()
        )));
    }
    if flavor.symmetric && !t.is_symmetric() {
        return Err(Error::FlavorMismatch(format!(
            "flavor {flavor} needs a tensor flagged symmetric"
        )));
    }
    Ok(t.shape()[0])
}

fn pair_scale<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    a.norm() * b.norm()
}

/// Slice conditions characterizing orthogonally decomposable tensors:
/// * sym-real: the slices pairwise commute;
/// * sym-complex: the slices are diagonalizable and pairwise commute;
/// * real: in every direction, `T_k T_lᵀ` and `T_kᵀ T_l` are symmetric;
/// * complex: in every direction, additionally `X_kᵀX_k` is diagonalizable
///   with `rank X_k = rank X_kᵀX_k`.
///
/// Residuals are relative to `‖T_k‖·‖T_l‖` and compared with `pol.residual_tol`.
pub fn odeco_check<T: Scalar>(t: &Tensor3<T>, flavor: OdecoFlavor, pol: &TolerancePolicy) -> Result<OdecoReport> {
    check_format(t, flavor)?;
    let mut report = OdecoReport::new(flavor);
    if flavor.symmetric {
        let z = t.slices(Axis::Z);
        let (res, (k, l)) = max_commutator_residual(&z)?;
        report.record(Axis::Z, k, l, "commutator", res, pol.residual_tol);
        if flavor.field == Field::Complex {
            for (k, m) in z.iter().enumerate() {
                let d = diagonalizability(m, Field::Complex, pol);
                let e = report.residuals.entry("diagonalizability_defect".into()).or_insert(0.0);
                *e = e.max(d.worst_defect);
                if !d.diagonalizable {
                    report.fail(Axis::Z, k, k, "diagonalizable", d.worst_defect);
                }
            }
        }
        return Ok(report);
    }
    for axis in Axis::ALL {
        let xs = t.slices(axis);
        let mut worst_outer: (f64, usize, usize) = (0.0, 0, 0);
        let mut worst_inner: (f64, usize, usize) = (0.0, 0, 0);
        for k in 0..xs.len() {
            for l in k..xs.len() {
                let s = pair_scale(&xs[k], &xs[l]);
                let outer = asymmetry(&(&xs[k] * xs[l].transpose()), s);
                let inner = asymmetry(&(xs[k].transpose() * &xs[l]), s);
                if outer > worst_outer.0 {
                    worst_outer = (outer, k, l);
                }
                if inner > worst_inner.0 {
                    worst_inner = (inner, k, l);
                }
            }
        }
        report.record(axis, worst_outer.1, worst_outer.2, "outer_symmetry", worst_outer.0, pol.residual_tol);
        report.record(axis, worst_inner.1, worst_inner.2, "inner_symmetry", worst_inner.0, pol.residual_tol);
        if flavor.field == Field::Complex {
            for (k, x) in xs.iter().enumerate() {
                let gram = x.transpose() * x;
                let smax = singular_values(x).first().copied().unwrap_or(0.0);
                let rank = numeric_rank(x, pol);
                let gram_rank = numeric_rank_with_scale(&gram, smax * smax, pol);
                report.rank_pairs.push(RankPair { axis, k, rank, gram_rank });
                if rank != gram_rank {
                    report.fail(axis, k, k, "rank_equality", (rank as f64 - gram_rank as f64).abs());
                }
                let d = diagonalizability(&gram, Field::Complex, pol);
                let e = report.residuals.entry("diagonalizability_defect".into()).or_insert(0.0);
                *e = e.max(d.worst_defect);
                if !d.diagonalizable {
                    report.fail(axis, k, k, "gram_diagonalizable", d.worst_defect);
                }
            }
        }
    }
    Ok(report)
}

/// Weighted orthogonal decomposition `Σ λ_i a_i ⊗ b_i ⊗ c_i` with unit
/// (bilinear) factor vectors. Symmetric flavors have `a_i = b_i = c_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdecoDecomposition<T> {
    pub flavor: OdecoFlavor,
    pub weights: Vec<T>,
    pub factors: Decomposition<T>,
    /// `‖T − Σ λ_i a_i⊗b_i⊗c_i‖ / ‖T‖`.
    pub residual: f64,
}

impl<T: Scalar> OdecoDecomposition<T> {
    /// Absorb the weights: by cube root into all three vectors for symmetric
    /// flavors (keeping `u = v = w`), into `u` otherwise.
    pub fn to_decomposition(&self) -> Decomposition<T> {
        let terms = self
            .factors
            .terms()
            .iter()
            .zip(&self.weights)
            .map(|(t, &l)| {
                if self.flavor.symmetric {
                    Term::cube(&t.u * l.cbrt())
                } else {
                    Term::new(&t.u * l, t.v.clone(), t.w.clone())
                }
            })
            .collect();
        Decomposition::new(terms).expect("nonzero weights and vectors")
    }
}

const DECOMPOSE_ATTEMPTS: usize = 6;
const POWER_STEPS: usize = 3;

/// Newton–Schulz steps `X ← X(3I − XᵀX)/2` pulling nearly orthonormal
/// columns (bilinear form) onto exactly orthonormal ones.
fn polish_orthonormal<T: Scalar>(xs: &mut [DVector<T>]) {
    if xs.is_empty() {
        return;
    }
    let k = xs.len();
    let mut x = DMatrix::from_columns(xs);
    let three = DMatrix::<T>::identity(k, k) * T::from_real(3.0);
    for _ in 0..3 {
        let g = x.transpose() * &x;
        x = &x * (&three - g) * T::from_real(0.5);
    }
    for (i, v) in xs.iter_mut().enumerate() {
        *v = x.column(i).into_owned();
    }
}

/// `T(·, x, x)`.
fn contract_two<T: Scalar>(t: &Tensor3<T>, x: &DVector<T>) -> DVector<T> {
    let n = x.len();
    DVector::from_fn(n, |i, _| {
        let mut acc = T::zero();
        for j in 0..n {
            for k in 0..n {
                acc += t[(i, j, k)] * x[j] * x[k];
            }
        }
        acc
    })
}

fn cube_form<T: Scalar>(t: &Tensor3<T>, x: &DVector<T>) -> T {
    let n = x.len();
    let mut lambda = T::zero();
    for i in 0..n {
        for j in 0..n {
            let xij = x[i] * x[j];
            for k in 0..n {
                lambda += t[(i, j, k)] * xij * x[k];
            }
        }
    }
    lambda
}

fn normalize_bilinear<T: Scalar>(x: &DVector<T>) -> Option<DVector<T>> {
    let q = bilinear(x, x);
    if q.modulus() <= 1e-6 * x.norm_squared() {
        return None;
    }
    Some(x / q.sqrt())
}

/// Eigenvectors of `c` belonging to simple, nonzero eigenvalue clusters; `None`
/// when a nonzero cluster is degenerate.
fn simple_eigenvectors<T: Scalar>(c: &DMatrix<T>, pol: &TolerancePolicy) -> Result<Option<Vec<DVector<T>>>> {
    let n = c.nrows();
    let scale = c.norm();
    if scale == 0.0 {
        return Ok(Some(Vec::new()));
    }
    let radius = pol.eig_cluster_tol * scale;
    if T::FIELD == Field::Real {
        let eig = SymmetricEigen::new(c.clone());
        let vals: Vec<Complex64> = eig.eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)).collect();
        let mut out = Vec::new();
        for cl in cluster_eigenvalues(&vals, radius) {
            if cl.center.norm() <= radius {
                continue;
            }
            if cl.members.len() > 1 {
                return Ok(None);
            }
            out.push(eig.eigenvectors.column(cl.members[0]).into_owned());
        }
        return Ok(Some(out));
    }
    let vals = T::eigenvalues(c).ok_or(Error::NoConvergence)?;
    let mut out = Vec::new();
    for cl in cluster_eigenvalues(&vals, radius) {
        if cl.center.norm() <= radius {
            continue;
        }
        if cl.members.len() > 1 {
            return Ok(None);
        }
        let shifted = c - DMatrix::identity(n, n) * T::from_c64(cl.center);
        out.push(trailing_right_singular_vectors(&shifted, 1).column(0).into_owned());
    }
    Ok(Some(out))
}

fn random_real_coeffs<T: Scalar>(k: usize, rng: &mut impl rand::Rng) -> Vec<T> {
    (0..k).map(|_| T::from_real(f64::gaussian(rng))).collect()
}

fn symmetric_candidates<T: Scalar>(
    t: &Tensor3<T>,
    z: &[DMatrix<T>],
    pol: &TolerancePolicy,
    rng: &mut impl rand::Rng,
) -> Result<Option<(Vec<T>, Vec<DVector<T>>)>> {
    let c = linear_combination(z, &random_real_coeffs::<T>(z.len(), rng));
    let Some(vecs) = simple_eigenvectors(&c, pol)? else {
        return Ok(None);
    };
    let mut xs = Vec::new();
    for v in vecs {
        let Some(mut x) = normalize_bilinear(&v) else {
            return Ok(None);
        };
        // power steps converge quadratically at the decomposition vectors
        for _ in 0..POWER_STEPS {
            match normalize_bilinear(&contract_two(t, &x)) {
                Some(y) => {
                    let sign = if bilinear(&y, &x).real() < 0.0 { -T::one() } else { T::one() };
                    x = y * sign;
                }
                None => break,
            }
        }
        xs.push(x);
    }
    polish_orthonormal(&mut xs);
    let weights = xs.iter().map(|x| cube_form(t, x)).collect();
    Ok(Some((weights, xs)))
}

type OrdinaryCandidate<T> = (Vec<T>, Vec<(DVector<T>, DVector<T>, DVector<T>)>);

fn ordinary_candidates<T: Scalar>(
    z: &[DMatrix<T>],
    pol: &TolerancePolicy,
    rng: &mut impl rand::Rng,
) -> Result<Option<OrdinaryCandidate<T>>> {
    let m = linear_combination(z, &random_real_coeffs::<T>(z.len(), rng));
    let pairs: Vec<(DVector<T>, DVector<T>)> = if T::FIELD == Field::Real {
        if m.norm() == 0.0 {
            return Ok(Some((Vec::new(), Vec::new())));
        }
        let svd = SVD::new(m.clone(), true, true);
        let (u, v_t) = (svd.u.expect("U"), svd.v_t.expect("V"));
        let vals: Vec<Complex64> = svd.singular_values.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        let radius = pol.eig_cluster_tol * m.norm();
        let mut out = Vec::new();
        for cl in cluster_eigenvalues(&vals, radius) {
            if cl.center.norm() <= radius {
                continue;
            }
            if cl.members.len() > 1 {
                return Ok(None);
            }
            let j = cl.members[0];
            out.push((u.column(j).into_owned(), v_t.row(j).transpose()));
        }
        out
    } else {
        let Some(avecs) = simple_eigenvectors(&(&m * m.transpose()), pol)? else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for a in avecs {
            let Some(a) = normalize_bilinear(&a) else {
                return Ok(None);
            };
            let Some(b) = normalize_bilinear(&(m.transpose() * &a)) else {
                return Ok(None);
            };
            out.push((a, b));
        }
        out
    };
    let (mut avs, mut bvs): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    polish_orthonormal(&mut avs);
    polish_orthonormal(&mut bvs);
    let mut mus = Vec::new();
    let mut cvs = Vec::new();
    for (a, b) in avs.iter().zip(&bvs) {
        let mu = DVector::from_fn(z.len(), |k, _| (a.transpose() * &z[k] * b)[(0, 0)]);
        let lambda = if T::FIELD == Field::Real {
            T::from_real(mu.norm())
        } else {
            bilinear(&mu, &mu).sqrt()
        };
        if lambda.modulus() <= 1e-6 * mu.norm() || lambda.is_zero() {
            return Ok(None);
        }
        cvs.push(&mu / lambda);
        mus.push(mu);
    }
    polish_orthonormal(&mut cvs);
    let weights = cvs.iter().zip(&mus).map(|(c, mu)| bilinear(c, mu)).collect();
    let triples = avs
        .into_iter()
        .zip(bvs)
        .zip(cvs)
        .map(|((a, b), c)| (a, b, c))
        .collect();
    Ok(Some((weights, triples)))
}

/// Recover an orthogonal decomposition of a tensor that passes [`odeco_check`].
///
/// A random combination of the z-slices is diagonalized (symmetric flavors)
/// or factored by SVD / by the eigenvectors of `M Mᵀ` (ordinary flavors).
/// Degenerate spectra trigger a fresh combination. Terms with negligible
/// weight are dropped, so at most `n` terms remain.
pub fn odeco_decompose<T: Scalar>(
    t: &Tensor3<T>,
    flavor: OdecoFlavor,
    pol: &TolerancePolicy,
    seed: u64,
) -> Result<OdecoDecomposition<T>> {
    let n = check_format(t, flavor)?;
    let report = odeco_check(t, flavor, pol)?;
    if !report.odeco {
        return Err(Error::NotOdeco(String::from(flavor.name())));
    }
    let norm = t.norm();
    if norm == 0.0 {
        return Ok(OdecoDecomposition {
            flavor,
            weights: Vec::new(),
            factors: Decomposition::default(),
            residual: 0.0,
        });
    }
    let z = t.slices(Axis::Z);
    let mut rng = seeded(seed);
    let mut best: Option<OdecoDecomposition<T>> = None;
    let drop_tol = pol.rank_rel_tol * n as f64 * norm;
    for _ in 0..DECOMPOSE_ATTEMPTS {
        let mut weights = Vec::new();
        let mut terms = Vec::new();
        if flavor.symmetric {
            let Some((ws, xs)) = symmetric_candidates(t, &z, pol, &mut rng)? else {
                continue;
            };
            for (w, x) in ws.into_iter().zip(xs) {
                if w.modulus() > drop_tol {
                    weights.push(w);
                    terms.push(Term::cube(x));
                }
            }
        } else {
            let Some((ws, triples)) = ordinary_candidates(&z, pol, &mut rng)? else {
                continue;
            };
            for (w, (a, b, c)) in ws.into_iter().zip(triples) {
                if w.modulus() > drop_tol {
                    weights.push(w);
                    terms.push(Term::new(a, b, c));
                }
            }
        }
        let factors = Decomposition::new(terms)?;
        let weighted = Decomposition::new(
            factors
                .terms()
                .iter()
                .zip(&weights)
                .map(|(tm, &w)| Term::new(&tm.u * w, tm.v.clone(), tm.w.clone()))
                .collect(),
        )?;
        let residual = t.relative_distance(&assemble(&weighted, [n, n, n])?)?;
        let candidate = OdecoDecomposition {
            flavor,
            weights,
            factors,
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
            what: "orthogonal reconstruction",
            residual: b.residual,
            tolerance: pol.residual_tol,
        },
        None => Error::IllConditioned("every random slice combination had a degenerate spectrum".into()),
    })
}

/// Largest numeric rank among `trials` seeded random combinations of the
/// slices. A lower estimate of the maximal rank in the span, exact for generic
/// draws.
pub fn span_max_rank<T: Scalar>(slices: &[DMatrix<T>], trials: usize, seed: u64, pol: &TolerancePolicy) -> usize {
    if slices.is_empty() {
        return 0;
    }
    let mut rng = seeded(seed);
    (0..trials.max(1))
        .map(|_| numeric_rank(&linear_combination(slices, &random_real_coeffs::<T>(slices.len(), &mut rng)), pol))
        .max()
        .unwrap_or(0)
}

/// Named condition outcome inside a certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Check {
    pub passed: bool,
    /// Residual, or the observed quantity (e.g. a rank) the condition bounds.
    pub metric: f64,
}

/// Outcome of verifying a certificate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Verification {
    pub passed: bool,
    pub checks: BTreeMap<String, Check>,
}

impl Verification {
    pub(crate) fn from_checks(checks: BTreeMap<String, Check>) -> Self {
        Self {
            passed: checks.values().all(|c| c.passed),
            checks,
        }
    }

    /// Names of failing checks.
    pub fn failing(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|(_, c)| !c.passed)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

pub const CHECK_SLICES: &str = "slice_conditions";
pub const CHECK_SUBTENSOR: &str = "subtensor";
pub const CHECK_SPAN_RANK: &str = "span_rank";

/// Witness for `rank(T) ≤ r` (`srank` for symmetric flavors): a tensor `S` of
/// size `r + n` whose slices satisfy the flavor's orthogonality conditions,
/// which contains `T` as its leading cube, and whose z-slice span has rank at
/// most `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankCertificate<T> {
    pub t: Tensor3<T>,
    pub s: Tensor3<T>,
    pub r: usize,
    pub flavor: OdecoFlavor,
    pub checks: BTreeMap<String, Check>,
    /// Trial count and seed of the randomized span-rank check.
    pub trials: usize,
    pub seed: u64,
}

fn check_decomposition_matches<T: Scalar>(t: &Tensor3<T>, d: &Decomposition<T>, pol: &TolerancePolicy) -> Result<()> {
    let shape = t.shape();
    if let Some(dims) = d.dims() {
        if dims != shape {
            return Err(Error::DimensionMismatch(format!(
                "decomposition has dimensions {dims:?}, tensor {shape:?}"
            )));
        }
    }
    let gap = t.relative_distance(&assemble(d, shape)?)?;
    if !(gap <= pol.residual_tol) && !(t.is_zero() && gap <= pol.residual_tol) {
        return Err(Error::Precondition {
            what: "assemble(D) = T",
            residual: gap,
        });
    }
    Ok(())
}

/// Build `S = Σ v_i^{⊗3}` (symmetric flavors) or `S = Σ a_i ⊗ b_i ⊗ c_i` from
/// orthogonal extensions of the decomposition's vectors, then overwrite its
/// leading cube with `T` exactly.
pub fn build_rank_certificate<T: Scalar>(
    t: &Tensor3<T>,
    d: &Decomposition<T>,
    flavor: OdecoFlavor,
    pol: &TolerancePolicy,
    seed: u64,
) -> Result<RankCertificate<T>> {
    let n = check_format(t, flavor)?;
    if flavor.symmetric && !d.is_symmetric() {
        return Err(Error::FlavorMismatch(format!(
            "flavor {flavor} needs a symmetric decomposition"
        )));
    }
    check_decomposition_matches(t, d, pol)?;
    let r = d.len();
    let size = n + r;
    let family = |pick: fn(&Term<T>) -> &DVector<T>| -> Result<Vec<DVector<T>>> {
        orthogonal_extension(&d.terms().iter().map(|tm| pick(tm).clone()).collect::<Vec<_>>())
    };
    let mut s = if flavor.symmetric {
        let vs = family(|tm| &tm.u)?;
        assemble(&Decomposition::symmetric(vs)?, [size, size, size])?.symmetrized()?
    } else {
        let a = family(|tm| &tm.u)?;
        let b = family(|tm| &tm.v)?;
        let c = family(|tm| &tm.w)?;
        let terms = a
            .into_iter()
            .zip(b)
            .zip(c)
            .map(|((a, b), c)| Term::new(a, b, c))
            .collect();
        assemble(&Decomposition::new(terms)?, [size, size, size])?
    };
    if r == 0 {
        s = Tensor3::zeros([size, size, size]);
        if flavor.symmetric {
            s = s.symmetrized()?;
        }
    }
    s.copy_block_from(t)?;
    let mut cert = RankCertificate {
        t: t.clone(),
        s,
        r,
        flavor,
        checks: BTreeMap::new(),
        trials: pol.span_trials,
        seed,
    };
    cert.checks = verify_rank_certificate(&cert, pol).checks;
    Ok(cert)
}

/// Re-evaluate the three conditions of a [`RankCertificate`].
pub fn verify_rank_certificate<T: Scalar>(cert: &RankCertificate<T>, pol: &TolerancePolicy) -> Verification {
    let mut checks = BTreeMap::new();
    let slices = match odeco_check(&cert.s, cert.flavor, pol) {
        Ok(rep) => Check {
            passed: rep.odeco,
            metric: rep.residuals.values().copied().fold(0.0, f64::max),
        },
        Err(_) => Check {
            passed: false,
            metric: f64::INFINITY,
        },
    };
    checks.insert(CHECK_SLICES.into(), slices);
    let sub = is_subtensor(&cert.t, &cert.s, SubtensorMode::Cube).unwrap_or(false);
    checks.insert(
        CHECK_SUBTENSOR.into(),
        Check {
            passed: sub,
            metric: if sub { 0.0 } else { 1.0 },
        },
    );
    let rank = span_max_rank(&cert.s.slices(Axis::Z), cert.trials, cert.seed, pol);
    checks.insert(
        CHECK_SPAN_RANK.into(),
        Check {
            passed: rank <= cert.r,
            metric: rank as f64,
        },
    );
    Verification::from_checks(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{gaussian_matrix, gaussian_tensor, planted_odeco, planted_symmetric_odeco, random_decomposition};

    fn pol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn diagonal<T: Scalar>(weights: &[f64]) -> Tensor3<T> {
        let n = weights.len();
        Tensor3::from_fn([n, n, n], |i, j, k| {
            if i == j && j == k {
                T::from_real(weights[i])
            } else {
                T::zero()
            }
        })
        .into_symmetric()
        .unwrap()
    }

    #[test]
    fn diagonal_tensor_is_odeco_in_every_flavor() {
        let w = [1.0, -2.0, 0.5];
        for flavor in OdecoFlavor::ALL {
            let ok = match flavor.field {
                Field::Real => odeco_check(&diagonal::<f64>(&w), flavor, &pol()).unwrap().odeco,
                Field::Complex => odeco_check(&diagonal::<Complex64>(&w), flavor, &pol()).unwrap().odeco,
            };
            assert!(ok, "{flavor}");
        }
    }

    #[test]
    fn noncommuting_symmetric_slices_fail() {
        let mut rng = seeded(1);
        let t = gaussian_tensor::<f64>([3, 3, 3], &mut rng).symmetrized().unwrap();
        let rep = odeco_check(&t, OdecoFlavor::SYM_REAL, &pol()).unwrap();
        assert!(!rep.odeco);
        assert!(rep.worst.is_some());
        assert!(rep.residuals["commutator"] > 1e-4);
    }

    #[test]
    fn flavor_and_shape_errors() {
        let t = Tensor3::<f64>::zeros([2, 2, 3]);
        assert!(matches!(odeco_check(&t, OdecoFlavor::REAL, &pol()), Err(Error::WrongFormat(_))));
        let t = Tensor3::<f64>::zeros([2, 2, 2]);
        assert!(matches!(odeco_check(&t, OdecoFlavor::SYM_REAL, &pol()), Err(Error::FlavorMismatch(_))));
        assert!(matches!(odeco_check(&t, OdecoFlavor::COMPLEX, &pol()), Err(Error::FlavorMismatch(_))));
        assert_eq!("sym-complex".parse::<OdecoFlavor>().unwrap(), OdecoFlavor::SYM_COMPLEX);
        assert!("odd".parse::<OdecoFlavor>().is_err());
    }

    #[test]
    fn standard_basis_recovered() {
        let t = diagonal::<f64>(&[1.0, 1.0, 1.0, 1.0]);
        let dec = odeco_decompose(&t, OdecoFlavor::SYM_REAL, &pol(), 0).unwrap();
        assert_eq!(dec.weights.len(), 4);
        for (tm, w) in dec.factors.terms().iter().zip(&dec.weights) {
            assert_eq!(tm.u.iter().filter(|x| x.abs() > 1e-10).count(), 1);
            assert!((w.abs() - 1.0).abs() < 1e-12);
        }
    }

    fn check_round_trip<T: Scalar>(flavor: OdecoFlavor, seed: u64) {
        let mut rng = seeded(seed);
        let n = 2 + (seed as usize % 5);
        let k = 1 + (seed as usize % n);
        let planted = if flavor.symmetric {
            planted_symmetric_odeco::<T>(n, k, &mut rng)
        } else {
            planted_odeco::<T>(n, k, &mut rng)
        };
        let rep = odeco_check(&planted.tensor, flavor, &pol()).unwrap();
        assert!(rep.odeco, "{flavor} seed {seed}: {rep:?}");
        let dec = odeco_decompose(&planted.tensor, flavor, &pol(), seed).unwrap();
        assert_eq!(dec.weights.len(), k);
        assert!(dec.residual < 1e-8);
        let back = assemble(&dec.to_decomposition(), [n, n, n]).unwrap();
        assert!(planted.tensor.relative_distance(&back).unwrap() < 1e-8);
        let fams: [fn(&Term<T>) -> &DVector<T>; 3] = [|t| &t.u, |t| &t.v, |t| &t.w];
        for fam in fams {
            for i in 0..k {
                for j in 0..k {
                    let g = bilinear(fam(&dec.factors.terms()[i]), fam(&dec.factors.terms()[j]));
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((g - T::from_real(expect)).modulus() < 1e-10, "{flavor} seed {seed} gram {g:?}");
                }
            }
        }
    }

    #[test]
    fn round_trips_all_flavors() {
        for seed in 0..40 {
            check_round_trip::<f64>(OdecoFlavor::SYM_REAL, seed);
            check_round_trip::<Complex64>(OdecoFlavor::SYM_COMPLEX, seed);
            check_round_trip::<f64>(OdecoFlavor::REAL, seed);
            check_round_trip::<Complex64>(OdecoFlavor::COMPLEX, seed);
        }
    }

    #[test]
    fn span_rank_examples() {
        let zeros = alloc::vec![DMatrix::<f64>::zeros(3, 3); 3];
        assert_eq!(span_max_rank(&zeros, 4, 0, &pol()), 0);
        let mut rng = seeded(2);
        let u = gaussian_matrix::<f64>(5, 2, &mut rng);
        let v = gaussian_matrix::<f64>(2, 5, &mut rng);
        assert_eq!(span_max_rank(&[u * v], 4, 0, &pol()), 2);
        let d = random_decomposition::<Complex64>([5, 5, 3], 3, &mut rng);
        let t = assemble(&d, [5, 5, 3]).unwrap();
        assert_eq!(span_max_rank(&t.slices(Axis::Z), 4, 1, &pol()), 3);
    }

    #[test]
    fn certificate_for_single_cube() {
        let n = 3;
        let e1 = DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let d = Decomposition::symmetric(alloc::vec![e1]).unwrap();
        let t = assemble(&d, [n, n, n]).unwrap().into_symmetric().unwrap();
        let cert = build_rank_certificate(&t, &d, OdecoFlavor::SYM_REAL, &pol(), 0).unwrap();
        assert_eq!(cert.s.shape(), [4, 4, 4]);
        assert!(cert.checks.values().all(|c| c.passed), "{:?}", cert.checks);
    }

    #[test]
    fn certificate_mutations() {
        let mut rng = seeded(3);
        let d = random_decomposition::<f64>([3, 3, 3], 4, &mut rng);
        let t = assemble(&d, [3, 3, 3]).unwrap();
        let cert = build_rank_certificate(&t, &d, OdecoFlavor::REAL, &pol(), 1).unwrap();
        assert_eq!(cert.s.shape(), [7, 7, 7]);
        assert!(verify_rank_certificate(&cert, &pol()).passed);

        let mut bad = cert.clone();
        bad.t.set(0, 1, 2, bad.t[(0, 1, 2)] + 1.0);
        assert_eq!(verify_rank_certificate(&bad, &pol()).failing(), alloc::vec![CHECK_SUBTENSOR]);

        let mut small = cert.clone();
        small.r -= 1;
        assert_eq!(verify_rank_certificate(&small, &pol()).failing(), alloc::vec![CHECK_SPAN_RANK]);
    }

    #[test]
    fn complex_certificates() {
        let mut rng = seeded(4);
        let d = random_decomposition::<Complex64>([3, 3, 3], 4, &mut rng);
        let t = assemble(&d, [3, 3, 3]).unwrap();
        let cert = build_rank_certificate(&t, &d, OdecoFlavor::COMPLEX, &pol(), 2).unwrap();
        assert!(cert.checks.values().all(|c| c.passed), "{:?}", cert.checks);

        let x = (0..3).map(|_| crate::plant::gaussian_vector::<Complex64>(3, &mut rng)).collect();
        let ds = Decomposition::symmetric(x).unwrap();
        let ts = assemble(&ds, [3, 3, 3]).unwrap().symmetrized().unwrap();
        let cert = build_rank_certificate(&ts, &ds, OdecoFlavor::SYM_COMPLEX, &pol(), 2).unwrap();
        assert!(cert.checks.values().all(|c| c.passed), "{:?}", cert.checks);
    }
}
