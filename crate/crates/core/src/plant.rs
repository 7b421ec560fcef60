//! Seeded random matrices, tensors and planted decompositions.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomposition::{assemble, Decomposition, Term};
use crate::matrix::{null_space, numeric_rank};
use crate::policy::TolerancePolicy;
use crate::scalar::{Field, Scalar};
use crate::tensor::{Axis, Tensor3};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<T: Scalar>(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| T::gaussian(rng))
}

pub fn gaussian_vector<T: Scalar>(n: usize, rng: &mut impl Rng) -> DVector<T> {
    DVector::from_fn(n, |_, _| T::gaussian(rng))
}

pub fn gaussian_tensor<T: Scalar>(shape: [usize; 3], rng: &mut impl Rng) -> Tensor3<T> {
    Tensor3::from_fn(shape, |_, _, _| T::gaussian(rng))
}

/// Haar-distributed real orthogonal matrix.
pub fn random_orthogonal_real(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let qr = gaussian_matrix::<f64>(n, n, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Matrix with `AᵀA = I` (bilinear form). Over ℂ this is `exp(K)` for a
/// random complex skew-symmetric `K` whose entries have size about
/// `spread / √n`, so the condition number stays near `exp(2·spread)`; over ℝ a
/// Haar orthogonal matrix.
pub fn random_orthogonal<T: Scalar>(n: usize, spread: f64, rng: &mut impl Rng) -> DMatrix<T> {
    match T::FIELD {
        Field::Real => random_orthogonal_real(n, rng).map(T::from_real),
        Field::Complex => {
            let g = gaussian_matrix::<T>(n, n, rng);
            let scale = spread * core::f64::consts::FRAC_1_SQRT_2 / crate::matrix::sqrt(n.max(1) as f64);
            let k = (&g - g.transpose()) * T::from_real(scale);
            let rot = random_orthogonal_real(n, rng).map(T::from_real);
            rot * expm(&k)
        }
    }
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
fn expm<T: Scalar>(k: &DMatrix<T>) -> DMatrix<T> {
    let n = k.nrows();
    let mut squarings = 0;
    let mut factor = 1.0;
    while k.norm() * factor > 0.25 {
        factor /= 2.0;
        squarings += 1;
    }
    let a = k * T::from_real(factor);
    let mut term = DMatrix::<T>::identity(n, n);
    let mut sum = term.clone();
    for j in 1..=18 {
        term = &term * &a * T::from_real(1.0 / j as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn random_decomposition<T: Scalar>(shape: [usize; 3], r: usize, rng: &mut impl Rng) -> Decomposition<T> {
    let terms = (0..r)
        .map(|_| {
            Term::new(
                gaussian_vector(shape[0], rng),
                gaussian_vector(shape[1], rng),
                gaussian_vector(shape[2], rng),
            )
        })
        .collect();
    Decomposition::new(terms).expect("Gaussian vectors are nonzero")
}

/// Weight of modulus in `[0.5, 2]` with a random sign (ℝ) or phase (ℂ).
pub fn random_weight<T: Scalar>(rng: &mut impl Rng) -> T {
    let modulus = 0.5 + 1.5 * rng.random::<f64>();
    let z = T::gaussian(rng);
    let m = z.modulus();
    if m == 0.0 {
        T::from_real(modulus)
    } else {
        z * T::from_real(modulus / m)
    }
}

/// A planted instance: the tensor together with the weights and factor
/// vectors it was built from.
#[derive(Debug, Clone)]
pub struct Planted<T> {
    pub tensor: Tensor3<T>,
    pub weights: Vec<T>,
    pub decomposition: Decomposition<T>,
}

/// `Σ_{i<k} α_i v_i^{⊗3}` with `v_i` columns of a random orthogonal matrix;
/// the tensor is symmetrized so it is flagged symmetric.
pub fn planted_symmetric_odeco<T: Scalar>(n: usize, k: usize, rng: &mut impl Rng) -> Planted<T> {
    let q = random_orthogonal::<T>(n, 1.0, rng);
    let weights: Vec<T> = (0..k).map(|_| random_weight(rng)).collect();
    let d = Decomposition::symmetric(
        (0..k).map(|i| q.column(i).into_owned()).collect(),
    )
    .expect("orthogonal columns are nonzero");
    let scaled = Decomposition::new(
        d.terms()
            .iter()
            .zip(&weights)
            .map(|(t, &a)| Term::new(&t.u * a, t.v.clone(), t.w.clone()))
            .collect(),
    )
    .expect("nonzero");
    let tensor = assemble(&scaled, [n, n, n])
        .expect("dims match")
        .symmetrized()
        .expect("cubic");
    Planted {
        tensor,
        weights,
        decomposition: d,
    }
}

/// `Σ_{i<k} λ_i a_i ⊗ b_i ⊗ c_i` with `a_i, b_i, c_i` columns of three
/// independent random orthogonal matrices.
pub fn planted_odeco<T: Scalar>(n: usize, k: usize, rng: &mut impl Rng) -> Planted<T> {
    let a = random_orthogonal::<T>(n, 1.0, rng);
    let b = random_orthogonal::<T>(n, 1.0, rng);
    let c = random_orthogonal::<T>(n, 1.0, rng);
    let weights: Vec<T> = (0..k).map(|_| random_weight(rng)).collect();
    let d = Decomposition::new(
        (0..k)
            .map(|i| {
                Term::new(
                    a.column(i).into_owned(),
                    b.column(i).into_owned(),
                    c.column(i).into_owned(),
                )
            })
            .collect(),
    )
    .expect("nonzero");
    let scaled = Decomposition::new(
        d.terms()
            .iter()
            .zip(&weights)
            .map(|(t, &l)| Term::new(&t.u * l, t.v.clone(), t.w.clone()))
            .collect(),
    )
    .expect("nonzero");
    let tensor = assemble(&scaled, [n, n, n]).expect("dims match");
    Planted {
        tensor,
        weights,
        decomposition: d,
    }
}

/// Square matrix with singular values log-uniform in `[0.1, 10]`.
pub fn conditioned_matrix<T: Scalar>(n: usize, rng: &mut impl Rng) -> DMatrix<T> {
    let q1 = random_orthogonal::<T>(n, 0.3, rng);
    let q2 = random_orthogonal::<T>(n, 0.3, rng);
    let s = DVector::from_fn(n, |_, _| T::from_real(libm_pow10(-1.0 + 2.0 * rng.random::<f64>())));
    q1 * DMatrix::from_diagonal(&s) * q2
}

fn libm_pow10(x: f64) -> f64 {
    nalgebra::ComplexField::exp(x * core::f64::consts::LN_10)
}

/// `r × r × p` tensor `Σ u_i ⊗ v_i ⊗ w_i` with well-conditioned invertible
/// `U`, `V` and Gaussian `w_i`; the plant is returned with unit weights.
pub fn planted_independent<T: Scalar>(r: usize, p: usize, rng: &mut impl Rng) -> Planted<T> {
    let u = conditioned_matrix::<T>(r, rng);
    let v = conditioned_matrix::<T>(r, rng);
    let w = gaussian_matrix::<T>(p, r, rng);
    let d = Decomposition::from_columns(&u, &v, &w).expect("matching sizes");
    let tensor = assemble(&d, [r, r, p]).expect("dims match");
    Planted {
        tensor,
        weights: alloc::vec![T::one(); r],
        decomposition: d,
    }
}

/// `r × r × p` tensor (`r ≥ 2`, `p ≥ 2`) whose slices are `P M_k Q` where the
/// `M_k` span a commutative algebra containing a 2×2 Jordan block, so no
/// invertible `Z` in the span makes every `Z⁻¹Z_k` diagonalizable.
pub fn planted_jordan_violation<T: Scalar>(r: usize, p: usize, rng: &mut impl Rng) -> Tensor3<T> {
    assert!(r >= 2 && p >= 2, "need r >= 2 and p >= 2");
    let pm = conditioned_matrix::<T>(r, rng);
    let qm = conditioned_matrix::<T>(r, rng);
    let slices: Vec<DMatrix<T>> = (0..p)
        .map(|k| {
            let mut m = DMatrix::<T>::zeros(r, r);
            if k == 0 {
                m.fill_with_identity();
            } else {
                let d0: T = T::gaussian(rng);
                m[(0, 0)] = d0;
                m[(1, 1)] = d0;
                for i in 2..r {
                    m[(i, i)] = T::gaussian(rng);
                }
                m[(0, 1)] = if k == 1 {
                    T::one()
                } else {
                    T::gaussian(rng)
                };
            }
            &pm * m * &qm
        })
        .collect();
    Tensor3::from_slices(Axis::Z, &slices).expect("nonempty")
}

fn mode_span_vector<T: Scalar>(s: &Tensor3<T>, axis: Axis, pol: &TolerancePolicy, rng: &mut impl Rng) -> (DMatrix<T>, DVector<T>) {
    let unfolded = s.unfold(axis);
    let rank = numeric_rank(&unfolded, pol);
    let basis = unfolded
        .svd(true, false)
        .u
        .expect("left vectors requested")
        .columns(0, rank)
        .into_owned();
    let x = &basis * gaussian_vector::<T>(rank, rng);
    (basis, x)
}

/// `S + ε·x⊗y⊗z`, or `S + ε·sym(x⊗x⊗z)` when `S` is flagged symmetric, with
/// `x, y, z` drawn from the column spaces of the unfoldings of `S` and `z`
/// vanishing on the first `n` coordinates.
///
/// Slice spans keep their rank bound and the leading `n`-block is unchanged
/// bit for bit, but an orthogonal decomposition generically no longer exists.
/// `None` when the z-unfolding has rank at most `n`.
pub fn off_block_perturbation<T: Scalar>(
    s: &Tensor3<T>,
    n: usize,
    pol: &TolerancePolicy,
    rng: &mut impl Rng,
) -> Option<Tensor3<T>> {
    let (zb, _) = mode_span_vector(s, Axis::Z, pol, rng);
    if zb.ncols() <= n {
        return None;
    }
    let head = zb.rows(0, n).into_owned();
    let kernel = if n == 0 {
        DMatrix::identity(zb.ncols(), zb.ncols())
    } else {
        null_space(&head, pol)
    };
    if kernel.ncols() == 0 {
        return None;
    }
    let mut z = &zb * (&kernel * gaussian_vector::<T>(kernel.ncols(), rng));
    z.rows_mut(0, n).fill(T::zero());
    let (_, x) = mode_span_vector(s, Axis::X, pol, rng);
    let y = if s.is_symmetric() {
        x.clone()
    } else {
        mode_span_vector(s, Axis::Y, pol, rng).1
    };
    let eps = T::from_real(s.norm() / (x.norm() * y.norm() * z.norm()));
    let p = Tensor3::from_fn(s.shape(), |i, j, k| x[i] * y[j] * z[k]);
    if s.is_symmetric() {
        let p = p.symmetrized().ok()?;
        s.linear_combination(T::one(), &p, eps).ok()?.into_symmetric().ok()
    } else {
        s.linear_combination(T::one(), &p, eps).ok()
    }
}
