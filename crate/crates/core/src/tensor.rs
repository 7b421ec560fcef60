//! Dense order-3 tensors and their slices.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Index;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{Field, Scalar};

/// Slice direction. `Z` slices fix the third index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Dense `m × n × p` array, entry `(i, j, k)` stored at `(i*n + j)*p + k`.
///
/// The `symmetric` flag is only ever set after an exact check (or by the
/// averaging constructor [`Tensor3::symmetrized`]), so a flagged tensor is
/// invariant under all six index permutations bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T> {
    shape: [usize; 3],
    data: Vec<T>,
    symmetric: bool,
}

fn permutations(i: usize, j: usize, k: usize) -> [(usize, usize, usize); 6] {
    [
        (i, j, k),
        (i, k, j),
        (j, i, k),
        (j, k, i),
        (k, i, j),
        (k, j, i),
    ]
}

impl<T: Scalar> Tensor3<T> {
    pub fn zeros(shape: [usize; 3]) -> Self {
        Self {
            shape,
            data: alloc::vec![T::zero(); shape[0] * shape[1] * shape[2]],
            symmetric: false,
        }
    }

    pub fn from_fn(shape: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(shape[0] * shape[1] * shape[2]);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    data.push(f(i, j, k));
                }
            }
        }
        Self {
            shape,
            data,
            symmetric: false,
        }
    }

    /// Row-major data (`k` fastest). Every dimension must be positive.
    pub fn from_vec(shape: [usize; 3], data: Vec<T>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::InvalidTensor(format!(
                "shape {shape:?} has a zero dimension"
            )));
        }
        if data.len() != shape[0] * shape[1] * shape[2] {
            return Err(Error::InvalidTensor(format!(
                "shape {shape:?} needs {} entries, got {}",
                shape[0] * shape[1] * shape[2],
                data.len()
            )));
        }
        Ok(Self {
            shape,
            data,
            symmetric: false,
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn field(&self) -> Field {
        T::FIELD
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_cubic(&self) -> bool {
        self.shape[0] == self.shape[1] && self.shape[1] == self.shape[2]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.shape[1] + j) * self.shape[2] + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.data[self.offset(i, j, k)]
    }

    /// Writes one entry. Clears the symmetric flag.
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: T) {
        let o = self.offset(i, j, k);
        self.data[o] = value;
        self.symmetric = false;
    }

    /// Sets the symmetric flag after checking all permutations for exact equality.
    pub fn into_symmetric(mut self) -> Result<Self> {
        if !self.is_cubic() {
            return Err(Error::WrongFormat(format!(
                "symmetric tensors must be cubic, got {:?}",
                self.shape
            )));
        }
        let n = self.shape[0];
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let v = self.get(i, j, k);
                    for (a, b, c) in permutations(i, j, k) {
                        if self.get(a, b, c) != v {
                            return Err(Error::InvalidTensor(format!(
                                "entry ({a},{b},{c}) differs from ({i},{j},{k})"
                            )));
                        }
                    }
                }
            }
        }
        self.symmetric = true;
        Ok(self)
    }

    /// Symmetric part: every entry replaced by the mean over its six index
    /// permutations. The result is flagged symmetric and exactly symmetric.
    pub fn symmetrized(&self) -> Result<Self> {
        if !self.is_cubic() {
            return Err(Error::WrongFormat(format!(
                "symmetrization needs a cubic tensor, got {:?}",
                self.shape
            )));
        }
        let n = self.shape[0];
        let mut out = Self::zeros(self.shape);
        let sixth = T::from_real(1.0 / 6.0);
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let perms = permutations(i, j, k);
                    let mut acc = T::zero();
                    for &(a, b, c) in &perms {
                        acc += self.get(a, b, c);
                    }
                    let v = acc * sixth;
                    for (a, b, c) in perms {
                        let o = out.offset(a, b, c);
                        out.data[o] = v;
                    }
                }
            }
        }
        out.symmetric = true;
        Ok(out)
    }

    /// Slices along `axis`. For `Z`, slice `k` is the `m × n` matrix `T[·,·,k]`;
    /// `X` slices are `n × p`, `Y` slices are `m × p`.
    pub fn slices(&self, axis: Axis) -> Vec<DMatrix<T>> {
        let [m, n, p] = self.shape;
        match axis {
            Axis::X => (0..m)
                .map(|i| DMatrix::from_fn(n, p, |j, k| self.get(i, j, k)))
                .collect(),
            Axis::Y => (0..n)
                .map(|j| DMatrix::from_fn(m, p, |i, k| self.get(i, j, k)))
                .collect(),
            Axis::Z => (0..p)
                .map(|k| DMatrix::from_fn(m, n, |i, j| self.get(i, j, k)))
                .collect(),
        }
    }

    /// Inverse of [`Tensor3::slices`].
    pub fn from_slices(axis: Axis, slices: &[DMatrix<T>]) -> Result<Self> {
        let first = slices.first().ok_or_else(|| {
            Error::InvalidTensor(format!("no slices given along axis {axis:?}"))
        })?;
        let (a, b) = first.shape();
        if slices.iter().any(|s| s.shape() != (a, b)) {
            return Err(Error::DimensionMismatch(
                "slices must share one shape".into(),
            ));
        }
        let q = slices.len();
        let shape = match axis {
            Axis::X => [q, a, b],
            Axis::Y => [a, q, b],
            Axis::Z => [a, b, q],
        };
        if shape.contains(&0) {
            return Err(Error::InvalidTensor(format!(
                "shape {shape:?} has a zero dimension"
            )));
        }
        Ok(Self::from_fn(shape, |i, j, k| match axis {
            Axis::X => slices[i][(j, k)],
            Axis::Y => slices[j][(i, k)],
            Axis::Z => slices[k][(i, j)],
        }))
    }

    /// Matricization whose rows are indexed by `axis`.
    pub fn unfold(&self, axis: Axis) -> DMatrix<T> {
        let [m, n, p] = self.shape;
        match axis {
            Axis::X => DMatrix::from_fn(m, n * p, |i, c| self.get(i, c / p, c % p)),
            Axis::Y => DMatrix::from_fn(n, m * p, |j, c| self.get(c / p, j, c % p)),
            Axis::Z => DMatrix::from_fn(p, m * n, |k, c| self.get(c / n, c % n, k)),
        }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        crate::matrix::sqrt(self.data.iter().map(|x| x.modulus_squared()).sum::<f64>())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.modulus()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    /// `a·self + b·other`. Keeps the symmetric flag when both inputs carry it.
    pub fn linear_combination(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
            symmetric: self.symmetric && other.symmetric,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.linear_combination(T::one(), other, -T::one())
    }

    /// `‖self − other‖ / ‖self‖`, with the absolute difference used when `self` is zero.
    pub fn relative_distance(&self, other: &Self) -> Result<f64> {
        let diff = self.sub(other)?.norm();
        let scale = self.norm();
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }

    pub fn scaled(&self, a: T) -> Self {
        Self {
            shape: self.shape,
            data: self.data.iter().map(|&x| a * x).collect(),
            symmetric: self.symmetric,
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Tensor3<U> {
        Tensor3 {
            shape: self.shape,
            data: self.data.iter().map(|&x| f(x)).collect(),
            symmetric: self.symmetric,
        }
    }

    /// Copy into a larger zero tensor, occupying the leading corner.
    pub fn zero_padded(&self, shape: [usize; 3]) -> Result<Self> {
        if (0..3).any(|a| shape[a] < self.shape[a]) {
            return Err(Error::ShapeTooSmall(format!(
                "cannot pad {:?} into {shape:?}",
                self.shape
            )));
        }
        let mut out = Self::zeros(shape);
        out.copy_block_from(self)?;
        if self.symmetric && out.is_cubic() {
            out.symmetric = true;
        }
        Ok(out)
    }

    /// Overwrite the leading block with `t`. The symmetric flag survives only
    /// when both tensors are flagged symmetric and `t` is cubic.
    pub fn copy_block_from(&mut self, t: &Self) -> Result<()> {
        let [m, n, p] = t.shape;
        if m > self.shape[0] || n > self.shape[1] || p > self.shape[2] {
            return Err(Error::ShapeTooSmall(format!(
                "block {:?} does not fit in {:?}",
                t.shape, self.shape
            )));
        }
        for i in 0..m {
            for j in 0..n {
                for k in 0..p {
                    let o = self.offset(i, j, k);
                    self.data[o] = t.get(i, j, k);
                }
            }
        }
        self.symmetric = self.symmetric && t.symmetric && t.is_cubic();
        Ok(())
    }
}

impl<T: Scalar> Index<(usize, usize, usize)> for Tensor3<T> {
    type Output = T;

    fn index(&self, (i, j, k): (usize, usize, usize)) -> &T {
        &self.data[self.offset(i, j, k)]
    }
}

/// Index range over which [`is_subtensor`] compares entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SubtensorMode {
    /// `T` is `n × n × n`; compare `S_ijk = T_ijk` for all `i, j, k < n`.
    Cube,
    /// `T` is `n × n × p`; compare the leading `n × n` block of the first `p` z-slices.
    SliceBlock,
}

/// Exact entrywise test that `t` sits in the leading corner of `s`.
pub fn is_subtensor<T: Scalar>(t: &Tensor3<T>, s: &Tensor3<T>, mode: SubtensorMode) -> Result<bool> {
    if mode == SubtensorMode::Cube && !t.is_cubic() {
        return Err(Error::WrongFormat(format!(
            "cube mode needs a cubic tensor, got {:?}",
            t.shape()
        )));
    }
    let [m, n, p] = t.shape();
    let ss = s.shape();
    if ss[0] < m || ss[1] < n || ss[2] < p {
        return Err(Error::ShapeTooSmall(format!(
            "{ss:?} cannot contain {:?}",
            t.shape()
        )));
    }
    for i in 0..m {
        for j in 0..n {
            for k in 0..p {
                if s.get(i, j, k) != t.get(i, j, k) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
