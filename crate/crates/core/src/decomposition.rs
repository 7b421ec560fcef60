//! Rank-one sums `Σ u_i ⊗ v_i ⊗ w_i` and their slice factorizations.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor3;

#[derive(Debug, Clone, PartialEq)]
pub struct Term<T> {
    pub u: DVector<T>,
    pub v: DVector<T>,
    pub w: DVector<T>,
    /// Padding terms may contain zero vectors.
    pub padding: bool,
}

impl<T: Scalar> Term<T> {
    pub fn new(u: DVector<T>, v: DVector<T>, w: DVector<T>) -> Self {
        Self {
            u,
            v,
            w,
            padding: false,
        }
    }

    pub fn cube(x: DVector<T>) -> Self {
        Self::new(x.clone(), x.clone(), x)
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.u.len(), self.v.len(), self.w.len()]
    }

    pub fn is_symmetric(&self) -> bool {
        self.u == self.v && self.v == self.w
    }

    fn has_zero_vector(&self) -> bool {
        [&self.u, &self.v, &self.w]
            .iter()
            .any(|x| x.iter().all(|c| c.is_zero()))
    }
}

/// An ordered list of rank-one terms with common dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    terms: Vec<Term<T>>,
}

impl<T: Scalar> Default for Decomposition<T> {
    fn default() -> Self {
        Self { terms: Vec::new() }
    }
}

impl<T: Scalar> Decomposition<T> {
    pub fn new(terms: Vec<Term<T>>) -> Result<Self> {
        if let Some(first) = terms.first() {
            let dims = first.dims();
            for (i, t) in terms.iter().enumerate() {
                if t.dims() != dims {
                    return Err(Error::DimensionMismatch(format!(
                        "term {i} has dimensions {:?}, term 0 has {dims:?}",
                        t.dims()
                    )));
                }
                if !t.padding && t.has_zero_vector() {
                    return Err(Error::InvalidTensor(format!(
                        "term {i} has a zero vector and is not flagged as padding"
                    )));
                }
            }
        }
        Ok(Self { terms })
    }

    /// `Σ x_i^{⊗3}`.
    pub fn symmetric(xs: Vec<DVector<T>>) -> Result<Self> {
        Self::new(xs.into_iter().map(Term::cube).collect())
    }

    /// Builds terms from the columns of `U`, `V`, `W` (column `i` gives term `i`).
    pub fn from_columns(u: &DMatrix<T>, v: &DMatrix<T>, w: &DMatrix<T>) -> Result<Self> {
        let r = u.ncols();
        if v.ncols() != r || w.ncols() != r {
            return Err(Error::DimensionMismatch(format!(
                "factor matrices have {r}, {} and {} columns",
                v.ncols(),
                w.ncols()
            )));
        }
        let terms = (0..r)
            .map(|i| {
                let mut t = Term::new(
                    u.column(i).into_owned(),
                    v.column(i).into_owned(),
                    w.column(i).into_owned(),
                );
                t.padding = t.has_zero_vector();
                t
            })
            .collect();
        Self::new(terms)
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Term<T>> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dims(&self) -> Option<[usize; 3]> {
        self.terms.first().map(Term::dims)
    }

    pub fn is_symmetric(&self) -> bool {
        self.terms.iter().all(Term::is_symmetric)
    }

    /// Factor matrices with the term vectors as columns: `(U, V, W)` of sizes
    /// `m × r`, `n × r`, `p × r`.
    pub fn factor_matrices(&self) -> Option<(DMatrix<T>, DMatrix<T>, DMatrix<T>)> {
        let [m, n, p] = self.dims()?;
        let r = self.len();
        let u = DMatrix::from_fn(m, r, |a, i| self.terms[i].u[a]);
        let v = DMatrix::from_fn(n, r, |a, i| self.terms[i].v[a]);
        let w = DMatrix::from_fn(p, r, |a, i| self.terms[i].w[a]);
        Some((u, v, w))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U + Copy) -> Decomposition<U> {
        Decomposition {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    u: t.u.map(f),
                    v: t.v.map(f),
                    w: t.w.map(f),
                    padding: t.padding,
                })
                .collect(),
        }
    }

    pub fn assemble(&self, shape: [usize; 3]) -> Result<Tensor3<T>> {
        assemble(self, shape)
    }
}

/// `Σ_i u_i ⊗ v_i ⊗ w_i` as a dense tensor of the given shape.
pub fn assemble<T: Scalar>(d: &Decomposition<T>, shape: [usize; 3]) -> Result<Tensor3<T>> {
    if let Some(dims) = d.dims() {
        if dims != shape {
            return Err(Error::DimensionMismatch(format!(
                "decomposition vectors have lengths {dims:?}, requested shape {shape:?}"
            )));
        }
    }
    let mut data = alloc::vec![T::zero(); shape[0] * shape[1] * shape[2]];
    for t in d.terms() {
        let mut o = 0;
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                let uv = t.u[i] * t.v[j];
                for k in 0..shape[2] {
                    data[o] += uv * t.w[k];
                    o += 1;
                }
            }
        }
    }
    Tensor3::from_vec(shape, data)
}

/// `Z_k = Uᵀ D_k V` with `D_k = diag(diags[k])`; row `i` of `U` (resp. `V`) is `u_i` (resp. `v_i`).
#[derive(Debug, Clone, PartialEq)]
pub struct SliceFactorization<T> {
    pub u: DMatrix<T>,
    pub v: DMatrix<T>,
    pub diags: Vec<DVector<T>>,
}

impl<T: Scalar> SliceFactorization<T> {
    pub fn rank(&self) -> usize {
        self.u.nrows()
    }

    /// The `p` matrices `Uᵀ D_k V`.
    pub fn slices(&self) -> Vec<DMatrix<T>> {
        let ut = self.u.transpose();
        self.diags
            .iter()
            .map(|d| {
                let mut dv = self.v.clone();
                for (i, mut row) in dv.row_iter_mut().enumerate() {
                    row *= d[i];
                }
                &ut * dv
            })
            .collect()
    }
}

pub fn to_slice_factorization<T: Scalar>(d: &Decomposition<T>) -> SliceFactorization<T> {
    let [m, n, p] = d.dims().unwrap_or([0, 0, 0]);
    let r = d.len();
    let terms = d.terms();
    SliceFactorization {
        u: DMatrix::from_fn(r, m, |i, a| terms[i].u[a]),
        v: DMatrix::from_fn(r, n, |i, a| terms[i].v[a]),
        diags: (0..p)
            .map(|k| DVector::from_fn(r, |i, _| terms[i].w[k]))
            .collect(),
    }
}

/// Terms with a zero vector are flagged as padding.
pub fn from_slice_factorization<T: Scalar>(f: &SliceFactorization<T>) -> Result<Decomposition<T>> {
    let r = f.u.nrows();
    if f.v.nrows() != r || f.diags.iter().any(|d| d.len() != r) {
        return Err(Error::DimensionMismatch(format!(
            "U has {r} rows, V has {}, diagonal lengths {:?}",
            f.v.nrows(),
            f.diags.iter().map(|d| d.len()).collect::<Vec<_>>()
        )));
    }
    let terms = (0..r)
        .map(|i| {
            let mut t = Term::new(
                f.u.row(i).transpose(),
                f.v.row(i).transpose(),
                DVector::from_fn(f.diags.len(), |k, _| f.diags[k][i]),
            );
            t.padding = t.has_zero_vector();
            t
        })
        .collect();
    Decomposition::new(terms)
}

/// Symmetric decomposition of the symmetric part of `assemble(d)` with at most
/// `4·len(d)` cubes, using
/// `Σ_{s,t=±1} s·t·(u + s v + t w)^{⊗3} = 24·Sym(u ⊗ v ⊗ w)`.
///
/// The coefficient `±1/24` is absorbed by a real cube root. Cubes of zero
/// vectors are dropped.
pub fn symmetrize_decomposition<T: Scalar>(d: &Decomposition<T>) -> Result<Decomposition<T>> {
    if let Some([m, n, p]) = d.dims() {
        if m != n || n != p {
            return Err(Error::WrongFormat(format!(
                "symmetrization needs a cubic format, got {:?}",
                [m, n, p]
            )));
        }
    }
    let scale = ComplexField::cbrt(1.0_f64 / 24.0);
    let mut out = Vec::with_capacity(4 * d.len());
    for t in d.terms() {
        for (sv, sw) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
            let x = &t.u + &t.v * T::from_real(sv) + &t.w * T::from_real(sw);
            let c = scale * sv * sw;
            let y = x * T::from_real(c);
            if y.iter().all(|e| e.is_zero()) {
                continue;
            }
            out.push(Term::cube(y));
        }
    }
    Decomposition::new(out)
}
