//! JSON file formats for tensors, matrices, decompositions and certificates.
//!
//! Real entries are plain numbers; complex entries are `[re, im]` pairs.
//! Tensors are stored row-major in `(i, j, k)` order under `data`, or as a
//! list of z-slices under `slices`.

use commrank::ind::IndCertificate;
use commrank::ortho::{Check, RankCertificate};
use commrank::{Complex64, DMatrix, DVector, Decomposition, Field, OdecoFlavor, Scalar, Tensor3, Term};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;

#[derive(Debug)]
pub struct FormatError(pub String);

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub type FormatResult<T> = Result<T, FormatError>;

fn bad<T>(msg: impl Into<String>) -> FormatResult<T> {
    Err(FormatError(msg.into()))
}

/// Scalars with a JSON representation.
pub trait JsonScalar: Scalar {
    fn to_json(self) -> Value;
    fn from_json(v: &Value) -> FormatResult<Self>;
}

impl JsonScalar for f64 {
    fn to_json(self) -> Value {
        json!(self)
    }

    fn from_json(v: &Value) -> FormatResult<Self> {
        match v.as_f64() {
            Some(x) => Ok(x),
            None => bad(format!("expected a real number, got {v}")),
        }
    }
}

impl JsonScalar for Complex64 {
    fn to_json(self) -> Value {
        json!([self.re, self.im])
    }

    fn from_json(v: &Value) -> FormatResult<Self> {
        if let Some(x) = v.as_f64() {
            return Ok(Complex64::new(x, 0.0));
        }
        match v.as_array().map(|a| a.as_slice()) {
            Some([re, im]) => match (re.as_f64(), im.as_f64()) {
                (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                _ => bad(format!("expected [re, im], got {v}")),
            },
            _ => bad(format!("expected [re, im], got {v}")),
        }
    }
}

pub fn vector_to_json<T: JsonScalar>(v: &DVector<T>) -> Value {
    Value::Array(v.iter().map(|x| x.to_json()).collect())
}

pub fn vector_from_json<T: JsonScalar>(v: &Value) -> FormatResult<DVector<T>> {
    let Some(items) = v.as_array() else {
        return bad("expected an array");
    };
    let xs = items.iter().map(T::from_json).collect::<FormatResult<Vec<_>>>()?;
    Ok(DVector::from_vec(xs))
}

pub fn matrix_to_json<T: JsonScalar>(m: &DMatrix<T>) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| Value::Array(row.iter().map(|x| x.to_json()).collect()))
            .collect(),
    )
}

pub fn matrix_from_json<T: JsonScalar>(v: &Value) -> FormatResult<DMatrix<T>> {
    let Some(rows) = v.as_array() else {
        return bad("expected a matrix as an array of rows");
    };
    let rows = rows
        .iter()
        .map(|r| vector_from_json::<T>(r))
        .collect::<FormatResult<Vec<_>>>()?;
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return bad("matrix rows have different lengths");
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn matrices_to_json<T: JsonScalar>(ms: &[DMatrix<T>]) -> Value {
    Value::Array(ms.iter().map(matrix_to_json).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape: Option<[usize; 3]>,
    field: Field,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    symmetric: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    data: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slices: Option<Vec<Value>>,
}

/// A tensor over either field, as read from JSON.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTensor {
    Real(Tensor3<f64>),
    Complex(Tensor3<Complex64>),
}

impl AnyTensor {
    pub fn shape(&self) -> [usize; 3] {
        match self {
            Self::Real(t) => t.shape(),
            Self::Complex(t) => t.shape(),
        }
    }

    pub fn field(&self) -> Field {
        match self {
            Self::Real(_) => Field::Real,
            Self::Complex(_) => Field::Complex,
        }
    }
}

pub fn tensor_to_json<T: JsonScalar>(t: &Tensor3<T>) -> Value {
    let mut m = Map::new();
    m.insert("field".into(), json!(T::FIELD));
    m.insert("shape".into(), json!(t.shape()));
    if t.is_symmetric() {
        m.insert("symmetric".into(), json!(true));
    }
    m.insert(
        "data".into(),
        Value::Array(t.data().iter().map(|x| x.to_json()).collect()),
    );
    Value::Object(m)
}

fn typed_tensor<T: JsonScalar>(f: &TensorFile) -> FormatResult<Tensor3<T>> {
    let t = match (&f.data, &f.slices) {
        (Some(data), None) => {
            let Some(shape) = f.shape else {
                return bad("`data` needs a `shape`");
            };
            let xs = data.iter().map(T::from_json).collect::<FormatResult<Vec<_>>>()?;
            Tensor3::from_vec(shape, xs).map_err(|e| FormatError(e.to_string()))?
        }
        (None, Some(slices)) => {
            let ms = slices
                .iter()
                .map(matrix_from_json::<T>)
                .collect::<FormatResult<Vec<_>>>()?;
            let t = Tensor3::from_slices(commrank::Axis::Z, &ms).map_err(|e| FormatError(e.to_string()))?;
            if f.shape.is_some_and(|s| s != t.shape()) {
                return bad(format!("`shape` {:?} disagrees with the slices {:?}", f.shape.unwrap(), t.shape()));
            }
            t
        }
        _ => return bad("a tensor needs exactly one of `data` and `slices`"),
    };
    Ok(t)
}

/// Parse a tensor. A `"symmetric": true` flag is kept only after an exact
/// symmetry check; its failure is reported as [`TensorLoadError::NotSymmetric`].
pub fn tensor_from_json(v: &Value) -> Result<AnyTensor, TensorLoadError> {
    let f: TensorFile = serde_json::from_value(v.clone()).map_err(|e| TensorLoadError::Format(FormatError(e.to_string())))?;
    let sym = f.symmetric;
    match f.field {
        Field::Real => {
            let t = typed_tensor::<f64>(&f)?;
            Ok(AnyTensor::Real(if sym { t.into_symmetric().map_err(TensorLoadError::NotSymmetric)? } else { t }))
        }
        Field::Complex => {
            let t = typed_tensor::<Complex64>(&f)?;
            Ok(AnyTensor::Complex(if sym { t.into_symmetric().map_err(TensorLoadError::NotSymmetric)? } else { t }))
        }
    }
}

#[derive(Debug)]
pub enum TensorLoadError {
    Format(FormatError),
    NotSymmetric(commrank::Error),
}

impl From<FormatError> for TensorLoadError {
    fn from(e: FormatError) -> Self {
        Self::Format(e)
    }
}

pub fn decomposition_to_json<T: JsonScalar>(d: &Decomposition<T>) -> Value {
    let terms: Vec<Value> = d
        .terms()
        .iter()
        .map(|t| {
            let mut m = Map::new();
            m.insert("u".into(), vector_to_json(&t.u));
            m.insert("v".into(), vector_to_json(&t.v));
            m.insert("w".into(), vector_to_json(&t.w));
            if t.padding {
                m.insert("padding".into(), json!(true));
            }
            Value::Object(m)
        })
        .collect();
    json!({ "field": T::FIELD, "dims": d.dims(), "terms": terms })
}

/// Parse a decomposition whose `field` must be `T::FIELD`.
pub fn decomposition_from_json<T: JsonScalar>(v: &Value) -> FormatResult<Decomposition<T>> {
    let field: Field = match v.get("field") {
        Some(f) => serde_json::from_value(f.clone()).map_err(|e| FormatError(e.to_string()))?,
        None => T::FIELD,
    };
    if field != T::FIELD {
        return bad(format!("decomposition is {field}, tensor is {}", T::FIELD));
    }
    let Some(terms) = v.get("terms").and_then(Value::as_array) else {
        return bad("decomposition needs a `terms` array");
    };
    let terms = terms
        .iter()
        .map(|t| {
            let get = |k: &str| t.get(k).ok_or_else(|| FormatError(format!("term without `{k}`")));
            let mut term = Term::new(
                vector_from_json(get("u")?)?,
                vector_from_json(get("v")?)?,
                vector_from_json(get("w")?)?,
            );
            term.padding = t.get("padding").and_then(Value::as_bool).unwrap_or(false);
            Ok(term)
        })
        .collect::<FormatResult<Vec<_>>>()?;
    Decomposition::new(terms).map_err(|e| FormatError(e.to_string()))
}

fn checks_to_json(checks: &BTreeMap<String, Check>) -> Value {
    serde_json::to_value(checks).expect("checks serialize")
}

fn checks_from_json(v: Option<&Value>) -> FormatResult<BTreeMap<String, Check>> {
    match v {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| FormatError(e.to_string())),
        None => Ok(BTreeMap::new()),
    }
}

fn field_of<'a>(v: &'a Value, key: &str) -> FormatResult<&'a Value> {
    v.get(key).ok_or_else(|| FormatError(format!("missing `{key}`")))
}

fn usize_of(v: &Value, key: &str) -> FormatResult<usize> {
    field_of(v, key)?
        .as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| FormatError(format!("`{key}` must be a non-negative integer")))
}

fn tensor_of<T: JsonScalar>(v: &Value, key: &str) -> FormatResult<Tensor3<T>> {
    let f: TensorFile = serde_json::from_value(field_of(v, key)?.clone()).map_err(|e| FormatError(e.to_string()))?;
    if f.field != T::FIELD {
        return bad(format!("`{key}` is {}, expected {}", f.field, T::FIELD));
    }
    let t = typed_tensor::<T>(&f)?;
    // Certificates store tensors verbatim; the symmetric flag is restored
    // only when it still holds exactly.
    Ok(if f.symmetric { t.clone().into_symmetric().unwrap_or(t) } else { t })
}

pub fn rank_certificate_to_json<T: JsonScalar>(c: &RankCertificate<T>) -> Value {
    json!({
        "kind": "ortho",
        "flavor": c.flavor,
        "r": c.r,
        "seed": c.seed,
        "trials": c.trials,
        "checks": checks_to_json(&c.checks),
        "t": tensor_to_json(&c.t),
        "s": tensor_to_json(&c.s),
    })
}

pub fn rank_certificate_from_json<T: JsonScalar>(v: &Value) -> FormatResult<RankCertificate<T>> {
    let flavor: OdecoFlavor =
        serde_json::from_value(field_of(v, "flavor")?.clone()).map_err(|e| FormatError(e.to_string()))?;
    Ok(RankCertificate {
        t: tensor_of(v, "t")?,
        s: tensor_of(v, "s")?,
        r: usize_of(v, "r")?,
        flavor,
        checks: checks_from_json(v.get("checks"))?,
        trials: usize_of(v, "trials")?,
        seed: field_of(v, "seed")?.as_u64().ok_or_else(|| FormatError("`seed` must be an integer".into()))?,
    })
}

pub fn ind_certificate_to_json<T: JsonScalar>(c: &IndCertificate<T>) -> Value {
    json!({
        "kind": "ind",
        "symmetric": c.symmetric,
        "r": c.r,
        "seed": c.seed,
        "witness_z": Value::Array(c.witness_z.iter().map(|x| x.to_json()).collect()),
        "checks": checks_to_json(&c.checks),
        "t": tensor_to_json(&c.t),
        "s": tensor_to_json(&c.s),
    })
}

pub fn ind_certificate_from_json<T: JsonScalar>(v: &Value) -> FormatResult<IndCertificate<T>> {
    let witness = match v.get("witness_z") {
        Some(w) => vector_from_json::<T>(w)?.iter().copied().collect(),
        None => Vec::new(),
    };
    Ok(IndCertificate {
        t: tensor_of(v, "t")?,
        s: tensor_of(v, "s")?,
        r: usize_of(v, "r")?,
        symmetric: field_of(v, "symmetric")?.as_bool().ok_or_else(|| FormatError("`symmetric` must be a boolean".into()))?,
        checks: checks_from_json(v.get("checks"))?,
        witness_z: witness,
        seed: field_of(v, "seed")?.as_u64().ok_or_else(|| FormatError("`seed` must be an integer".into()))?,
    })
}

/// Field named by a certificate's `t` tensor.
pub fn certificate_field(v: &Value) -> FormatResult<Field> {
    let t = field_of(v, "t")?;
    serde_json::from_value(field_of(t, "field")?.clone()).map_err(|e| FormatError(e.to_string()))
}

/// Accept either the object itself or a report wrapping it under `results.<key>`.
pub fn unwrap_report<'a>(v: &'a Value, key: &str) -> &'a Value {
    v.get("results").and_then(|r| r.get(key)).unwrap_or(v)
}
