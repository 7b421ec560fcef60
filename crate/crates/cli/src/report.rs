//! Report envelope shared by every subcommand.

use crate::json::{AnyTensor, JsonScalar};
use commrank::{Field, Tensor3, TolerancePolicy};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub shape: [usize; 3],
    pub field: Field,
    /// SHA-256 of the field tag, the shape and the little-endian bits of every
    /// entry, so that reformatting the input file does not change it.
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputDigest>,
    pub seed: u64,
    pub policy: TolerancePolicy,
    pub results: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

fn hash_tensor<T: JsonScalar>(t: &Tensor3<T>, h: &mut Sha256) {
    h.update([u8::from(T::FIELD == Field::Complex)]);
    for d in t.shape() {
        h.update((d as u64).to_le_bytes());
    }
    for x in t.data() {
        let z = x.to_c64();
        h.update(z.re.to_bits().to_le_bytes());
        if T::FIELD == Field::Complex {
            h.update(z.im.to_bits().to_le_bytes());
        }
    }
}

pub fn digest(t: &AnyTensor) -> InputDigest {
    let mut h = Sha256::new();
    match t {
        AnyTensor::Real(t) => hash_tensor(t, &mut h),
        AnyTensor::Complex(t) => hash_tensor(t, &mut h),
    }
    InputDigest {
        shape: t.shape(),
        field: t.field(),
        sha256: h.finalize().iter().map(|b| format!("{b:02x}")).collect(),
    }
}
