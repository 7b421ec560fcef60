//! Tensor rank via commuting matrices: lower bounds from commutators and
//! Koszul flattenings, orthogonal and independent decompositions, commuting
//! diagonalizable embeddings, and verifiable rank certificates.
//!
//! Everything works over ℝ (`f64`) and ℂ (`Complex64`). Orthogonality always
//! refers to the bilinear form `uᵀv`, never the Hermitian one.

#![no_std]

extern crate alloc;

pub mod bounds;
pub mod decomposition;
pub mod eigen;
pub mod embed;
pub mod error;
pub mod extension;
pub mod ind;
pub mod matrix;
pub mod oracle;
pub mod ortho;
pub mod plant;
pub mod policy;
pub mod scalar;
pub mod tensor;

pub use bounds::{
    det_identity_residual, embedding_pair_bound, koszul_bound, koszul_flattening, strassen_bound,
    BoundMethod, BoundReport,
};
pub use decomposition::{
    assemble, from_slice_factorization, symmetrize_decomposition, to_slice_factorization,
    Decomposition, SliceFactorization, Term,
};
pub use eigen::{
    is_diagonalizable, joint_diagonalize_similarity, simdiag_equivalence, JointDiagonalization,
    SimDiagEquivalence,
};
pub use embed::{
    commuting_embed, embedding_to_rank_bound, first_slice_identity_embed, strassen_pair_embed,
    trivial_embed_2n, Embedding,
};
pub use error::{Error, Result};
pub use extension::{complete_dual_bases, orthogonal_extension, takagi_factor};
pub use ind::{
    build_ind_certificate, indordi_check, jennrich_decompose, verify_ind_certificate,
    IndCertificate,
};
pub use matrix::{commutator, generalized_commutator, numeric_rank};
pub use num_complex::Complex64;
pub use oracle::{als_fit, rank_bracket, rank_lower, RankBracket};
pub use ortho::{
    build_rank_certificate, odeco_check, odeco_decompose, verify_rank_certificate, OdecoFlavor,
    RankCertificate,
};
pub use policy::TolerancePolicy;
pub use scalar::{Field, Scalar};
pub use tensor::{is_subtensor, Axis, SubtensorMode, Tensor3};

pub use nalgebra::{DMatrix, DVector};
