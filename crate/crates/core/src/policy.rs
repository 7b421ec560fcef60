//! Numerical tolerances shared by every routine.

use crate::error::{Error, Result};

/// All thresholds that turn exact-arithmetic notions (rank, diagonalizable,
/// commuting) into floating point decisions.
///
/// Relative tolerances are scaled by the quantity named in each field.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TolerancePolicy {
    /// Singular values at most `rank_rel_tol * max(rows, cols) * σ_max` count as zero.
    pub rank_rel_tol: f64,
    /// Eigenvalues closer than `eig_cluster_tol * ‖M‖_F` are merged into one cluster.
    pub eig_cluster_tol: f64,
    /// A cluster of multiplicity k is semisimple when the k smallest singular
    /// values of `M - λI` are at most `defect_tol * ‖M‖_F`.
    pub defect_tol: f64,
    /// Eigenvalues with `|Im λ| <= real_axis_tol * ‖M‖_F` are treated as real.
    pub real_axis_tol: f64,
    /// Relative residual for commutators, symmetry tests and reconstructions.
    pub residual_tol: f64,
    /// Random combinations drawn when estimating the maximal rank in a span.
    pub span_trials: usize,
    /// Random combinations drawn when searching for an invertible slice combination.
    pub invertible_trials: usize,
    /// Extra random invertible combinations checked when verifying an
    /// independent-decomposition certificate.
    pub witness_checks: usize,
    pub als_max_iters: usize,
    /// ALS stops once the relative residual improves by less than this per sweep.
    pub als_tol: f64,
    /// Relative residual below which an ALS fit witnesses `rank <= r`.
    pub fit_threshold: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            rank_rel_tol: 1e-10,
            eig_cluster_tol: 1e-6,
            defect_tol: 1e-5,
            real_axis_tol: 1e-6,
            residual_tol: 1e-8,
            span_trials: 8,
            invertible_trials: 32,
            witness_checks: 5,
            als_max_iters: 3000,
            als_tol: 1e-15,
            fit_threshold: 1e-8,
        }
    }
}

impl TolerancePolicy {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.rank_rel_tol, "rank_rel_tol must be positive"),
            (self.eig_cluster_tol, "eig_cluster_tol must be positive"),
            (self.defect_tol, "defect_tol must be positive"),
            (self.real_axis_tol, "real_axis_tol must be positive"),
            (self.residual_tol, "residual_tol must be positive"),
            (self.als_tol, "als_tol must be positive"),
            (self.fit_threshold, "fit_threshold must be positive"),
        ];
        for (value, msg) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidPolicy(msg));
            }
        }
        if self.span_trials == 0 {
            return Err(Error::InvalidPolicy("span_trials must be at least 1"));
        }
        if self.invertible_trials == 0 {
            return Err(Error::InvalidPolicy("invertible_trials must be at least 1"));
        }
        if self.als_max_iters == 0 {
            return Err(Error::InvalidPolicy("als_max_iters must be at least 1"));
        }
        Ok(())
    }
}
