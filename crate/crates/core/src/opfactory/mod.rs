//! Finite-dimensional operator constructions: the isometry `W_Z` attached
//! to a positive operator and a subspace, Wold-type structure, Krylov
//! generator counts and the Hankel double-positivity laboratory.
//!
//! A psd matrix with trivial kernel has full range, so no nonzero `Z` can
//! avoid it. Singular `A` is therefore admitted; the algebraic identities
//! of the construction are what survives at finite size.

mod hankel;
mod wold;
mod wz;

#[cfg(test)]
mod tests;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::{is_psd, ComplexMatrix, HermitianMatrix, LinalgError};

pub use hankel::{
    hankel_double_positivity, hankel_multiplicity_experiment, hankel_section, moments_from_measure,
    random_measure, DoublePositivityReport, MeasureSpec, MomentSequence, MomentSource, MultiplicityExperiment,
    TrialOutcome, ATOM_FLOOR, MAX_EXPERIMENT_SIZE,
};
pub use wold::{krylov_generators, wold_analyze, KrylovGenerators, WoldReport, PROBE_SEED};
pub use wz::{build_wz, IsometryReport, WzChecks, MIN_ANGLE};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OpError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("operator is not psd: lambda_min = {lambda_min:e} < -{threshold:e}")]
    NotPsd { lambda_min: f64, threshold: f64 },
    #[error(
        "Z meets the range of A (smallest principal angle {angle:e} rad < {min_angle:e}); \
         in finite dimension W_Z needs Z to avoid R(A), which requires A singular and Z transversal to its range"
    )]
    Degenerate { angle: f64, min_angle: f64 },
    #[error("operator norm {norm} exceeds 1 + tol")]
    NormViolation { norm: f64 },
    #[error("need {needed} moments, have {available}")]
    InsufficientMoments { needed: usize, available: usize },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },
}

pub type Result<T> = std::result::Result<T, OpError>;

/// A psd operator with a human-readable origin.
#[derive(Clone, Debug)]
pub struct PositiveOperatorSpec {
    a: HermitianMatrix,
    pub description: String,
}

impl PositiveOperatorSpec {
    pub fn new(a: HermitianMatrix, description: impl Into<String>, tol: f64) -> Result<Self> {
        let report = is_psd(&a, tol)?;
        if !report.is_psd {
            return Err(OpError::NotPsd {
                lambda_min: report.lambda_min,
                threshold: report.threshold,
            });
        }
        Ok(PositiveOperatorSpec {
            a,
            description: description.into(),
        })
    }

    pub fn a(&self) -> &HermitianMatrix {
        &self.a
    }
}

/// Truncated unilateral shift `S e_n = e_{n+1}` on `C^N`.
pub fn shift_matrix(n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(OpError::InvalidParameter {
            name: "N",
            message: "must be at least 1".into(),
        });
    }
    Ok(ComplexMatrix::new(DMatrix::from_fn(n, n, |i, j| {
        if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))?)
}
