//! Dense complex Hermitian linear algebra.
//!
//! Eigendecompositions and SVDs come from `nalgebra`; everything built on
//! top of them (psd certification, principal roots, Douglas factorization,
//! Krylov bases, stable ranges, polar factors) lives here.

mod matrix;
mod ops;
mod subspace;

pub use matrix::{ComplexMatrix, EigenDecomposition, HermitianMatrix};
pub use ops::{
    douglas_solve, is_psd, krylov_basis, null_basis, operator_norm, polar_decompose,
    principal_sqrt, pseudo_inverse_psd, psd_range, range_basis, stable_range_intersection,
    PolarDecomposition, PsdReport,
};
pub(crate) use matrix::hermitian_defect;
pub(crate) use ops::{absolute_range, krylov_extend};
pub use subspace::SubspaceBasis;

pub use num_complex::Complex64;

/// Relative accuracy expected of eigenpairs.
pub const EIG_TOL: f64 = 1e-10;
/// Relative reconstruction accuracy of principal square roots.
pub const SQRT_TOL: f64 = 1e-10;
/// Orthonormality tolerance for bases.
pub const ORTHO_TOL: f64 = 1e-12;
/// Pseudoinverse rank cut relative to the largest singular value.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix has no rows or no columns")]
    EmptyMatrix,
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("expected {expected} entries, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("rows have different lengths")]
    Ragged,
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("vectors are not orthonormal (defect {defect:e})")]
    NotOrthonormal { defect: f64 },
    #[error("tolerance must be finite and nonnegative, got {0}")]
    InvalidTolerance(f64),
    #[error("matrix is not positive semidefinite: lambda_min = {lambda_min:e} < -{threshold:e}")]
    NotPsd { lambda_min: f64, threshold: f64 },
    #[error("right-hand side leaves the range: residual {residual:e} > {allowed:e}")]
    RangeViolation { residual: f64, allowed: f64 },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Complex number from a real part.
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn herm(rows: &[&[f64]]) -> HermitianMatrix {
        HermitianMatrix::from_real_rows(rows).unwrap()
    }

    fn assert_close(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, tol: f64) {
        let diff = (a - b).norm();
        assert!(diff <= tol, "difference {diff:e} exceeds {tol:e}\n{a}\n{b}");
    }

    #[test]
    fn psd_examples() {
        let id = is_psd(&herm(&[&[1.0, 0.0], &[0.0, 1.0]]), 1e-10).unwrap();
        assert!(id.is_psd);
        assert!((id.lambda_min - 1.0).abs() < 1e-14);

        let bad = is_psd(&herm(&[&[1.0, 2.0], &[2.0, 1.0]]), 1e-10).unwrap();
        assert!(!bad.is_psd);
        assert!((bad.lambda_min + 1.0).abs() < 1e-14);

        let good = is_psd(&herm(&[&[2.0, 1.0], &[1.0, 2.0]]), 1e-10).unwrap();
        assert!(good.is_psd);
        assert!((good.lambda_min - 1.0).abs() < 1e-14);
        assert!((good.lambda_max - 3.0).abs() < 1e-14);
    }

    #[test]
    fn psd_rejects_negative_tolerance() {
        let m = HermitianMatrix::identity(2);
        assert!(matches!(is_psd(&m, -1.0), Err(LinalgError::InvalidTolerance(_))));
        assert!(matches!(is_psd(&m, f64::NAN), Err(LinalgError::InvalidTolerance(_))));
    }

    #[test]
    fn non_finite_entries_rejected() {
        let m = DMatrix::from_element(2, 2, re(f64::NAN));
        assert_eq!(HermitianMatrix::symmetrized(m.clone()), Err(LinalgError::NonFinite));
        assert_eq!(ComplexMatrix::new(m), Err(LinalgError::NonFinite));
    }

    #[test]
    fn symmetrization_is_exact() {
        let m = DMatrix::from_fn(3, 3, |i, j| {
            Complex64::new(0.1 * (i + 2 * j) as f64, 0.37 * i as f64 - 0.11 * j as f64)
        });
        let h = HermitianMatrix::symmetrized(m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h.get(i, j), h.get(j, i).conj());
            }
        }
    }

    #[test]
    fn checked_construction_rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[re(1.0), re(2.0), re(0.0), re(1.0)]);
        assert!(matches!(
            HermitianMatrix::checked(m, 1e-12),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    #[test]
    fn sqrt_of_diagonal() {
        let r = principal_sqrt(&HermitianMatrix::diagonal(&[4.0, 9.0]).unwrap(), 1e-10).unwrap();
        let expected = HermitianMatrix::diagonal(&[2.0, 3.0]).unwrap();
        assert_close(r.as_matrix(), expected.as_matrix(), 1e-14);
    }

    #[test]
    fn sqrt_of_two_by_two() {
        // eigenpairs (3, (1,1)/√2) and (1, (1,-1)/√2)
        let s3 = 3.0_f64.sqrt();
        let expected = herm(&[
            &[(s3 + 1.0) / 2.0, (s3 - 1.0) / 2.0],
            &[(s3 - 1.0) / 2.0, (s3 + 1.0) / 2.0],
        ]);
        let r = principal_sqrt(&herm(&[&[2.0, 1.0], &[1.0, 2.0]]), 1e-10).unwrap();
        assert_close(r.as_matrix(), expected.as_matrix(), 1e-14);
    }

    #[test]
    fn sqrt_of_zero() {
        let r = principal_sqrt(&HermitianMatrix::zeros(3), 1e-10).unwrap();
        assert_eq!(r.frobenius_norm(), 0.0);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let err = principal_sqrt(&herm(&[&[1.0, 2.0], &[2.0, 1.0]]), 1e-10).unwrap_err();
        assert!(matches!(err, LinalgError::NotPsd { .. }));
    }

    #[test]
    fn sqrt_clamps_tiny_negative_eigenvalues() {
        let m = HermitianMatrix::diagonal(&[1.0, -1e-14]).unwrap();
        let r = principal_sqrt(&m, 1e-10).unwrap();
        assert_close(r.as_matrix(), HermitianMatrix::diagonal(&[1.0, 0.0]).unwrap().as_matrix(), 0.0);
    }

    #[test]
    fn douglas_identity() {
        let a = HermitianMatrix::identity(3);
        let v = douglas_solve(&a, &a.to_complex(), 1e-10).unwrap();
        assert_close(v.as_matrix(), &DMatrix::identity(3, 3), 1e-14);
    }

    #[test]
    fn douglas_singular_diagonal() {
        let a = HermitianMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let d = ComplexMatrix::from_real_rows(&[&[0.5, 0.0], &[0.0, 0.0]]).unwrap();
        let v = douglas_solve(&a, &d, 1e-10).unwrap();
        assert_close(v.as_matrix(), d.as_matrix(), 1e-15);
    }

    #[test]
    fn douglas_range_violation() {
        let a = HermitianMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let d = ComplexMatrix::from_real_rows(&[&[0.5, 0.0], &[0.3, 0.1]]).unwrap();
        assert!(matches!(
            douglas_solve(&a, &d, 1e-10),
            Err(LinalgError::RangeViolation { .. })
        ));
    }

    #[test]
    fn krylov_examples() {
        let a = HermitianMatrix::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let v = 1.0 / 3.0_f64.sqrt();
        let f = SubspaceBasis::from_spanning(DMatrix::from_element(3, 1, re(v)), 0.0).unwrap();
        assert_eq!(krylov_basis(&a, &f, ORTHO_TOL, 10).unwrap().dim(), 3);

        let e1 = SubspaceBasis::coordinate(3, &[0]).unwrap();
        let k = krylov_basis(&HermitianMatrix::identity(3), &e1, ORTHO_TOL, 10).unwrap();
        assert_eq!(k.dim(), 1);
        assert!(k.gap(&e1) < 1e-14);

        let e1 = SubspaceBasis::coordinate(2, &[0]).unwrap();
        let k = krylov_basis(&HermitianMatrix::identity(2), &e1, ORTHO_TOL, 10).unwrap();
        assert_eq!(k.dim(), 1);
    }

    #[test]
    fn krylov_dimension_mismatch() {
        let a = HermitianMatrix::identity(3);
        let f = SubspaceBasis::full(2);
        assert!(matches!(
            krylov_basis(&a, &f, ORTHO_TOL, 10),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    fn truncated_shift(n: usize) -> ComplexMatrix {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            m[(i + 1, i)] = re(1.0);
        }
        ComplexMatrix::new(m).unwrap()
    }

    #[test]
    fn stable_range_examples() {
        let full = stable_range_intersection(&ComplexMatrix::identity(3), 1e-12).unwrap();
        assert_eq!(full.dim(), 3);

        // S^3 = 0 for the 3x3 truncated shift
        let s = truncated_shift(3);
        let s3 = s.mul(&s).unwrap().mul(&s).unwrap();
        assert_eq!(s3.frobenius_norm(), 0.0);
        assert!(stable_range_intersection(&s, 1e-12).unwrap().is_zero());

        let d = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        let r = stable_range_intersection(&d, 1e-12).unwrap();
        assert_eq!(r.dim(), 1);
        assert!(r.gap(&SubspaceBasis::coordinate(2, &[0]).unwrap()) < 1e-14);
    }

    #[test]
    fn polar_examples() {
        let p = polar_decompose(&ComplexMatrix::identity(2), RANK_TOL).unwrap();
        assert_close(p.q.as_matrix(), &DMatrix::identity(2, 2), 1e-14);
        assert_close(p.p.as_matrix(), &DMatrix::identity(2, 2), 1e-14);

        let t = ComplexMatrix::from_real_rows(&[&[-2.0, 0.0], &[0.0, 3.0]]).unwrap();
        let p = polar_decompose(&t, RANK_TOL).unwrap();
        let q = ComplexMatrix::from_real_rows(&[&[-1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_close(p.q.as_matrix(), q.as_matrix(), 1e-14);
        assert_close(p.p.as_matrix(), HermitianMatrix::diagonal(&[2.0, 3.0]).unwrap().as_matrix(), 1e-14);

        let p = polar_decompose(&ComplexMatrix::zeros(2, 2), RANK_TOL).unwrap();
        assert_eq!(p.q.frobenius_norm(), 0.0);
        assert_eq!(p.p.frobenius_norm(), 0.0);
    }

    #[test]
    fn polar_kernel_convention() {
        // T kills e2; Q must kill it as well
        let t = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[2.0, 0.0]]).unwrap();
        let p = polar_decompose(&t, RANK_TOL).unwrap();
        assert_close(&(p.q.as_matrix() * p.p.as_matrix()), t.as_matrix(), 1e-14);
        let e2 = DMatrix::from_column_slice(2, 1, &[re(0.0), re(1.0)]);
        assert!((p.q.as_matrix() * e2).norm() < 1e-14);
    }

    #[test]
    fn null_and_complement() {
        let m = DMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(0.0)]);
        let null = null_basis(&m, 1e-12).unwrap();
        assert_eq!(null.dim(), 1);
        let e2 = SubspaceBasis::coordinate(2, &[1]).unwrap();
        assert!(null.gap(&e2) < 1e-14);
        assert!(e2.complement().gap(&SubspaceBasis::coordinate(2, &[0]).unwrap()) < 1e-14);
        assert_eq!(SubspaceBasis::zero(3).complement().dim(), 3);
    }

    #[test]
    fn min_angle_detects_containment() {
        let r = SubspaceBasis::coordinate(3, &[0, 1]).unwrap();
        let inside = SubspaceBasis::coordinate(3, &[1]).unwrap();
        let outside = SubspaceBasis::coordinate(3, &[2]).unwrap();
        assert!(inside.min_angle_sine(&r) < 1e-15);
        assert!((outside.min_angle_sine(&r) - 1.0).abs() < 1e-15);
    }
}
