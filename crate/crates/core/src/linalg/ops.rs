use nalgebra::DMatrix;
use num_complex::Complex64;

use super::matrix::{spectral_norm, svd, symmetrize, ComplexMatrix, HermitianMatrix};
use super::subspace::{BasisBuilder, SubspaceBasis};
use super::{LinalgError, Result, RANK_TOL};

/// Outcome of a tolerance-aware positive semidefiniteness test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdReport {
    pub is_psd: bool,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `tol * max(1, ||M||)`; eigenvalues above `-threshold` count as nonnegative.
    pub threshold: f64,
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(LinalgError::InvalidTolerance(tol));
    }
    Ok(())
}

/// `λ_min(M) >= -tol * max(1, ||M||)`.
pub fn is_psd(m: &HermitianMatrix, tol: f64) -> Result<PsdReport> {
    check_tol(tol)?;
    let ev = m.eigenvalues();
    let lambda_min = ev[0];
    let lambda_max = ev[ev.len() - 1];
    let norm = lambda_min.abs().max(lambda_max.abs());
    let threshold = tol * norm.max(1.0);
    Ok(PsdReport {
        is_psd: lambda_min >= -threshold,
        lambda_min,
        lambda_max,
        threshold,
    })
}

/// Principal (positive semidefinite) square root. Eigenvalues in
/// `[-tol * max(1, ||M||), 0)` are clamped to zero.
pub fn principal_sqrt(m: &HermitianMatrix, tol: f64) -> Result<HermitianMatrix> {
    check_tol(tol)?;
    let eig = m.eigen();
    let lambda_min = eig.eigenvalues[0];
    let norm = lambda_min
        .abs()
        .max(eig.eigenvalues[eig.eigenvalues.len() - 1].abs());
    let threshold = tol * norm.max(1.0);
    if lambda_min < -threshold {
        return Err(LinalgError::NotPsd {
            lambda_min,
            threshold,
        });
    }
    Ok(HermitianMatrix::wrap(eig.apply(|l| l.max(0.0).sqrt())))
}

/// Moore-Penrose pseudoinverse of a psd matrix; eigenvalues at or below
/// `rank_tol * λ_max` are treated as zero.
pub fn pseudo_inverse_psd(a: &HermitianMatrix, rank_tol: f64) -> HermitianMatrix {
    let eig = a.eigen();
    let lambda_max = eig.eigenvalues[eig.eigenvalues.len() - 1];
    let cut = rank_tol * lambda_max;
    HermitianMatrix::wrap(eig.apply(|l| if l > cut && l > 0.0 { 1.0 / l } else { 0.0 }))
}

/// Range of a psd matrix: eigenvectors with eigenvalue above `rank_tol * λ_max`.
pub fn psd_range(a: &HermitianMatrix, rank_tol: f64) -> SubspaceBasis {
    let eig = a.eigen();
    let lambda_max = eig.eigenvalues[eig.eigenvalues.len() - 1];
    let cut = rank_tol * lambda_max;
    let cols: Vec<usize> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > cut && l > 0.0)
        .map(|(k, _)| k)
        .collect();
    SubspaceBasis::wrap(DMatrix::from_fn(a.n(), cols.len(), |i, j| {
        eig.eigenvectors[(i, cols[j])]
    }))
}

/// Column space of `m`: left singular vectors with `σ > rank_tol * σ_max`.
pub fn range_basis(m: &DMatrix<Complex64>, rank_tol: f64) -> SubspaceBasis {
    let rows = m.nrows();
    if m.ncols() == 0 {
        return SubspaceBasis::zero(rows);
    }
    let svd = svd(m);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return SubspaceBasis::zero(rows);
    }
    let u = svd.u.expect("requested u");
    let cols: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > rank_tol * sigma_max)
        .map(|(k, _)| k)
        .collect();
    SubspaceBasis::wrap(DMatrix::from_fn(rows, cols.len(), |i, j| u[(i, cols[j])]))
}

/// Null space of a square matrix: right singular vectors with
/// `σ <= tol * max(1, σ_max)`.
pub fn null_basis(m: &DMatrix<Complex64>, tol: f64) -> Result<SubspaceBasis> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.ncols();
    let svd = svd(m);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let v_t = svd.v_t.expect("requested v_t");
    let rows: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol * sigma_max.max(1.0))
        .map(|(k, _)| k)
        .collect();
    Ok(SubspaceBasis::wrap(DMatrix::from_fn(n, rows.len(), |i, j| {
        v_t[(rows[j], i)].conj()
    })))
}

/// Minimal-norm solution `V = A^+ D` of `A V = D` for psd `A`.
///
/// Fails with [`LinalgError::RangeViolation`] when `||A V - D||_F` exceeds
/// `tol * max(1, ||D||_F)`, i.e. when the columns of `D` leave `R(A)`.
pub fn douglas_solve(a: &HermitianMatrix, d: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    check_tol(tol)?;
    if d.rows() != a.n() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.n(),
            found: d.rows(),
        });
    }
    let report = is_psd(a, tol)?;
    if !report.is_psd {
        return Err(LinalgError::NotPsd {
            lambda_min: report.lambda_min,
            threshold: report.threshold,
        });
    }
    let pinv = pseudo_inverse_psd(a, RANK_TOL);
    let v = pinv.as_matrix() * d.as_matrix();
    let residual = (a.as_matrix() * &v - d.as_matrix()).norm();
    let allowed = tol * d.frobenius_norm().max(1.0);
    if residual > allowed {
        return Err(LinalgError::RangeViolation { residual, allowed });
    }
    Ok(ComplexMatrix::wrap(v))
}

/// Orthonormal basis of the smallest `A`-invariant subspace containing `F`.
///
/// Grown Arnoldi-style: starting vectors in input order, then `A q` for each
/// newly accepted `q`. Candidates whose residual after projection falls to
/// `tol` times their own norm are rejected. At most `max_iter` rounds of
/// multiplication by `A` are performed.
pub fn krylov_basis(
    a: &HermitianMatrix,
    f: &SubspaceBasis,
    tol: f64,
    max_iter: usize,
) -> Result<SubspaceBasis> {
    check_tol(tol)?;
    if f.ambient_dim() != a.n() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.n(),
            found: f.ambient_dim(),
        });
    }
    krylov_extend(a, &SubspaceBasis::zero(a.n()), f.vectors(), tol, max_iter)
}

/// Extends an `A`-invariant `base` by the Krylov space of `seeds`.
pub(crate) fn krylov_extend(
    a: &HermitianMatrix,
    base: &SubspaceBasis,
    seeds: &DMatrix<Complex64>,
    tol: f64,
    max_iter: usize,
) -> Result<SubspaceBasis> {
    let n = a.n();
    let mut builder = BasisBuilder::from_basis(base);
    let mut frontier = Vec::new();
    for col in seeds.column_iter() {
        if let Some(q) = builder.try_push(&col.into_owned(), tol) {
            frontier.push(q);
        }
    }
    let mut rounds = 0;
    while !frontier.is_empty() && builder.len() < n && rounds < max_iter {
        let mut next = Vec::new();
        for q in &frontier {
            let candidate = a.as_matrix() * q;
            if let Some(new_q) = builder.try_push(&candidate, tol) {
                next.push(new_q);
            }
        }
        frontier = next;
        rounds += 1;
    }
    Ok(builder.finish())
}

/// `∩_k R(V^k)`, computed as `R(V^k)` for the first `k` at which the rank
/// stops decreasing. Singular values at or below `tol * max(1, ||V||)` count
/// as zero.
pub fn stable_range_intersection(v: &ComplexMatrix, tol: f64) -> Result<SubspaceBasis> {
    check_tol(tol)?;
    if !v.is_square() {
        return Err(LinalgError::NotSquare {
            rows: v.rows(),
            cols: v.cols(),
        });
    }
    let n = v.rows();
    let rank_tol = tol * v.spectral_norm().max(1.0);
    let mut current = SubspaceBasis::full(n);
    for _ in 0..=n {
        let image = v.as_matrix() * current.vectors();
        let next = absolute_range(&image, rank_tol);
        if next.dim() == current.dim() || next.is_zero() {
            return Ok(next);
        }
        current = next;
    }
    Ok(current)
}

pub(crate) fn absolute_range(m: &DMatrix<Complex64>, cut: f64) -> SubspaceBasis {
    let rows = m.nrows();
    if m.ncols() == 0 {
        return SubspaceBasis::zero(rows);
    }
    let svd = svd(m);
    let u = svd.u.expect("requested u");
    let cols: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > cut)
        .map(|(k, _)| k)
        .collect();
    SubspaceBasis::wrap(DMatrix::from_fn(rows, cols.len(), |i, j| u[(i, cols[j])]))
}

/// Polar factors `T = Q P` with `P = |T|` and `N(Q) = N(T)`.
#[derive(Clone, Debug)]
pub struct PolarDecomposition {
    pub q: ComplexMatrix,
    pub p: HermitianMatrix,
}

/// Polar decomposition through the SVD `T = W Σ Y^H`: `P = Y Σ Y^H`,
/// `Q = W_r Y_r^H` over the singular values above `rank_tol * σ_max`.
///
/// `P` equals `principal_sqrt(T^H T)` mathematically; the SVD route avoids
/// the loss of half the digits that squaring `T` would cost near zero.
pub fn polar_decompose(t: &ComplexMatrix, rank_tol: f64) -> Result<PolarDecomposition> {
    check_tol(rank_tol)?;
    if !t.is_square() {
        return Err(LinalgError::NotSquare {
            rows: t.rows(),
            cols: t.cols(),
        });
    }
    let n = t.rows();
    let svd = svd(t.as_matrix());
    let w = svd.u.expect("requested u");
    let v_t = svd.v_t.expect("requested v_t");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    let mut q = DMatrix::zeros(n, n);
    let mut p = DMatrix::zeros(n, n);
    for k in 0..sigma.len() {
        let y = v_t.row(k).adjoint();
        p += &y * y.adjoint() * Complex64::new(sigma[k], 0.0);
        if sigma[k] > rank_tol * sigma_max && sigma[k] > 0.0 {
            q += w.column(k) * y.adjoint();
        }
    }
    Ok(PolarDecomposition {
        q: ComplexMatrix::wrap(q),
        p: HermitianMatrix::wrap(symmetrize(&p)),
    })
}

/// `||M||_2` for a general dense matrix.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    spectral_norm(m)
}
