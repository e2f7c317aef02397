use nalgebra::linalg::SVD;
use nalgebra::{DMatrix, DVector, Dyn};
use num_complex::Complex64;

use super::{LinalgError, Result};

/// Dense complex matrix with finite entries and at least one row and column.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<Complex64>,
}

impl ComplexMatrix {
    pub fn new(inner: DMatrix<Complex64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        if !all_finite(&inner) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { inner })
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(LinalgError::Shape {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Ragged);
        }
        let entries: Vec<Complex64> = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::from_row_slice(r, c, &entries)
    }

    pub fn identity(n: usize) -> Self {
        Self::wrap(DMatrix::identity(n, n))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::wrap(DMatrix::zeros(rows, cols))
    }

    pub(crate) fn wrap(inner: DMatrix<Complex64>) -> Self {
        debug_assert!(all_finite(&inner));
        Self { inner }
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.inner
    }

    pub fn adjoint(&self) -> Self {
        Self::wrap(self.inner.adjoint())
    }

    pub fn mul(&self, other: &ComplexMatrix) -> Result<Self> {
        if self.cols() != other.rows() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols(),
                found: other.rows(),
            });
        }
        Ok(Self::wrap(&self.inner * &other.inner))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.inner)
    }
}

/// Dense Hermitian matrix. Stored entries satisfy `a[i][j] == conj(a[j][i])`
/// bit-for-bit; the diagonal is exactly real.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    inner: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Replaces `m` by `(m + m^H) / 2`.
    pub fn symmetrized(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        if m.nrows() != m.ncols() {
            return Err(LinalgError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if !all_finite(&m) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self {
            inner: symmetrize(&m),
        })
    }

    /// Accepts `m` only when `max|m - m^H| <= tol * max(1, max|m|)`, then symmetrizes.
    pub fn checked(m: DMatrix<Complex64>, tol: f64) -> Result<Self> {
        let h = Self::symmetrized(m.clone())?;
        let defect = hermitian_defect(&m);
        let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        if defect > tol * scale {
            return Err(LinalgError::NotHermitian { defect });
        }
        Ok(h)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let m = ComplexMatrix::from_real_rows(rows)?;
        Self::checked(m.into_inner(), 0.0)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::symmetrized(m)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            inner: DMatrix::zeros(n, n),
        }
    }

    /// Caller guarantees the input is exactly Hermitian and finite.
    pub(crate) fn wrap(inner: DMatrix<Complex64>) -> Self {
        debug_assert!(all_finite(&inner));
        debug_assert_eq!(hermitian_defect(&inner), 0.0);
        Self { inner }
    }

    pub fn n(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.inner
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::wrap(self.inner.clone())
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.inner[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal_values().iter().sum()
    }

    /// Full eigendecomposition, eigenvalues ascending.
    pub fn eigen(&self) -> EigenDecomposition {
        let (conditioned, scale) = self.conditioned();
        let mut eig = nalgebra::linalg::SymmetricEigen::new(conditioned);
        eig.eigenvalues *= scale;
        let n = self.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        EigenDecomposition {
            eigenvalues,
            eigenvectors,
        }
    }

    /// `(M / s, s)` with `s` a power of two near `max |m_ij|` and entries
    /// below `1e-100` of the largest flushed to zero. The eigensolver
    /// returns NaN when squares of entries underflow; the flush perturbs
    /// eigenvalues by far less than rounding does.
    fn conditioned(&self) -> (DMatrix<Complex64>, f64) {
        let peak = self.inner.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return (self.inner.clone(), 1.0);
        }
        let scale = 2f64.powi(peak.log2().round() as i32);
        let floor = 1e-100;
        let m = self.inner.map(|z| {
            let z = z / scale;
            if z.norm() < floor {
                Complex64::new(0.0, 0.0)
            } else {
                z
            }
        });
        (m, scale)
    }

    /// Eigenvalues only, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let (conditioned, scale) = self.conditioned();
        let mut values: Vec<f64> = conditioned.symmetric_eigenvalues().iter().map(|l| l * scale).collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues().last().expect("n >= 1")
    }

    /// `max |λ|`.
    pub fn spectral_norm(&self) -> f64 {
        let ev = self.eigenvalues();
        ev[0].abs().max(ev[ev.len() - 1].abs())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    pub fn add(&self, other: &HermitianMatrix) -> Result<Self> {
        self.same_size(other)?;
        Ok(Self::wrap(&self.inner + &other.inner))
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Result<Self> {
        self.same_size(other)?;
        Ok(Self::wrap(&self.inner - &other.inner))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::wrap(&self.inner * Complex64::new(factor, 0.0))
    }

    /// `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut m = self.inner.clone();
        for i in 0..self.n() {
            m[(i, i)] += Complex64::new(shift, 0.0);
        }
        Self::wrap(m)
    }

    pub fn principal_submatrix(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(LinalgError::EmptyMatrix);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n()) {
            return Err(LinalgError::IndexOutOfRange {
                index: bad,
                len: self.n(),
            });
        }
        let k = indices.len();
        Ok(Self::wrap(DMatrix::from_fn(k, k, |i, j| {
            self.inner[(indices[i], indices[j])]
        })))
    }

    fn same_size(&self, other: &HermitianMatrix) -> Result<()> {
        if self.n() != other.n() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n(),
                found: other.n(),
            });
        }
        Ok(())
    }
}

/// Ascending eigenvalues with a unitary matrix of eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

impl EigenDecomposition {
    /// `sum_k f(λ_k) v_k v_k^H`, symmetrized so the result is exactly Hermitian.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
        let n = self.eigenvectors.nrows();
        let mut scaled = self.eigenvectors.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(lambda);
            scaled.column_mut(k).scale_mut(w);
        }
        let m = scaled * self.eigenvectors.adjoint();
        debug_assert_eq!(m.nrows(), n);
        symmetrize(&m)
    }

    /// `max_k ||M v_k - λ_k v_k||`.
    pub fn max_residual(&self, m: &HermitianMatrix) -> f64 {
        (0..self.eigenvalues.len())
            .map(|k| {
                let v: DVector<Complex64> = self.eigenvectors.column(k).into_owned();
                (m.as_matrix() * &v - v.scale(self.eigenvalues[k])).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `||V^H V - I||_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.eigenvectors.ncols();
        (self.eigenvectors.adjoint() * &self.eigenvectors - DMatrix::identity(n, n)).norm()
    }
}

pub(crate) fn all_finite(m: &DMatrix<Complex64>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn symmetrize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    out
}

pub(crate) fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n.min(m.ncols()) {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    svd(m).singular_values.iter().copied().fold(0.0, f64::max)
}

/// Thin SVD `m = U Σ V^H` in nalgebra layout (`U` is `rows × k`, `V^H` is
/// `k × cols`, `k = min(rows, cols)`).
///
/// Backed by faer: nalgebra's complex SVD returns non-orthonormal or
/// non-reconstructing factors on some well-conditioned inputs.
pub(crate) fn svd(m: &DMatrix<Complex64>) -> SVD<Complex64, Dyn, Dyn> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    let f = faer::Mat::<Complex64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    // Finite input is checked at construction; faer only fails on non-finite values.
    let s = f.thin_svd().expect("SVD of a finite matrix");
    let (u, sigma, v) = (s.U(), s.S().column_vector(), s.V());
    SVD {
        u: Some(DMatrix::from_fn(rows, k, |i, j| u[(i, j)])),
        v_t: Some(DMatrix::from_fn(k, cols, |i, j| v[(j, i)].conj())),
        singular_values: DVector::from_fn(k, |i, _| sigma[i].re),
    }
}
