use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::matrix::{all_finite, HermitianMatrix};
use super::{LinalgError, Result};

/// Orthonormal basis of a subspace of `C^n`, stored as the columns of an
/// `n x k` matrix. `k == 0` represents the zero subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    vectors: DMatrix<Complex64>,
}

impl SubspaceBasis {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            vectors: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            vectors: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Canonical basis vectors `e_i` for the given indices.
    pub fn coordinate(ambient_dim: usize, indices: &[usize]) -> Result<Self> {
        let mut vectors = DMatrix::zeros(ambient_dim, indices.len());
        for (col, &i) in indices.iter().enumerate() {
            if i >= ambient_dim {
                return Err(LinalgError::IndexOutOfRange {
                    index: i,
                    len: ambient_dim,
                });
            }
            vectors[(i, col)] = Complex64::new(1.0, 0.0);
        }
        Self::from_spanning(vectors, 0.0)
    }

    /// Orthonormalizes the columns of `spanning` by Gram-Schmidt in column
    /// order. A column is dropped when its residual after projection is at
    /// most `tol` times its original norm.
    pub fn from_spanning(spanning: DMatrix<Complex64>, tol: f64) -> Result<Self> {
        if !all_finite(&spanning) {
            return Err(LinalgError::NonFinite);
        }
        let mut builder = BasisBuilder::new(spanning.nrows());
        for col in spanning.column_iter() {
            builder.try_push(&col.into_owned(), tol);
        }
        Ok(builder.finish())
    }

    /// Wraps columns that are already orthonormal within `tol`.
    pub fn from_orthonormal(vectors: DMatrix<Complex64>, tol: f64) -> Result<Self> {
        if !all_finite(&vectors) {
            return Err(LinalgError::NonFinite);
        }
        let k = vectors.ncols();
        let defect = (vectors.adjoint() * &vectors - DMatrix::identity(k, k)).norm();
        if defect > tol {
            return Err(LinalgError::NotOrthonormal { defect });
        }
        Ok(Self {
            ambient_dim: vectors.nrows(),
            vectors,
        })
    }

    pub(crate) fn wrap(vectors: DMatrix<Complex64>) -> Self {
        Self {
            ambient_dim: vectors.nrows(),
            vectors,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    /// Orthogonal projector `Q Q^H`, exactly Hermitian.
    pub fn projector(&self) -> HermitianMatrix {
        let p = &self.vectors * self.vectors.adjoint();
        HermitianMatrix::symmetrized(p).unwrap_or_else(|_| HermitianMatrix::zeros(self.ambient_dim))
    }

    /// `(I - P) x` for every column `x` of `m`.
    pub fn project_out(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        if self.is_zero() {
            return m.clone();
        }
        let coeffs = self.vectors.adjoint() * m;
        m - &self.vectors * coeffs
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> Self {
        if self.is_zero() {
            return Self::full(self.ambient_dim);
        }
        if self.dim() == self.ambient_dim {
            return Self::zero(self.ambient_dim);
        }
        let eig = self.projector().eigen();
        let cols: Vec<usize> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l < 0.5)
            .map(|(k, _)| k)
            .collect();
        let vectors = DMatrix::from_fn(self.ambient_dim, cols.len(), |i, j| {
            eig.eigenvectors[(i, cols[j])]
        });
        Self::wrap(vectors)
    }

    /// `||Q^H Q - I||_F`.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.dim();
        (self.vectors.adjoint() * &self.vectors - DMatrix::identity(k, k)).norm()
    }

    /// Sine of the largest principal angle of `self` relative to `other`:
    /// `||(I - P_other) Q_self||_2`. Zero when `self ⊆ other`.
    pub fn excess_over(&self, other: &SubspaceBasis) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        super::matrix::spectral_norm(&other.project_out(&self.vectors))
    }

    /// Symmetric gap `max(excess(a,b), excess(b,a))`; 0 for equal subspaces,
    /// 1 whenever the dimensions differ.
    pub fn gap(&self, other: &SubspaceBasis) -> f64 {
        self.excess_over(other).max(other.excess_over(self))
    }

    /// Sine of the smallest principal angle between `self` and `other`,
    /// `min_{z in self, |z|=1} dist(z, other)`. Returns 1 for a zero subspace.
    pub fn min_angle_sine(&self, other: &SubspaceBasis) -> f64 {
        if self.is_zero() || other.is_zero() {
            return 1.0;
        }
        let residual = other.project_out(&self.vectors);
        super::matrix::svd(&residual)
            .singular_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Incremental Gram-Schmidt with one round of re-orthogonalization.
pub(crate) struct BasisBuilder {
    ambient_dim: usize,
    columns: Vec<DVector<Complex64>>,
}

impl BasisBuilder {
    pub(crate) fn new(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            columns: Vec::new(),
        }
    }

    pub(crate) fn from_basis(basis: &SubspaceBasis) -> Self {
        Self {
            ambient_dim: basis.ambient_dim,
            columns: basis
                .vectors
                .column_iter()
                .map(|c| c.into_owned())
                .collect(),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.columns.len()
    }

    /// Returns the new unit vector when `v` was accepted.
    pub(crate) fn try_push(&mut self, v: &DVector<Complex64>, tol: f64) -> Option<DVector<Complex64>> {
        let original = v.norm();
        if original == 0.0 || self.columns.len() >= self.ambient_dim {
            return None;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &self.columns {
                let c = q.dotc(&r);
                r -= q * c;
            }
        }
        let residual = r.norm();
        if residual <= tol * original || residual == 0.0 {
            return None;
        }
        r.unscale_mut(residual);
        self.columns.push(r.clone());
        Some(r)
    }

    pub(crate) fn finish(self) -> SubspaceBasis {
        let k = self.columns.len();
        let vectors = if k == 0 {
            DMatrix::zeros(self.ambient_dim, 0)
        } else {
            DMatrix::from_columns(&self.columns)
        };
        SubspaceBasis {
            ambient_dim: self.ambient_dim,
            vectors,
        }
    }
}
