//! Seeded random matrices for experiments and tests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{HermitianMatrix, SubspaceBasis};

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary: QR of a Gaussian matrix with the phases of
/// `diag(R)` divided out.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let qr = gaussian_matrix(n, n, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `U diag(spectrum) U^H` for a Haar unitary `U`.
pub fn psd_with_spectrum<R: Rng + ?Sized>(spectrum: &[f64], rng: &mut R) -> HermitianMatrix {
    let n = spectrum.len();
    let u = random_unitary(n, rng);
    let mut scaled = u.clone();
    for (j, &l) in spectrum.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= l;
        }
    }
    HermitianMatrix::symmetrized(scaled * u.adjoint()).expect("finite square input")
}

/// Random psd matrix `B B^H / n` of full rank (almost surely).
pub fn random_psd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    let b = gaussian_matrix(n, n, rng);
    HermitianMatrix::symmetrized(&b * b.adjoint() / Complex64::new(n as f64, 0.0)).expect("finite square input")
}

/// Uniformly random `k`-dimensional subspace of `C^n`.
pub fn random_subspace<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> SubspaceBasis {
    let u = random_unitary(n, rng);
    SubspaceBasis::from_orthonormal(u.columns(0, k).into_owned(), 1e-10).expect("unitary columns are orthonormal")
}
