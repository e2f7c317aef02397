use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::linalg::{
    krylov_extend, null_basis, stable_range_intersection, ComplexMatrix, HermitianMatrix, SubspaceBasis,
};
use crate::sampling::gaussian_vector;

use super::{OpError, Result};

/// Seed of the probe stream used by [`krylov_generators`].
pub const PROBE_SEED: u64 = 0x5eed_0f_c7c1e;

/// Wold-type structure of a contraction.
#[derive(Clone, Debug)]
pub struct WoldReport {
    /// `∩_k R(V^k)`.
    pub unitary_part: SubspaceBasis,
    /// Codimension of the unitary part.
    pub pure_part_dim: usize,
    /// `N(V - I)`.
    pub fixed_space: SubspaceBasis,
    pub norm: f64,
}

impl WoldReport {
    /// Sine of the largest angle of `fixed_space` outside `unitary_part`;
    /// zero for a contraction, since fixed vectors lie in every `R(V^k)`.
    pub fn fixed_outside_unitary(&self) -> f64 {
        self.fixed_space.excess_over(&self.unitary_part)
    }

    /// How far `subspace` sticks out of the fixed space.
    pub fn fixed_containment_defect(&self, subspace: &SubspaceBasis) -> f64 {
        subspace.excess_over(&self.fixed_space)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "norm": self.norm,
            "unitary_part_dim": self.unitary_part.dim(),
            "pure_part_dim": self.pure_part_dim,
            "fixed_space_dim": self.fixed_space.dim(),
            "fixed_outside_unitary": self.fixed_outside_unitary(),
        })
    }
}

/// Splits `C^n` for a contraction `V` into the stable range and its
/// complement, and computes the fixed space.
pub fn wold_analyze(v: &ComplexMatrix, tol: f64) -> Result<WoldReport> {
    if !v.is_square() {
        return Err(OpError::InvalidParameter {
            name: "V",
            message: format!("expected a square matrix, got {}x{}", v.rows(), v.cols()),
        });
    }
    let norm = v.spectral_norm();
    if norm > 1.0 + tol {
        return Err(OpError::NormViolation { norm });
    }
    let n = v.rows();
    let unitary_part = stable_range_intersection(v, tol)?;
    let shifted = v.as_matrix() - DMatrix::<Complex64>::identity(n, n);
    let fixed_space = null_basis(&shifted, tol)?;
    Ok(WoldReport {
        pure_part_dim: n - unitary_part.dim(),
        unitary_part,
        fixed_space,
        norm,
    })
}

#[derive(Clone, Debug)]
pub struct KrylovGenerators {
    pub count: usize,
    /// Unit probes, each orthogonal to the Krylov space of its predecessors.
    pub generators: Vec<DVector<Complex64>>,
    /// Dimension of the Krylov space after each generator.
    pub dims: Vec<usize>,
    /// Largest eigenvalue multiplicity, clustering eigenvalues closer than
    /// `tol * max(1, ||A||)`; a lower bound for `count`.
    pub eigen_multiplicity: usize,
}

impl KrylovGenerators {
    pub fn to_json(&self) -> Value {
        json!({
            "count": self.count,
            "dims": self.dims,
            "eigen_multiplicity": self.eigen_multiplicity,
        })
    }
}

/// Greedy generator count: each probe is a seeded Gaussian vector projected
/// off the current Krylov space, which is then extended by the probe's
/// Krylov space until it fills `C^n`. An upper estimate of the minimal
/// number of cyclic generators, exact almost surely in exact arithmetic.
pub fn krylov_generators(a: &HermitianMatrix, tol: f64) -> Result<KrylovGenerators> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(OpError::InvalidParameter {
            name: "tol",
            message: format!("must be positive and finite, got {tol}"),
        });
    }
    let n = a.n();
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mut basis = SubspaceBasis::zero(n);
    let mut generators = Vec::new();
    let mut dims = Vec::new();
    // Each accepted probe adds at least one dimension.
    while basis.dim() < n && generators.len() < n {
        let raw = DMatrix::from_column_slice(n, 1, gaussian_vector(n, &mut rng).as_slice());
        let once = basis.project_out(&raw);
        let probe = basis.project_out(&once);
        let norm = probe.norm();
        if norm == 0.0 {
            continue;
        }
        let probe = probe / Complex64::new(norm, 0.0);
        let grown = krylov_extend(a, &basis, &probe, tol, n)?;
        if grown.dim() == basis.dim() {
            continue;
        }
        basis = grown;
        generators.push(probe.column(0).into_owned());
        dims.push(basis.dim());
    }
    Ok(KrylovGenerators {
        count: generators.len(),
        generators,
        dims,
        eigen_multiplicity: max_eigen_multiplicity(a, tol),
    })
}

fn max_eigen_multiplicity(a: &HermitianMatrix, tol: f64) -> usize {
    let eig = a.eigenvalues();
    if eig.is_empty() {
        return 0;
    }
    let gap = tol * a.spectral_norm().max(1.0);
    let mut best = 1;
    let mut run = 1;
    for w in eig.windows(2) {
        if (w[1] - w[0]).abs() <= gap {
            run += 1;
            best = best.max(run);
        } else {
            run = 1;
        }
    }
    best
}
