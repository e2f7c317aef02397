use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::linalg::{
    absolute_range, douglas_solve, krylov_basis, operator_norm, polar_decompose, psd_range, range_basis,
    ComplexMatrix, HermitianMatrix, SubspaceBasis, RANK_TOL,
};

use super::{OpError, PositiveOperatorSpec, Result};

/// Smallest admissible principal angle (radians) between `Z` and `R(A)`.
pub const MIN_ANGLE: f64 = 1e-8;

/// Rejection threshold for the Krylov space `[Z]_A`.
const KRYLOV_TOL: f64 = 1e-10;

/// Nonnegative residuals of the `W_Z` identities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WzChecks {
    /// Non-Hermitian part or negative spectrum of `A V`, over `max(1, ||A||)`.
    pub av_psd: f64,
    /// `||D² - A (I - P_Z) A||_F / max(1, ||A||²)`.
    pub d_squared_identity: f64,
    /// Gap between `R(D)` and `A(Z^⊥)`.
    pub range_identity: f64,
    /// `||V^H V - P_{R(V^H)}||_2`.
    pub partial_isometry_defect: f64,
    /// `||(V - I) B||_2` for an orthonormal basis `B` of `A([Z]_A^⊥)`.
    pub complement_fixed: f64,
}

impl WzChecks {
    pub fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("av_psd", self.av_psd),
            ("d_squared_identity", self.d_squared_identity),
            ("range_identity", self.range_identity),
            ("partial_isometry_defect", self.partial_isometry_defect),
            ("complement_fixed", self.complement_fixed),
        ]
    }

    pub fn max(&self) -> f64 {
        self.named().iter().map(|&(_, r)| r).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct IsometryReport {
    pub v: ComplexMatrix,
    pub d: HermitianMatrix,
    pub checks: WzChecks,
    pub tol: f64,
    /// Smallest principal angle between `Z` and `R(A)`; `π/2` for `Z = {0}`.
    pub min_angle: f64,
    /// `dim [Z]_A`.
    pub krylov_dim: usize,
    /// `||A^+ D - P_{R(A)} V||_F`: the minimal-norm Douglas solution is the
    /// range-compression of `V`.
    pub douglas_consistency: f64,
}

impl IsometryReport {
    pub fn passes(&self) -> bool {
        self.checks.max() <= self.tol
    }

    pub fn to_json(&self, include_matrices: bool) -> Value {
        let mut checks = serde_json::Map::new();
        for (name, r) in self.checks.named() {
            checks.insert(name.into(), json!(r));
        }
        let mut out = json!({
            "passes": self.passes(),
            "tol": self.tol,
            "checks": checks,
            "min_angle": self.min_angle,
            "krylov_dim": self.krylov_dim,
            "douglas_consistency": self.douglas_consistency,
        });
        if include_matrices {
            out["V"] = crate::kernel::format::matrix_to_json(self.v.as_matrix());
            out["D"] = crate::kernel::format::matrix_to_json(self.d.as_matrix());
        }
        out
    }
}

/// Builds `D = sqrt(A (I - P_Z) A)` and the partial isometry `V` with `A V = D`.
///
/// `V` is the polar factor of `T = (I - P_Z) A`: from `T = V D` and
/// `R(V) ⊆ R(T) ⊆ Z^⊥` one gets `A V = A (I - P_Z) V = T^H V = D`.
pub fn build_wz(spec: &PositiveOperatorSpec, z: &SubspaceBasis, tol: f64) -> Result<IsometryReport> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(OpError::InvalidParameter {
            name: "tol",
            message: format!("must be positive and finite, got {tol}"),
        });
    }
    let a = spec.a();
    let n = a.n();
    if z.ambient_dim() != n {
        return Err(OpError::InvalidParameter {
            name: "Z",
            message: format!("ambient dimension {} differs from operator size {n}", z.ambient_dim()),
        });
    }
    let range_a = psd_range(a, RANK_TOL);
    let min_angle = z.min_angle_sine(&range_a).clamp(0.0, 1.0).asin();
    if !z.is_zero() && min_angle < MIN_ANGLE {
        return Err(OpError::Degenerate {
            angle: min_angle,
            min_angle: MIN_ANGLE,
        });
    }

    let am = a.as_matrix();
    let complement = DMatrix::<Complex64>::identity(n, n) - z.projector().as_matrix();
    let t = ComplexMatrix::new(&complement * am)?;
    let polar = polar_decompose(&t, RANK_TOL)?;
    let (v, d) = (polar.q, polar.p);
    let vm = v.as_matrix();
    let dm = d.as_matrix();

    let norm_a = a.spectral_norm().max(1.0);
    let av = am * vm;
    let skew = (&av - av.adjoint()).norm();
    let av_min = HermitianMatrix::symmetrized(av.clone())?.lambda_min();
    let av_psd = skew.max(-av_min).max(0.0) / norm_a;

    let target = am * &complement * am;
    let d_squared_identity = (dm * dm - target).norm() / (norm_a * norm_a);

    // Ranks are cut at a fixed fraction of ||A|| so that images of
    // near-kernel vectors do not masquerade as range directions.
    let cut = RANK_TOL * a.spectral_norm();
    let z_perp = z.complement();
    let range_identity = absolute_range(dm, cut).gap(&absolute_range(&(am * z_perp.vectors()), cut));

    let v_star_range = range_basis(&vm.adjoint(), RANK_TOL);
    let partial_isometry_defect = operator_norm(&(vm.adjoint() * vm - v_star_range.projector().as_matrix()));

    let krylov = krylov_basis(a, z, KRYLOV_TOL, n)?;
    let fixed_target = absolute_range(&(am * krylov.complement().vectors()), cut);
    let complement_fixed = if fixed_target.is_zero() {
        0.0
    } else {
        let b = fixed_target.vectors();
        operator_norm(&(vm * b - b))
    };

    let douglas = douglas_solve(a, &d.to_complex(), tol.max(RANK_TOL))?;
    let douglas_consistency = (douglas.as_matrix() - range_a.projector().as_matrix() * vm).norm();

    Ok(IsometryReport {
        checks: WzChecks {
            av_psd,
            d_squared_identity,
            range_identity,
            partial_isometry_defect,
            complement_fixed,
        },
        v,
        d,
        tol,
        min_angle,
        krylov_dim: krylov.dim(),
        douglas_consistency,
    })
}
