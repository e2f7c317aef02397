//! Matrix-type square roots of positive definite kernels.
//!
//! On a window the distinguished root is the principal square root of the
//! Gram matrix. At finite size every other candidate collapses onto it, so
//! no alternative roots are enumerated.

mod bounds;
mod corpus;
mod diagnostic;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::kernel::{
    convolve, format, sparsity_components, IndexSet, Kernel, KernelError, Window, ZERO_TOL,
};
use crate::linalg::{is_psd, principal_sqrt, HermitianMatrix, LinalgError};

pub use bounds::{
    schur_domination_check, trace_domination_check, uniqueness_bound, uniqueness_bound_with,
    BoundednessCertificate, BoundVerdict, DominationReport, DEFAULT_CAP, DEFAULT_STALL_TOL,
};
pub use corpus::{corpus, CORPUS_NAMES};
pub use diagnostic::{root_existence_diagnostic, ExistenceReport, ExistenceVerdict};

/// Default relative tolerance for root reconstruction.
pub const ROOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PdmsError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("kernel is not positive definite on the window: lambda_min = {lambda_min:e} < -{threshold:e}")]
    NotPd { lambda_min: f64, threshold: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, PdmsError>;

/// A principal root on a window together with its reconstruction residual.
#[derive(Clone, Debug)]
pub struct RootReport {
    pub root: Kernel,
    /// `||R R - G||_F`.
    pub residual: f64,
    /// `||G||_F`.
    pub gram_norm: f64,
    pub window: Window,
    /// The principal root is Hermitian.
    pub self_adjoint: bool,
}

impl RootReport {
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.gram_norm.max(1.0)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "window": self.window.size(),
            "residual": self.residual,
            "relative_residual": self.relative_residual(),
            "gram_frobenius_norm": self.gram_norm,
            "self_adjoint": self.self_adjoint,
            "root": format::to_json(&self.root),
        })
    }
}

fn window_labels(k: &Kernel, indices: &[usize]) -> Vec<String> {
    match k.index_set() {
        IndexSet::Labels(l) => indices.iter().map(|&i| l[i].clone()).collect(),
        IndexSet::Naturals => indices.iter().map(|&i| (i + 1).to_string()).collect(),
    }
}

fn require_psd(g: &HermitianMatrix, tol: f64) -> Result<()> {
    let r = is_psd(g, tol)?;
    if !r.is_psd {
        return Err(PdmsError::NotPd {
            lambda_min: r.lambda_min,
            threshold: r.threshold,
        });
    }
    Ok(())
}

fn root_of_gram(g: &HermitianMatrix, tol: f64) -> Result<(HermitianMatrix, f64)> {
    require_psd(g, tol)?;
    let r = principal_sqrt(g, tol)?;
    let residual = (r.as_matrix() * r.as_matrix() - g.as_matrix()).norm();
    Ok((r, residual))
}

/// Principal root of `gram(K, w)` as a dense kernel on the window.
pub fn root_finite(k: &Kernel, w: &Window, tol: f64) -> Result<RootReport> {
    let g = k.gram(w)?;
    let (r, residual) = root_of_gram(&g, tol)?;
    let indices: Vec<usize> = (0..w.size()).collect();
    Ok(RootReport {
        root: Kernel::dense(window_labels(k, &indices), r)?,
        residual,
        gram_norm: g.frobenius_norm(),
        window: *w,
        self_adjoint: true,
    })
}

/// Deviation of `R * R` from `K` on a window.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub max_entry_deviation: f64,
    pub frobenius_deviation: f64,
    pub gram_norm: f64,
    /// Bound on the part of `R * R` beyond the window.
    pub tail_bound: f64,
    /// Half of the tolerance goes to linear algebra, half to the tail.
    pub tol: f64,
}

impl VerifyReport {
    pub fn relative_deviation(&self) -> f64 {
        self.frobenius_deviation / self.gram_norm.max(1.0)
    }

    pub fn passes(&self) -> bool {
        self.relative_deviation() <= self.tol / 2.0 && self.tail_bound <= self.tol / 2.0
    }

    pub fn to_json(&self) -> Value {
        json!({
            "max_entry_deviation": self.max_entry_deviation,
            "frobenius_deviation": self.frobenius_deviation,
            "relative_deviation": self.relative_deviation(),
            "tail_bound": self.tail_bound,
            "tol": self.tol,
            "passes": self.passes(),
        })
    }
}

/// Checks `K(x, z) = sum_y R(x, y) R(y, z)` on the window. The tail of the
/// sum must be certified by declared bounds on `R`.
pub fn verify_root(r: &Kernel, k: &Kernel, w: &Window, tol: f64) -> Result<VerifyReport> {
    let conv = if r.len() == k.len() {
        convolve(r, r, w, tol / 2.0)?
    } else {
        // a dense root on the window of a countable kernel: the sum over y
        // runs over the window only
        let rw = Window::new(w.size())?;
        if r.len() != Some(w.size()) {
            return Err(KernelError::IndexSetMismatch {
                left: format!("{:?} points", r.len()),
                right: format!("window of {}", w.size()),
            }
            .into());
        }
        convolve(r, r, &rw, tol / 2.0)?
    };
    let n = w.size();
    let product = conv.kernel.section(n, n)?;
    let target = k.section(n, n)?;
    let diff = &product - &target;
    Ok(VerifyReport {
        max_entry_deviation: diff.iter().map(|z| z.norm()).fold(0.0, f64::max),
        frobenius_deviation: diff.norm(),
        gram_norm: target.norm(),
        tail_bound: conv.max_tail_bound.unwrap_or(f64::INFINITY),
        tol,
    })
}

/// Blockwise roots over the sparsity components of the window.
#[derive(Clone, Debug)]
pub struct DecompositionReport {
    /// Blocks ordered by smallest contained index.
    pub blocks: Vec<(Vec<usize>, RootReport)>,
    /// Largest `|K(x, y)|` between different blocks.
    pub off_block_max: f64,
    /// `||R R - G||_F` for the assembled block-diagonal root.
    pub residual: f64,
    pub window: Window,
}

impl DecompositionReport {
    /// Assembled root on the window, in original index order.
    pub fn assembled_root(&self) -> DMatrix<Complex64> {
        let n = self.window.size();
        let mut m = DMatrix::zeros(n, n);
        for (idx, rep) in &self.blocks {
            let block = rep.root.section(idx.len(), idx.len()).expect("block roots cover their block");
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    m[(i, j)] = block[(a, b)];
                }
            }
        }
        m
    }

    pub fn to_json(&self) -> Value {
        json!({
            "window": self.window.size(),
            "off_block_max": self.off_block_max,
            "residual": self.residual,
            "blocks": self.blocks.iter().map(|(idx, rep)| json!({
                "indices": idx,
                "residual": rep.residual,
                "root": format::to_json(&rep.root),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Splits the window into sparsity components (entries above [`ZERO_TOL`])
/// and roots each block separately.
pub fn blockwise_root(k: &Kernel, w: &Window, tol: f64) -> Result<DecompositionReport> {
    let g = k.gram(w)?;
    require_psd(&g, tol)?;
    let components = sparsity_components(k, w, ZERO_TOL)?;
    let n = w.size();
    let mut block_of = vec![0; n];
    for (b, idx) in components.iter().enumerate() {
        for &i in idx {
            block_of[i] = b;
        }
    }
    let mut off_block_max = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if block_of[i] != block_of[j] {
                off_block_max = off_block_max.max(g.get(i, j).norm());
            }
        }
    }
    let mut blocks = Vec::with_capacity(components.len());
    for idx in components {
        let sub = g.principal_submatrix(&idx)?;
        let (r, residual) = root_of_gram(&sub, tol)?;
        let report = RootReport {
            root: Kernel::dense(window_labels(k, &idx), r)?,
            residual,
            gram_norm: sub.frobenius_norm(),
            window: Window::new(idx.len())?,
            self_adjoint: true,
        };
        blocks.push((idx, report));
    }
    let mut report = DecompositionReport {
        blocks,
        off_block_max,
        residual: 0.0,
        window: *w,
    };
    let r = report.assembled_root();
    report.residual = (&r * &r - g.as_matrix()).norm();
    Ok(report)
}
