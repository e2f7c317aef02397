use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{default_labels, Composite, Kernel, KernelError, Node, Result, Sequence, TailPolicy, Window};

fn same_index_set(k: &Kernel, l: &Kernel) -> Result<()> {
    if k.len() != l.len() {
        return Err(KernelError::IndexSetMismatch {
            left: k.index_set().describe(),
            right: l.index_set().describe(),
        });
    }
    Ok(())
}

/// Block-diagonal kernel; labels are prefixed with the part number. Only the
/// last part may be countable.
pub fn direct_sum(parts: Vec<Kernel>) -> Result<Kernel> {
    if parts.is_empty() {
        return Err(KernelError::InvalidParameter {
            name: "parts".into(),
            message: "a direct sum needs at least one part".into(),
        });
    }
    let last = parts.len() - 1;
    if parts[..last].iter().any(|p| p.len().is_none()) {
        return Err(KernelError::CountablePartNotLast);
    }
    let hermitian = parts.iter().all(Kernel::is_hermitian);
    let len = parts.iter().map(Kernel::len).sum::<Option<usize>>();
    Ok(Kernel::from_composite(Composite::DirectSum(parts), hermitian, len))
}

/// `conj(u(x)) u(y) K(x, y)`. Nested rescalings collapse into one.
pub fn rescale(k: &Kernel, u: &Sequence) -> Kernel {
    if let Node::Composite(Composite::Rescale { kernel, by }) = k.node() {
        return rescale(kernel, &by.product(u));
    }
    Kernel::from_composite(
        Composite::Rescale {
            kernel: Box::new(k.clone()),
            by: u.clone(),
        },
        k.is_hermitian(),
        k.len(),
    )
}

/// `c K` for `c >= 0`, expressed as a rescaling by `sqrt(c)`.
pub fn scaled(k: &Kernel, c: f64) -> Result<Kernel> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(KernelError::InvalidParameter {
            name: "c".into(),
            message: format!("scale must be finite and nonnegative, got {c}"),
        });
    }
    Ok(rescale(k, &Sequence::Constant(Complex64::new(c.sqrt(), 0.0))))
}

/// `K(x, y) / sqrt(max(K(x,x), 1) max(K(y,y), 1))`.
pub fn normalize_bd(k: &Kernel) -> Kernel {
    Kernel::from_composite(
        Composite::NormalizeBd(Box::new(k.clone())),
        k.is_hermitian(),
        k.len(),
    )
}

/// Entrywise product.
pub fn hadamard(k: &Kernel, l: &Kernel) -> Result<Kernel> {
    same_index_set(k, l)?;
    Ok(Kernel::from_composite(
        Composite::Hadamard(Box::new(k.clone()), Box::new(l.clone())),
        k.is_hermitian() && l.is_hermitian(),
        k.len(),
    ))
}

/// Entrywise sum.
pub fn sum(parts: Vec<Kernel>) -> Result<Kernel> {
    let Some(first) = parts.first() else {
        return Err(KernelError::InvalidParameter {
            name: "parts".into(),
            message: "a sum needs at least one operand".into(),
        });
    };
    for p in &parts[1..] {
        same_index_set(first, p)?;
    }
    let hermitian = parts.iter().all(Kernel::is_hermitian);
    let len = first.len();
    Ok(Kernel::from_composite(Composite::Sum(parts), hermitian, len))
}

/// Rank-one kernel `conj(u(x)) u(y)` on the naturals.
pub fn outer(u: &Sequence) -> Kernel {
    Kernel::from_composite(Composite::Outer(u.clone()), true, None)
}

/// `K*(x, y) = conj(K(y, x))`; Hermitian kernels are their own adjoint.
pub fn adjoint(k: &Kernel) -> Kernel {
    if k.is_hermitian() {
        return k.clone();
    }
    if let Node::Composite(Composite::Adjoint(inner)) = k.node() {
        return (**inner).clone();
    }
    Kernel::from_composite(Composite::Adjoint(Box::new(k.clone())), false, k.len())
}

/// Windowed matrix-type product with certified truncation error.
#[derive(Clone, Debug)]
pub struct ConvolutionResult {
    /// Dense kernel on the window with entries `sum_{y < N} K(x,y) L(y,z)`.
    pub kernel: Kernel,
    /// Per-entry bound on `|sum_{y >= N} K(x,y) L(y,z)|`; absent when the
    /// window policy ignores tails and some operand declares none.
    pub tail_bounds: Option<DMatrix<f64>>,
    pub max_tail_bound: Option<f64>,
}

/// `(K * L)(x, z) = sum_y K(x, y) L(y, z)` over the window, with the
/// neglected part bounded by Schwarz: `sqrt(β_K(x, N) β_L(z, N))` where the
/// β are the row tails of `K` and the column tails of `L`.
pub fn convolve(k: &Kernel, l: &Kernel, w: &Window, tail_tol: f64) -> Result<ConvolutionResult> {
    same_index_set(k, l)?;
    k.check_window(w)?;
    let n = w.size();
    let product = k.section(n, n)? * l.section(n, n)?;

    let rows: Option<Vec<f64>> = (0..n).map(|x| k.line_tail_sq(x, n, false)).collect();
    let cols: Option<Vec<f64>> = (0..n).map(|z| l.line_tail_sq(z, n, true)).collect();
    let tail_bounds = match (rows, cols) {
        (Some(r), Some(c)) => Some(DMatrix::from_fn(n, n, |x, z| (r[x] * c[z]).sqrt())),
        (r, _) if w.tail_policy == TailPolicy::BoundRequired => {
            return Err(KernelError::MissingTailBound {
                operand: if r.is_none() { 0 } else { 1 },
            })
        }
        _ => None,
    };
    let max_tail_bound = tail_bounds.as_ref().map(|b| b.iter().copied().fold(0.0, f64::max));
    if let Some(bound) = max_tail_bound {
        if w.tail_policy == TailPolicy::BoundRequired && bound > tail_tol {
            return Err(KernelError::TailTooLarge {
                bound,
                allowed: tail_tol,
            });
        }
    }

    let labels = match k.index_set() {
        super::IndexSet::Labels(l) if l.len() == n => l,
        _ => default_labels(n),
    };
    Ok(ConvolutionResult {
        kernel: Kernel::dense_general(labels, product)?,
        tail_bounds,
        max_tail_bound,
    })
}
