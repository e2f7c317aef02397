//! Kernels on finite label sets and on the naturals, their algebra, and
//! window-level predicates.
//!
//! Indices are zero-based positions throughout; position `i` of a countable
//! kernel is the natural number `i + 1`. Every Hermitian kernel is evaluated
//! on the upper triangle only and mirrored, so `K(y, x) == conj(K(x, y))`
//! holds bit-for-bit.

mod algebra;
pub mod format;
pub mod harmonic;
mod predicates;
mod sequence;
mod unionfind;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::{HermitianMatrix, LinalgError};

pub use algebra::{
    adjoint, convolve, direct_sum, hadamard, normalize_bd, outer, rescale, scaled, sum,
    ConvolutionResult,
};
pub use predicates::{
    c0_row_profile, is_ell2_rows, is_pd, loewner_leq, sparsity_components, C0Profile, Ell2Report,
    ZERO_TOL,
};
pub use sequence::Sequence;
pub use unionfind::UnionFind;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("index ({x}, {y}) out of range for a kernel on {len} points")]
    IndexOutOfRange { x: usize, y: usize, len: usize },
    #[error("window of size {size} exceeds the {len} points of the index set")]
    WindowTooLarge { size: usize, len: usize },
    #[error("window size must be at least 1")]
    EmptyWindow,
    #[error("operands live on different index sets ({left} vs {right})")]
    IndexSetMismatch { left: String, right: String },
    #[error("kernel is not Hermitian on the window (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("operand {operand} has no declared tail bound; truncation would be uncertified")]
    MissingTailBound { operand: usize },
    #[error("neglected tail {bound:e} exceeds the allowed {allowed:e}")]
    TailTooLarge { bound: f64, allowed: f64 },
    #[error("only the last part of a direct sum may be countable")]
    CountablePartNotLast,
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: String, message: String },
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("expected {expected} labels, found {found}")]
    LabelCountMismatch { expected: usize, found: usize },
    #[error("unknown {kind} {name:?}")]
    UnknownName { kind: &'static str, name: String },
    #[error("field `{field}`: {message}")]
    Format { field: String, message: String },
}

pub type Result<T> = std::result::Result<T, KernelError>;

/// Points a kernel lives on.
#[derive(Clone, Debug, PartialEq)]
pub enum IndexSet {
    /// Finite set of distinct labels.
    Labels(Vec<String>),
    /// `{1, 2, 3, ...}`, only ever seen through prefix windows.
    Naturals,
}

impl IndexSet {
    pub fn len(&self) -> Option<usize> {
        match self {
            IndexSet::Labels(l) => Some(l.len()),
            IndexSet::Naturals => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            IndexSet::Labels(l) => format!("{} labels", l.len()),
            IndexSet::Naturals => "naturals".into(),
        }
    }
}

/// What to do with the part of a countable sum beyond the window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TailPolicy {
    /// Operands must declare a tail bound; the bound is propagated.
    #[default]
    BoundRequired,
    /// Explicit truncation; missing bounds are reported as absent.
    Ignore,
}

/// The first `size` points of an index set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    size: usize,
    pub tail_policy: TailPolicy,
}

impl Window {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(KernelError::EmptyWindow);
        }
        Ok(Self {
            size,
            tail_policy: TailPolicy::BoundRequired,
        })
    }

    pub fn truncating(size: usize) -> Result<Self> {
        Ok(Self {
            tail_policy: TailPolicy::Ignore,
            ..Self::new(size)?
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// Named generators on the naturals.
#[derive(Clone, Debug, PartialEq)]
pub enum Builtin {
    /// `δ(n, m) = [n = m]`.
    Delta,
    /// `D(n, n) = n^2`, zero off the diagonal.
    DiagN2,
    /// Shift kernel generated by `a_n = 1/sqrt((n+1) H_n H_{n+1})`.
    Harmonic,
    /// `n^{-α} m^{-α}`.
    OuterPower { alpha: f64 },
    /// `(p q)^{-1/2}` for `p, q < n`, zero otherwise.
    UniformFamily { n: usize },
    /// `K(n, m) = <S^{n-1} f, S^{m-1} f>` for a finitely supported `f`.
    Shift { f: Vec<Complex64> },
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Delta => "delta",
            Builtin::DiagN2 => "diag_n2",
            Builtin::Harmonic => "harmonic",
            Builtin::OuterPower { .. } => "outer_power",
            Builtin::UniformFamily { .. } => "uniform_family",
            Builtin::Shift { .. } => "shift",
        }
    }

    /// Human-readable form of the declared row-tail bound.
    pub fn tail_bound_description(&self) -> &'static str {
        match self {
            Builtin::Delta | Builtin::DiagN2 => "exact: diagonal",
            Builtin::UniformFamily { .. } => "exact: finite support",
            Builtin::Shift { .. } => "exact: band of width len(f)",
            Builtin::OuterPower { alpha } if 2.0 * alpha > 1.0 => "p-series: u(x)^2 N^(1-2a)/(2a-1)",
            Builtin::OuterPower { .. } => "none: rows not square summable",
            Builtin::Harmonic => "none: rows not square summable",
        }
    }

    /// `K(i, j)` for positions `i <= j`.
    fn upper(&self, i: usize, j: usize) -> Complex64 {
        let (n, m) = ((i + 1) as f64, (j + 1) as f64);
        let zero = Complex64::default();
        match self {
            Builtin::Delta => {
                if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    zero
                }
            }
            Builtin::DiagN2 => {
                if i == j {
                    Complex64::new(n * n, 0.0)
                } else {
                    zero
                }
            }
            Builtin::Harmonic => {
                let d = j - i;
                Complex64::new(harmonic::lag_table(d + 1).values[d], 0.0)
            }
            Builtin::OuterPower { alpha } => Complex64::new(n.powf(-alpha) * m.powf(-alpha), 0.0),
            Builtin::UniformFamily { n: cut } => {
                if j + 1 < *cut {
                    Complex64::new(n.powf(-0.5) * m.powf(-0.5), 0.0)
                } else {
                    zero
                }
            }
            Builtin::Shift { f } => {
                let d = j - i;
                f.iter()
                    .skip(d)
                    .zip(f.iter())
                    .map(|(a, b)| a * b.conj())
                    .sum()
            }
        }
    }

    /// Upper bound on `sum_{y >= start} |K(x, y)|^2`.
    fn row_tail_sq(&self, x: usize, start: usize) -> Option<f64> {
        let exact = |from: usize, to: usize| -> f64 {
            (from.max(start)..to).map(|y| self.entry_sym(x, y).norm_sqr()).sum()
        };
        match self {
            Builtin::Delta | Builtin::DiagN2 => Some(exact(x, x + 1)),
            Builtin::UniformFamily { n } => Some(if x + 1 < *n { exact(0, n - 1) } else { 0.0 }),
            Builtin::Shift { f } => Some(exact(x.saturating_sub(f.len()), x + f.len())),
            Builtin::OuterPower { alpha } => {
                let u = Sequence::Power { alpha: *alpha };
                u.square_tail(start).map(|t| u.value(x).norm_sqr() * t)
            }
            Builtin::Harmonic => None,
        }
    }

    fn entry_sym(&self, x: usize, y: usize) -> Complex64 {
        if x <= y {
            self.upper(x, y)
        } else {
            self.upper(y, x).conj()
        }
    }
}

/// Finite kernel stored as a full matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseKernel {
    labels: Vec<String>,
    matrix: DMatrix<Complex64>,
    hermitian: bool,
}

impl DenseKernel {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }
}

/// Kernels built from other kernels.
#[derive(Clone, Debug, PartialEq)]
pub enum Composite {
    DirectSum(Vec<Kernel>),
    /// `conj(u(x)) u(y) K(x, y)`.
    Rescale { kernel: Box<Kernel>, by: Sequence },
    /// `K(x,y) / sqrt(max(K(x,x),1) max(K(y,y),1))`.
    NormalizeBd(Box<Kernel>),
    Hadamard(Box<Kernel>, Box<Kernel>),
    Sum(Vec<Kernel>),
    /// `conj(u(x)) u(y)` on the naturals.
    Outer(Sequence),
    /// `conj(K(y, x))`.
    Adjoint(Box<Kernel>),
}

impl Composite {
    pub fn op_name(&self) -> &'static str {
        match self {
            Composite::DirectSum(_) => "direct-sum",
            Composite::Rescale { .. } => "rescale",
            Composite::NormalizeBd(_) => "normalize-bd",
            Composite::Hadamard(..) => "hadamard",
            Composite::Sum(_) => "sum",
            Composite::Outer(_) => "outer",
            Composite::Adjoint(_) => "adjoint",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Dense(DenseKernel),
    Builtin(Builtin),
    Composite(Composite),
}

/// An immutable kernel together with cached structural facts.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    node: Node,
    hermitian: bool,
    /// `None` for kernels on the naturals.
    len: Option<usize>,
}

pub(crate) fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

fn check_labels(labels: &[String], n: usize) -> Result<()> {
    if labels.len() != n {
        return Err(KernelError::LabelCountMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    let mut seen = std::collections::HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(KernelError::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

impl Kernel {
    /// Dense Hermitian kernel on the given labels.
    pub fn dense(labels: Vec<String>, matrix: HermitianMatrix) -> Result<Self> {
        check_labels(&labels, matrix.n())?;
        Ok(Self {
            len: Some(matrix.n()),
            hermitian: true,
            node: Node::Dense(DenseKernel {
                labels,
                matrix: matrix.into_inner(),
                hermitian: true,
            }),
        })
    }

    /// Dense Hermitian kernel labelled `1..=n`.
    pub fn from_hermitian(matrix: HermitianMatrix) -> Self {
        let n = matrix.n();
        Self::dense(default_labels(n), matrix).expect("default labels are distinct")
    }

    /// Dense kernel without the Hermitian constraint, for ℓ₂-kernel algebra.
    pub fn dense_general(labels: Vec<String>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let m = crate::linalg::ComplexMatrix::new(matrix)?;
        if !m.is_square() {
            return Err(LinalgError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            }
            .into());
        }
        check_labels(&labels, m.rows())?;
        let matrix = m.into_inner();
        let hermitian = crate::linalg::hermitian_defect(&matrix) == 0.0;
        Ok(Self {
            len: Some(matrix.nrows()),
            hermitian,
            node: Node::Dense(DenseKernel {
                labels,
                matrix,
                hermitian,
            }),
        })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Ok(Self::from_hermitian(HermitianMatrix::from_real_rows(rows)?))
    }

    /// `δ` on a finite label set.
    pub fn finite_delta(labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(LinalgError::EmptyMatrix.into());
        }
        Self::dense(labels, HermitianMatrix::identity(n))
    }

    pub fn builtin(b: Builtin) -> Result<Self> {
        match &b {
            Builtin::OuterPower { alpha } if !alpha.is_finite() => {
                return Err(KernelError::InvalidParameter {
                    name: "alpha".into(),
                    message: format!("must be finite, got {alpha}"),
                })
            }
            Builtin::Shift { f } if f.is_empty() || f.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) => {
                return Err(KernelError::InvalidParameter {
                    name: "f".into(),
                    message: "must be a non-empty list of finite values".into(),
                })
            }
            _ => {}
        }
        Ok(Self {
            node: Node::Builtin(b),
            hermitian: true,
            len: None,
        })
    }

    pub fn delta() -> Self {
        Self::builtin(Builtin::Delta).expect("valid")
    }

    pub fn diag_n2() -> Self {
        Self::builtin(Builtin::DiagN2).expect("valid")
    }

    pub fn harmonic() -> Self {
        Self::builtin(Builtin::Harmonic).expect("valid")
    }

    pub(crate) fn from_composite(c: Composite, hermitian: bool, len: Option<usize>) -> Self {
        Self {
            node: Node::Composite(c),
            hermitian,
            len,
        }
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Number of points, `None` on the naturals.
    pub fn len(&self) -> Option<usize> {
        self.len
    }

    pub fn index_set(&self) -> IndexSet {
        match self.labels() {
            Some(l) => IndexSet::Labels(l),
            None => IndexSet::Naturals,
        }
    }

    fn labels(&self) -> Option<Vec<String>> {
        let n = self.len?;
        Some(match &self.node {
            Node::Dense(d) => d.labels.clone(),
            Node::Composite(Composite::DirectSum(parts)) => parts
                .iter()
                .enumerate()
                .flat_map(|(s, p)| {
                    p.labels()
                        .unwrap_or_default()
                        .into_iter()
                        .map(move |l| format!("{s}:{l}"))
                })
                .collect(),
            Node::Composite(
                Composite::Rescale { kernel: k, .. } | Composite::NormalizeBd(k) | Composite::Adjoint(k),
            )
            | Node::Composite(Composite::Hadamard(k, _)) => k.labels()?,
            Node::Composite(Composite::Sum(parts)) => parts[0].labels()?,
            _ => default_labels(n),
        })
    }

    fn check_pair(&self, x: usize, y: usize) -> Result<()> {
        if let Some(len) = self.len {
            if x >= len || y >= len {
                return Err(KernelError::IndexOutOfRange { x, y, len });
            }
        }
        Ok(())
    }

    pub(crate) fn check_window(&self, w: &Window) -> Result<()> {
        match self.len {
            Some(len) if w.size > len => Err(KernelError::WindowTooLarge { size: w.size, len }),
            _ => Ok(()),
        }
    }

    /// `K(x, y)` at zero-based positions.
    pub fn evaluate(&self, x: usize, y: usize) -> Result<Complex64> {
        self.check_pair(x, y)?;
        Ok(self.entry(x, y))
    }

    /// Unchecked evaluation; Hermitian kernels are mirrored from the upper
    /// triangle with an exactly real diagonal.
    pub(crate) fn entry(&self, x: usize, y: usize) -> Complex64 {
        if self.hermitian {
            match x.cmp(&y) {
                std::cmp::Ordering::Less => self.raw(x, y),
                std::cmp::Ordering::Equal => Complex64::new(self.raw(x, x).re, 0.0),
                std::cmp::Ordering::Greater => self.raw(y, x).conj(),
            }
        } else {
            self.raw(x, y)
        }
    }

    fn raw(&self, x: usize, y: usize) -> Complex64 {
        let zero = Complex64::default();
        match &self.node {
            Node::Dense(d) => d.matrix[(x, y)],
            Node::Builtin(b) => b.upper(x, y),
            Node::Composite(c) => match c {
                Composite::DirectSum(parts) => {
                    let (px, ox) = locate(parts, x);
                    let (py, oy) = locate(parts, y);
                    if px == py {
                        parts[px].entry(x - ox, y - oy)
                    } else {
                        zero
                    }
                }
                Composite::Rescale { kernel, by } => by.value(x).conj() * by.value(y) * kernel.entry(x, y),
                Composite::NormalizeBd(k) => {
                    let dx = k.entry(x, x).re.max(1.0);
                    let dy = k.entry(y, y).re.max(1.0);
                    k.entry(x, y) / (dx * dy).sqrt()
                }
                Composite::Hadamard(a, b) => a.entry(x, y) * b.entry(x, y),
                Composite::Sum(parts) => parts.iter().map(|p| p.entry(x, y)).sum(),
                Composite::Outer(u) => u.value(x).conj() * u.value(y),
                Composite::Adjoint(k) => k.entry(y, x).conj(),
            },
        }
    }

    /// Leading `rows x cols` block of the kernel matrix.
    pub fn section(&self, rows: usize, cols: usize) -> Result<DMatrix<Complex64>> {
        if let Some(len) = self.len {
            let size = rows.max(cols);
            if size > len {
                return Err(KernelError::WindowTooLarge { size, len });
            }
        }
        if let Node::Builtin(Builtin::Harmonic) = self.node {
            // fill the lag cache once instead of per entry
            harmonic::lag_table(rows.max(cols));
        }
        Ok(DMatrix::from_fn(rows, cols, |i, j| self.entry(i, j)))
    }

    /// Gram matrix on the window. Non-Hermitian kernels are accepted when
    /// their section is Hermitian to within `1e-12` relative.
    pub fn gram(&self, w: &Window) -> Result<HermitianMatrix> {
        self.check_window(w)?;
        let m = self.section(w.size, w.size)?;
        if self.hermitian {
            Ok(HermitianMatrix::symmetrized(m)?)
        } else {
            HermitianMatrix::checked(m, 1e-12).map_err(|e| match e {
                LinalgError::NotHermitian { defect } => KernelError::NotHermitian { defect },
                other => other.into(),
            })
        }
    }

    /// Upper bound on `sum_{y >= start} |K(x, y)|^2` (or over the column
    /// `K(·, x)` when `column`); `None` when no bound is declared.
    pub fn line_tail_sq(&self, x: usize, start: usize, column: bool) -> Option<f64> {
        let column = column && !self.hermitian;
        match &self.node {
            Node::Dense(d) => {
                let n = d.matrix.nrows();
                Some(
                    (start.min(n)..n)
                        .map(|y| if column { d.matrix[(y, x)] } else { d.matrix[(x, y)] }.norm_sqr())
                        .sum(),
                )
            }
            Node::Builtin(b) => b.row_tail_sq(x, start),
            Node::Composite(c) => match c {
                Composite::DirectSum(parts) => {
                    let (p, offset) = locate(parts, x);
                    parts[p].line_tail_sq(x - offset, start.saturating_sub(offset), column)
                }
                Composite::Rescale { kernel, by } => {
                    let t = kernel.line_tail_sq(x, start, column)?;
                    if t == 0.0 {
                        return Some(0.0);
                    }
                    Some(by.value(x).norm_sqr() * by.sup_abs_from(start)?.powi(2) * t)
                }
                Composite::NormalizeBd(k) => {
                    Some(k.line_tail_sq(x, start, column)? / k.entry(x, x).re.max(1.0))
                }
                Composite::Hadamard(a, b) => {
                    // sum |a b|^2 <= (sum |a|^2)(sum |b|^2) for nonnegative terms
                    match (a.line_tail_sq(x, start, column), b.line_tail_sq(x, start, column)) {
                        (Some(s), Some(t)) => Some(s * t),
                        (Some(s), None) | (None, Some(s)) if s == 0.0 => Some(0.0),
                        _ => None,
                    }
                }
                Composite::Sum(parts) => {
                    let mut total = 0.0;
                    for p in parts {
                        total += p.line_tail_sq(x, start, column)?;
                    }
                    Some(parts.len() as f64 * total)
                }
                Composite::Outer(u) => Some(u.value(x).norm_sqr() * u.square_tail(start)?),
                Composite::Adjoint(k) => k.line_tail_sq(x, start, !column),
            },
        }
    }
}

/// Part index and offset of the part containing position `x`. The last part
/// absorbs everything beyond the finite prefix.
fn locate(parts: &[Kernel], x: usize) -> (usize, usize) {
    let mut offset = 0;
    for (p, part) in parts.iter().enumerate() {
        match part.len() {
            Some(len) if x >= offset + len && p + 1 < parts.len() => offset += len,
            _ => return (p, offset),
        }
    }
    unreachable!("direct sums have at least one part")
}
