use crate::linalg::{is_psd, PsdReport};

use super::{Kernel, KernelError, Result, UnionFind, Window};

/// Default absolute threshold below which an entry counts as zero.
pub const ZERO_TOL: f64 = 1e-12;

/// Psd test of the Gram matrix on the window. For countable kernels this is
/// a necessary condition only.
pub fn is_pd(k: &Kernel, w: &Window, tol: f64) -> Result<PsdReport> {
    Ok(is_psd(&k.gram(w)?, tol)?)
}

/// `K ≪ L` on the window: `gram(L) - gram(K)` is psd.
pub fn loewner_leq(k: &Kernel, l: &Kernel, w: &Window, tol: f64) -> Result<PsdReport> {
    if k.len() != l.len() {
        return Err(KernelError::IndexSetMismatch {
            left: k.index_set().describe(),
            right: l.index_set().describe(),
        });
    }
    let diff = l.gram(w)?.sub(&k.gram(w)?)?;
    Ok(is_psd(&diff, tol)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ell2Report {
    pub ell2: bool,
    /// `sum_{y < N} |K(x, y)|^2` for each row `x` of the window.
    pub row_sums: Vec<f64>,
    /// Declared bound on the remainder beyond the window, per row.
    pub tail_bounds: Vec<Option<f64>>,
}

/// Square-summability of rows (and columns, for non-Hermitian kernels).
/// Finite kernels always pass; countable ones pass when every row in the
/// window carries a finite declared tail bound.
pub fn is_ell2_rows(k: &Kernel, w: &Window) -> Result<Ell2Report> {
    k.check_window(w)?;
    let n = w.size();
    let section = k.section(n, n)?;
    let row_sums = (0..n)
        .map(|x| section.row(x).iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let tail_bounds: Vec<Option<f64>> = (0..n).map(|x| k.line_tail_sq(x, n, false)).collect();
    let columns_ok = k.is_hermitian() || (0..n).all(|x| k.line_tail_sq(x, n, true).is_some());
    let ell2 = k.len().is_some() || (tail_bounds.iter().all(Option::is_some) && columns_ok);
    Ok(Ell2Report {
        ell2,
        row_sums,
        tail_bounds,
    })
}

/// `sup_{y in (N/2, N]} |K(x, y)|` along a dyadic ladder of `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct C0Profile {
    pub row: usize,
    /// `(N, sup)` pairs with `N` one-based, ascending.
    pub envelope: Vec<(usize, f64)>,
}

impl C0Profile {
    /// Envelope value at the largest `N`.
    pub fn last(&self) -> f64 {
        self.envelope.last().map_or(0.0, |&(_, s)| s)
    }

    /// Largest envelope value over the second half of the ladder.
    pub fn late_max(&self) -> f64 {
        let half = self.envelope.len() / 2;
        self.envelope[half..].iter().map(|&(_, s)| s).fold(0.0, f64::max)
    }
}

pub fn c0_row_profile(k: &Kernel, x: usize, w: &Window) -> Result<C0Profile> {
    k.check_window(w)?;
    let size = w.size();
    k.evaluate(x, size - 1)?;
    let row = k.section(x + 1, size)?;
    let mut ladder = Vec::new();
    let mut n = 1;
    while n <= size {
        ladder.push(n);
        n *= 2;
    }
    if ladder.last() != Some(&size) {
        ladder.push(size);
    }
    let envelope = ladder
        .into_iter()
        .map(|n| {
            let sup = (n / 2..n).map(|y| row[(x, y)].norm()).fold(0.0, f64::max);
            (n, sup)
        })
        .collect();
    Ok(C0Profile { row: x, envelope })
}

/// Connected components of `|K(x, y)| > zero_tol` on the window, each sorted,
/// ordered by smallest member.
pub fn sparsity_components(k: &Kernel, w: &Window, zero_tol: f64) -> Result<Vec<Vec<usize>>> {
    k.check_window(w)?;
    let n = w.size();
    let section = k.section(n, n)?;
    let mut uf = UnionFind::new(n);
    for x in 0..n {
        for y in (x + 1)..n {
            if section[(x, y)].norm() > zero_tol || section[(y, x)].norm() > zero_tol {
                uf.union(x, y);
            }
        }
    }
    Ok(uf.classes())
}
