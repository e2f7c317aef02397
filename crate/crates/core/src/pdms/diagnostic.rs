use serde_json::{json, Value};

use crate::kernel::{
    c0_row_profile, is_ell2_rows, is_pd, sparsity_components, Builtin, C0Profile, Composite, Ell2Report, Kernel,
    Node, Sequence, Window, ZERO_TOL,
};
use crate::linalg::PsdReport;

use super::{uniqueness_bound, BoundVerdict, BoundednessCertificate, Result};

/// Advisory verdict; finite windows cannot settle the countable case.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExistenceVerdict {
    UniqueRoot,
    NoRootC0,
    RootExistsShift,
    RootExistsRankOne,
    NoRootRankOne,
    Undecided,
}

impl ExistenceVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExistenceVerdict::UniqueRoot => "unique root",
            ExistenceVerdict::NoRootC0 => "no root (fails c0 necessary condition at scale)",
            ExistenceVerdict::RootExistsShift => "root exists (generator f in l2, shift factorization)",
            ExistenceVerdict::RootExistsRankOne => "root exists (rank one, generating vector in l2)",
            ExistenceVerdict::NoRootRankOne => "no root (rank one, generating vector not in l2)",
            ExistenceVerdict::Undecided => "undecided at scale",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExistenceReport {
    pub certificate: BoundednessCertificate,
    /// Psd check on the largest window.
    pub pd: PsdReport,
    pub c0_profiles: Vec<C0Profile>,
    pub ell2: Ell2Report,
    pub components: usize,
    /// For bounded kernels: `(F, max_{y >= F, z < F} |K(y, z)| / sqrt(max(λ_max, 1)))`,
    /// the largest response on the prefix `F` of a unit probe supported beyond it.
    pub e2_decay: Option<Vec<(usize, f64)>>,
    pub verdict: ExistenceVerdict,
    pub notes: Vec<String>,
}

impl ExistenceReport {
    pub fn to_json(&self) -> Value {
        json!({
            "certificate": self.certificate.to_json(),
            "pd_on_largest_window": {
                "is_psd": self.pd.is_psd,
                "lambda_min": self.pd.lambda_min,
                "lambda_max": self.pd.lambda_max,
            },
            "c0_profiles": self.c0_profiles.iter().map(|p| json!({
                "row": p.row,
                "envelope": p.envelope.iter().map(|&(n, s)| json!([n, s])).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "ell2_rows": {
                "certified": self.ell2.ell2,
                "row_sums": self.ell2.row_sums,
                "tail_bounds": self.ell2.tail_bounds,
            },
            "sparsity_components": self.components,
            "e2_decay": self.e2_decay.as_ref().map(|d| d.iter().map(|&(f, v)| json!([f, v])).collect::<Vec<_>>()),
            "verdict": self.verdict.as_str(),
            "notes": self.notes,
        })
    }
}

fn is_flat(p: &C0Profile) -> bool {
    if p.envelope.len() < 3 {
        return false;
    }
    let peak = p.envelope[1..].iter().map(|&(_, s)| s).fold(0.0, f64::max);
    peak > 0.0 && p.last() >= 0.9 * peak
}

/// Rank-one kernels `conj(u(x)) u(y)` have a root exactly when `u` is square summable.
fn rank_one_generator(k: &Kernel) -> Option<Sequence> {
    match k.node() {
        Node::Composite(Composite::Outer(u)) => Some(u.clone()),
        Node::Builtin(Builtin::OuterPower { alpha }) => Some(Sequence::Power { alpha: *alpha }),
        Node::Builtin(Builtin::UniformFamily { n }) => {
            Some(Sequence::Explicit(Sequence::Power { alpha: 0.5 }.values(n.saturating_sub(1))))
        }
        _ => None,
    }
}

fn harmonic_number(n: usize) -> f64 {
    crate::kernel::harmonic::harmonic_number(n as u64)
}

/// Aggregates the boundedness ladder, c0 envelopes of `rows`, ℓ₂ row
/// certification and a probe-decay surrogate into an advisory verdict.
pub fn root_existence_diagnostic(
    k: &Kernel,
    windows: &[usize],
    cap: f64,
    rows: &[usize],
) -> Result<ExistenceReport> {
    let certificate = uniqueness_bound(k, windows, cap)?;
    let largest = Window::new(*windows.last().expect("ladder checked non-empty"))?;
    let n = largest.size();
    let pd = is_pd(k, &largest, crate::linalg::EIG_TOL)?;
    let c0_profiles = rows
        .iter()
        .map(|&x| c0_row_profile(k, x, &largest))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let ell2 = is_ell2_rows(k, &largest)?;
    let components = sparsity_components(k, &largest, ZERO_TOL)?.len();
    let bounded = certificate.verdict == BoundVerdict::BoundedBelowCap;

    let e2_decay = if bounded {
        let section = k.section(n, n)?;
        let scale = certificate.bounds.last().copied().unwrap_or(1.0).max(1.0).sqrt();
        let mut curve = Vec::new();
        let mut f = 1;
        while f < n {
            let worst = (f..n)
                .flat_map(|y| (0..f).map(move |z| (y, z)))
                .map(|(y, z)| section[(y, z)].norm())
                .fold(0.0, f64::max);
            curve.push((f, worst / scale));
            f *= 2;
        }
        Some(curve)
    } else {
        None
    };

    let mut notes = Vec::new();
    if !pd.is_psd {
        notes.push(format!("Gram matrix not psd on the largest window (lambda_min = {:e})", pd.lambda_min));
    }
    if !ell2.ell2 {
        notes.push("rows not certified square summable".into());
    }
    for p in &c0_profiles {
        let decays_slowly = p.envelope.iter().all(|&(m, s)| s >= 1.0 / harmonic_number(m) - 1e-9);
        if decays_slowly && p.last() > 0.0 && !is_flat(p) {
            notes.push(format!(
                "row {} envelope stays above 1/H_N: not in any l_p at this scale",
                p.row + 1
            ));
        }
    }

    let verdict = if c0_profiles.iter().any(is_flat) {
        ExistenceVerdict::NoRootC0
    } else if bounded {
        ExistenceVerdict::UniqueRoot
    } else if let Some(u) = rank_one_generator(k) {
        if u.square_tail(0).is_some() {
            ExistenceVerdict::RootExistsRankOne
        } else {
            ExistenceVerdict::NoRootRankOne
        }
    } else if matches!(k.node(), Node::Builtin(Builtin::Harmonic | Builtin::Shift { .. })) {
        ExistenceVerdict::RootExistsShift
    } else {
        ExistenceVerdict::Undecided
    };
    if !bounded && verdict != ExistenceVerdict::NoRootC0 {
        notes.push("window bounds not settled: uniqueness not certified".into());
    }

    Ok(ExistenceReport {
        certificate,
        pd,
        c0_profiles,
        ell2,
        components,
        e2_decay,
        verdict,
        notes,
    })
}
