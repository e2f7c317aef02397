use serde_json::{json, Value};

use crate::kernel::{Kernel, Window};
use crate::linalg::{is_psd, HermitianMatrix, PsdReport};

use super::{PdmsError, Result};

/// Default ceiling on window-level `λ_max`.
pub const DEFAULT_CAP: f64 = 1e6;
/// Relative size of the last increment below which the ladder counts as settled.
pub const DEFAULT_STALL_TOL: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundVerdict {
    BoundedBelowCap,
    ExceededCap,
    Inconclusive,
}

impl BoundVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundVerdict::BoundedBelowCap => "bounded-below-cap",
            BoundVerdict::ExceededCap => "exceeded-cap",
            BoundVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// `λ_max(gram(K, N))` along a window ladder. A diagnostic for `K ≪ cδ`,
/// not a proof when the index set is countable.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundednessCertificate {
    pub window_sizes: Vec<usize>,
    pub bounds: Vec<f64>,
    pub verdict: BoundVerdict,
    pub cap: f64,
    pub stall_tol: f64,
}

impl BoundednessCertificate {
    pub fn to_json(&self) -> Value {
        json!({
            "window_sizes": self.window_sizes,
            "bounds": self.bounds,
            "verdict": self.verdict.as_str(),
            "cap": self.cap,
            "stall_tol": self.stall_tol,
        })
    }

    /// `N,lambda_max` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,lambda_max\n");
        for (n, b) in self.window_sizes.iter().zip(&self.bounds) {
            out.push_str(&format!("{n},{b:.16e}\n"));
        }
        out
    }
}

fn check_ladder(windows: &[usize]) -> Result<()> {
    if windows.is_empty() || windows[0] == 0 {
        return Err(PdmsError::Precondition("window ladder must be non-empty with sizes >= 1".into()));
    }
    if windows.windows(2).any(|p| p[1] <= p[0]) {
        return Err(PdmsError::Precondition("window sizes must be strictly ascending".into()));
    }
    Ok(())
}

/// [`uniqueness_bound_with`] at [`DEFAULT_STALL_TOL`].
pub fn uniqueness_bound(k: &Kernel, windows: &[usize], cap: f64) -> Result<BoundednessCertificate> {
    uniqueness_bound_with(k, windows, cap, DEFAULT_STALL_TOL)
}

/// Verdicts: `exceeded-cap` if any bound passes `cap`; `bounded-below-cap`
/// if the window covers a finite index set or the last relative increment
/// is below `stall_tol`; `inconclusive` otherwise.
pub fn uniqueness_bound_with(
    k: &Kernel,
    windows: &[usize],
    cap: f64,
    stall_tol: f64,
) -> Result<BoundednessCertificate> {
    check_ladder(windows)?;
    let largest = *windows.last().expect("non-empty");
    let g = k.gram(&Window::new(largest)?)?;
    let mut bounds = Vec::with_capacity(windows.len());
    for &n in windows {
        let sub = if n == largest {
            g.clone()
        } else {
            g.principal_submatrix(&(0..n).collect::<Vec<_>>())?
        };
        bounds.push(sub.lambda_max());
    }
    let last = *bounds.last().expect("non-empty");
    let covers_all = k.len() == Some(largest);
    let settled = bounds.len() >= 2 && {
        let prev = bounds[bounds.len() - 2];
        (last - prev).abs() <= stall_tol * last.abs().max(f64::MIN_POSITIVE)
    };
    let verdict = if bounds.iter().any(|&b| b > cap) {
        BoundVerdict::ExceededCap
    } else if covers_all || settled {
        BoundVerdict::BoundedBelowCap
    } else {
        BoundVerdict::Inconclusive
    };
    Ok(BoundednessCertificate {
        window_sizes: windows.to_vec(),
        bounds,
        verdict,
        cap,
        stall_tol,
    })
}

/// Outcome of a domination check.
#[derive(Clone, Debug, PartialEq)]
pub struct DominationReport {
    pub holds: bool,
    /// `λ_min` of the dominating Gram minus `gram(K)` (Schur check) or
    /// `λ_max(gram(K))` (trace check).
    pub value: f64,
    pub psd: Option<PsdReport>,
}

impl DominationReport {
    pub fn to_json(&self) -> Value {
        json!({"holds": self.holds, "value": self.value})
    }
}

/// `|K| <= c` entrywise on the window implies `K ≪ (c π²/6) D` with
/// `D(n, n) = n²`; checks the matrix inequality on the window.
pub fn schur_domination_check(k: &Kernel, c: f64, w: &Window, tol: f64) -> Result<DominationReport> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(PdmsError::Precondition(format!("bound c must be positive, got {c}")));
    }
    let g = k.gram(w)?;
    let n = w.size();
    let worst = g.as_matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if worst > c * (1.0 + 1e-12) {
        return Err(PdmsError::Precondition(format!(
            "entry of modulus {worst} exceeds the declared bound {c}"
        )));
    }
    let scale = c * std::f64::consts::PI.powi(2) / 6.0;
    let d: Vec<f64> = (1..=n).map(|i| scale * (i * i) as f64).collect();
    let diff = HermitianMatrix::diagonal(&d)?.sub(&g)?;
    let psd = is_psd(&diff, tol)?;
    Ok(DominationReport {
        holds: psd.is_psd,
        value: psd.lambda_min,
        psd: Some(psd),
    })
}

/// Trace at most 1 implies `K ≪ δ`; checks `λ_max <= 1 + tol`.
pub fn trace_domination_check(k: &Kernel, w: &Window, tol: f64) -> Result<DominationReport> {
    let g = k.gram(w)?;
    let trace = g.trace();
    if trace > 1.0 + 1e-12 {
        return Err(PdmsError::Precondition(format!("trace {trace} exceeds 1")));
    }
    let lambda_max = g.lambda_max();
    Ok(DominationReport {
        holds: lambda_max <= 1.0 + tol,
        value: lambda_max,
        psd: None,
    })
}
