use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde_json::{json, Value};

use crate::linalg::{is_psd, psd_range, HermitianMatrix, PsdReport, RANK_TOL};

use super::wold::krylov_generators;
use super::{OpError, Result};

/// Random atoms are drawn from `(ATOM_FLOOR, 1]`.
pub const ATOM_FLOOR: f64 = 1e-3;
/// Largest section size accepted by [`hankel_multiplicity_experiment`].
pub const MAX_EXPERIMENT_SIZE: usize = 32;
/// Krylov rejection threshold on range restrictions.
const EXPERIMENT_KRYLOV_TOL: f64 = 1e-9;

/// Finitely supported measure `Σ w_i δ_{t_i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpec {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl MeasureSpec {
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(OpError::InvalidMeasure("no atoms".into()));
        }
        if atoms.len() != weights.len() {
            return Err(OpError::InvalidMeasure(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if let Some(t) = atoms.iter().find(|t| !t.is_finite()) {
            return Err(OpError::InvalidMeasure(format!("atom {t} is not finite")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(OpError::InvalidMeasure(format!("weight {w} is not a positive finite number")));
        }
        let mut sorted = atoms.clone();
        sorted.sort_by(f64::total_cmp);
        if let Some(p) = sorted.windows(2).find(|p| p[0] == p[1]) {
            return Err(OpError::InvalidMeasure(format!("atom {} repeated", p[0])));
        }
        Ok(MeasureSpec { atoms, weights })
    }

    pub fn dirac(t: f64) -> Result<Self> {
        MeasureSpec::new(vec![t], vec![1.0])
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn to_json(&self) -> Value {
        json!({"atoms": self.atoms, "weights": self.weights})
    }

    /// Reads `{"atoms": [...], "weights": [...]}`.
    pub fn from_json(v: &Value) -> Result<Self> {
        let field = |name: &str| -> Result<Vec<f64>> {
            v.get(name)
                .and_then(Value::as_array)
                .ok_or_else(|| OpError::InvalidMeasure(format!("missing array field '{name}'")))?
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| OpError::InvalidMeasure(format!("non-numeric entry in '{name}'")))
                })
                .collect()
        };
        MeasureSpec::new(field("atoms")?, field("weights")?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MomentSource {
    Measure(MeasureSpec),
    Raw,
}

/// Moments `c_0, c_1, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSequence {
    pub c: Vec<f64>,
    pub source: MomentSource,
}

impl MomentSequence {
    pub fn raw(c: Vec<f64>) -> Result<Self> {
        if let Some(x) = c.iter().find(|x| !x.is_finite()) {
            return Err(OpError::InvalidParameter {
                name: "moments",
                message: format!("entry {x} is not finite"),
            });
        }
        Ok(MomentSequence {
            c,
            source: MomentSource::Raw,
        })
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }
}

/// `c_k = Σ_i w_i t_i^k` for `k = 0..=order`.
pub fn moments_from_measure(m: &MeasureSpec, order: usize) -> MomentSequence {
    let c = (0..=order)
        .map(|k| {
            m.atoms
                .iter()
                .zip(&m.weights)
                .map(|(&t, &w)| w * t.powi(k as i32))
                .sum()
        })
        .collect();
    MomentSequence {
        c,
        source: MomentSource::Measure(m.clone()),
    }
}

/// `[c_{i+j+offset}]_{0 <= i,j < n}`.
pub fn hankel_section(c: &MomentSequence, n: usize, offset: usize) -> Result<HermitianMatrix> {
    let needed = 2 * n + offset - 1;
    if n == 0 {
        return Err(OpError::InvalidParameter {
            name: "N",
            message: "must be at least 1".into(),
        });
    }
    if c.len() < needed {
        return Err(OpError::InsufficientMoments {
            needed,
            available: c.len(),
        });
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| c.c[i + j + offset]).collect()).collect();
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    Ok(HermitianMatrix::from_real_rows(&refs)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoublePositivityReport {
    pub n: usize,
    pub h_psd: bool,
    pub shifted_psd: bool,
    pub h: PsdReport,
    pub shifted: PsdReport,
}

impl DoublePositivityReport {
    pub fn to_json(&self) -> Value {
        json!({
            "N": self.n,
            "H_psd": self.h_psd,
            "shifted_psd": self.shifted_psd,
            "H_lambda_min": self.h.lambda_min,
            "shifted_lambda_min": self.shifted.lambda_min,
        })
    }
}

/// Psd tests of `H = [c_{i+j}]` and of `H' = [c_{i+j+1}]`, the section of
/// `A S` when `A` is Hankel.
pub fn hankel_double_positivity(c: &MomentSequence, n: usize, tol: f64) -> Result<DoublePositivityReport> {
    let h = is_psd(&hankel_section(c, n, 0)?, tol)?;
    let shifted = is_psd(&hankel_section(c, n, 1)?, tol)?;
    Ok(DoublePositivityReport {
        n,
        h_psd: h.is_psd,
        shifted_psd: shifted.is_psd,
        h,
        shifted,
    })
}

/// `atoms` distinct points uniform in `(ATOM_FLOOR, 1]` with
/// Dirichlet(1, ..., 1) weights.
pub fn random_measure<R: Rng + ?Sized>(atoms: usize, rng: &mut R) -> MeasureSpec {
    assert!(atoms > 0, "a measure needs at least one atom");
    let mut points: Vec<f64> = Vec::with_capacity(atoms);
    while points.len() < atoms {
        let u: f64 = rng.random();
        let t = 1.0 - (1.0 - ATOM_FLOOR) * u;
        if !points.contains(&t) {
            points.push(t);
        }
    }
    let raw: Vec<f64> = (0..atoms).map(|_| rng.sample::<f64, _>(Exp1).max(f64::MIN_POSITIVE)).collect();
    let total: f64 = raw.iter().sum();
    MeasureSpec {
        atoms: points,
        weights: raw.iter().map(|w| w / total).collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub seed: u64,
    pub atoms: usize,
    /// Numerical rank of the section.
    pub rank: usize,
    pub generators: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplicityExperiment {
    pub seed: u64,
    pub n: usize,
    pub trials: Vec<TrialOutcome>,
    pub max_generators: usize,
}

impl MultiplicityExperiment {
    pub fn to_json(&self) -> Value {
        let mut histogram = std::collections::BTreeMap::<usize, usize>::new();
        for t in &self.trials {
            *histogram.entry(t.generators).or_default() += 1;
        }
        json!({
            "seed": self.seed,
            "N": self.n,
            "trials": self.trials.len(),
            "max_generators": self.max_generators,
            "generator_histogram": histogram
                .iter()
                .map(|(g, count)| json!([g, count]))
                .collect::<Vec<_>>(),
        })
    }
}

fn run_trial(seed: u64, n: usize) -> Result<TrialOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = rng.random_range(1..=n);
    let measure = random_measure(atoms, &mut rng);
    let h = hankel_section(&moments_from_measure(&measure, 2 * n - 2), n, 0)?;
    let range = psd_range(&h, RANK_TOL);
    let w = range.vectors();
    let restricted = HermitianMatrix::symmetrized(w.adjoint() * h.as_matrix() * w)?;
    let generators = krylov_generators(&restricted, EXPERIMENT_KRYLOV_TOL)?.count;
    Ok(TrialOutcome {
        seed,
        atoms,
        rank: range.dim(),
        generators,
    })
}

/// Krylov generator counts of range-restricted Hankel sections of random
/// measures on `(0, 1]`. Trial seeds are drawn from the master seed before
/// any trial runs, so results do not depend on scheduling.
pub fn hankel_multiplicity_experiment(trials: usize, n: usize, seed: u64) -> Result<MultiplicityExperiment> {
    if n == 0 || n > MAX_EXPERIMENT_SIZE {
        return Err(OpError::InvalidParameter {
            name: "N",
            message: format!("must lie in 1..={MAX_EXPERIMENT_SIZE}, got {n}"),
        });
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..trials).map(|_| master.next_u64()).collect();
    let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).min(trials.max(1));
    let mut slots: Vec<Option<Result<TrialOutcome>>> = vec![None; trials];
    std::thread::scope(|scope| {
        for (w, chunk) in slots.chunks_mut(trials.div_ceil(workers).max(1)).enumerate() {
            let seeds = &seeds;
            let start = w * trials.div_ceil(workers).max(1);
            scope.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(run_trial(seeds[start + i], n));
                }
            });
        }
    });
    let trials = slots
        .into_iter()
        .map(|s| s.expect("every slot is filled"))
        .collect::<Result<Vec<_>>>()?;
    let max_generators = trials.iter().map(|t| t.generators).max().unwrap_or(0);
    Ok(MultiplicityExperiment {
        seed,
        n,
        trials,
        max_generators,
    })
}
