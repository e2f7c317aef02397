//! Command implementations behind the `pdmskit` binary.
//!
//! Every command returns an [`Outcome`]: the text to emit and an exit code
//! (0 property holds, 1 property fails, 2 input error). Reports are one
//! `#` header line carrying the command and a timestamp, a JSON body, and
//! optional `#` footer lines. Bodies are deterministic.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use pdmskit::kernel::{format, is_pd, Kernel, KernelError, Window};
use pdmskit::linalg::{psd_range, Complex64, ComplexMatrix, HermitianMatrix, SubspaceBasis, EIG_TOL, RANK_TOL};
use pdmskit::opfactory::{
    build_wz, hankel_double_positivity, hankel_multiplicity_experiment, hankel_section, krylov_generators,
    moments_from_measure, wold_analyze, MeasureSpec, MomentSequence, OpError, PositiveOperatorSpec,
};
use pdmskit::pdms::{self, corpus, root_existence_diagnostic, root_finite, verify_root, PdmsError};

/// Environment variable overriding every command's default tolerance.
pub const TOL_ENV: &str = "PDMSKIT_DEFAULT_TOL";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug, Clone)]
#[command(name = "pdmskit", version, about = "Positive definite kernels, their matrix-type roots, and related operator experiments")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Tolerance; defaults per command unless PDMSKIT_DEFAULT_TOL is set.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Psd test of the Gram matrix on each window.
    CheckPd {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, value_parser = parse_windows)]
        window: Windows,
    },
    /// Principal root on the largest window, verified by convolution.
    Root {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, value_parser = parse_windows)]
        window: Windows,
    },
    /// Boundedness ladder, row profiles and an advisory existence verdict.
    Analyze {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, value_parser = parse_windows)]
        window: Windows,
        #[arg(long, default_value_t = pdms::DEFAULT_CAP)]
        cap: f64,
        /// 1-based rows whose decay envelopes are reported.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        rows: Vec<usize>,
    },
    /// Double positivity and Krylov multiplicity of Hankel sections.
    Hankel {
        /// Measure file `{"atoms": [...], "weights": [...]}`.
        #[arg(long, conflicts_with_all = ["moments", "batch"])]
        measure: Option<PathBuf>,
        /// Moment file: a JSON array `[c0, c1, ...]`.
        #[arg(long, conflicts_with = "batch")]
        moments: Option<PathBuf>,
        /// Run this many random trials instead.
        #[arg(long)]
        batch: Option<usize>,
        /// Section size N.
        #[arg(long, value_parser = parse_windows)]
        window: Windows,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The partial isometry attached to a psd operator and a subspace.
    Wz {
        /// Dense kernel file holding the psd operator.
        #[arg(long)]
        operator: PathBuf,
        /// Subspace file `{"ambient_dim": n, "vectors": [[[re, im], ...], ...]}`.
        #[arg(long)]
        subspace: PathBuf,
    },
    /// Emit a named example kernel.
    Corpus {
        #[arg(long)]
        name: String,
        /// Parameters as a JSON object, e.g. `{"alpha": 0.5}`.
        #[arg(long, default_value = "{}")]
        params: String,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Report,
    Kernel,
    Csv,
}

/// Ascending positive window sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Windows(pub Vec<usize>);

impl Windows {
    pub fn largest(&self) -> usize {
        *self.0.last().expect("parser rejects empty lists")
    }
}

fn parse_windows(s: &str) -> Result<Windows, String> {
    let sizes = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad window size {p:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err("window sizes must be positive".into());
    }
    if sizes.windows(2).any(|p| p[1] <= p[0]) {
        return Err("window sizes must be strictly ascending".into());
    }
    Ok(Windows(sizes))
}

/// Text to emit and the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub text: String,
}

/// An error that ends a command before any report is produced.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<PdmsError> for CliError {
    fn from(e: PdmsError) -> Self {
        let code = match e {
            PdmsError::NotPd { .. } => EXIT_FAILS,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<OpError> for CliError {
    fn from(e: OpError) -> Self {
        let code = match e {
            OpError::Degenerate { .. } => EXIT_FAILS,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Report text: header line, pretty JSON body, `#` footer lines.
pub fn render_report(command: &str, body: &Value, footer: &[String]) -> String {
    let stamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let mut out = format!("# pdmskit {command} {stamp}\n");
    out.push_str(&format::write_value(body));
    out.push('\n');
    for line in footer {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// The JSON body of a report: all lines not starting with `#`.
pub fn parse_report(text: &str) -> Result<Value, serde_json::Error> {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    serde_json::from_str(&body)
}

/// Tolerance from `--tol`, else `PDMSKIT_DEFAULT_TOL`, else `default`.
pub fn resolve_tol(flag: Option<f64>, default: f64) -> CliResult<f64> {
    let tol = match flag {
        Some(t) => t,
        None => match std::env::var(TOL_ENV) {
            Ok(v) => v
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError::input(format!("{TOL_ENV}={v:?} is not a number: {e}")))?,
            Err(_) => default,
        },
    };
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(CliError::input(format!("tolerance must be positive and finite, got {tol}")));
    }
    Ok(tol)
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn read_json(path: &Path) -> CliResult<Value> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::input(format!("{}: not valid JSON: {e}", path.display())))
}

pub fn read_kernel(path: &Path) -> CliResult<Kernel> {
    format::parse(&read_text(path)?).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn only_report(config: &RunConfig, allowed: &[OutputFormat]) -> CliResult<OutputFormat> {
    let f = config.format.unwrap_or(allowed[0]);
    if !allowed.contains(&f) {
        return Err(CliError::input(format!("--format {f:?} is not available for this command").to_lowercase()));
    }
    Ok(f)
}

/// Runs one command; the caller routes `text` to stdout or `--out`.
pub fn run(config: &RunConfig) -> CliResult<Outcome> {
    match &config.command {
        Command::CheckPd { kernel, window } => check_pd(config, kernel, window),
        Command::Root { kernel, window } => root(config, kernel, window),
        Command::Analyze {
            kernel,
            window,
            cap,
            rows,
        } => analyze(config, kernel, window, *cap, rows),
        Command::Hankel {
            measure,
            moments,
            batch,
            window,
            seed,
        } => hankel(config, measure.as_deref(), moments.as_deref(), *batch, window, *seed),
        Command::Wz { operator, subspace } => wz(config, operator, subspace),
        Command::Corpus { name, params } => corpus_cmd(config, name, params),
    }
}

fn check_pd(config: &RunConfig, path: &Path, windows: &Windows) -> CliResult<Outcome> {
    only_report(config, &[OutputFormat::Report])?;
    let tol = resolve_tol(config.tol, EIG_TOL)?;
    let k = read_kernel(path)?;
    let mut entries = Vec::new();
    let mut all = true;
    for &n in &windows.0 {
        let r = is_pd(&k, &Window::new(n)?, tol)?;
        all &= r.is_psd;
        entries.push(json!({
            "window": n,
            "is_pd": r.is_psd,
            "lambda_min": r.lambda_min,
            "lambda_max": r.lambda_max,
            "threshold": r.threshold,
        }));
    }
    let body = json!({
        "command": "check-pd",
        "kernel": path.display().to_string(),
        "tol": tol,
        "is_pd": all,
        "windows": entries,
    });
    let footer = vec![format!("pd on all windows: {all}")];
    Ok(Outcome {
        code: if all { EXIT_OK } else { EXIT_FAILS },
        text: render_report("check-pd", &body, &footer),
    })
}

fn root(config: &RunConfig, path: &Path, windows: &Windows) -> CliResult<Outcome> {
    let fmt = only_report(config, &[OutputFormat::Report, OutputFormat::Kernel])?;
    let tol = resolve_tol(config.tol, pdms::ROOT_TOL)?;
    let k = read_kernel(path)?;
    let w = Window::new(windows.largest())?;
    let report = match root_finite(&k, &w, tol) {
        Ok(r) => r,
        Err(PdmsError::NotPd { lambda_min, threshold }) => {
            let body = json!({
                "command": "root",
                "kernel": path.display().to_string(),
                "window": w.size(),
                "tol": tol,
                "is_pd": false,
                "lambda_min": lambda_min,
                "threshold": threshold,
            });
            return Ok(Outcome {
                code: EXIT_FAILS,
                text: render_report("root", &body, &["kernel is not pd on the window".into()]),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let verify = verify_root(&report.root, &k, &w, tol)?;
    let ok = report.relative_residual() <= tol && verify.passes();
    if fmt == OutputFormat::Kernel {
        return Ok(Outcome {
            code: if ok { EXIT_OK } else { EXIT_FAILS },
            text: format::to_string(&report.root),
        });
    }
    let body = json!({
        "command": "root",
        "kernel": path.display().to_string(),
        "tol": tol,
        "passes": ok,
        "root_report": report.to_json(),
        "verify": verify.to_json(),
    });
    let footer = vec![format!(
        "relative residual {:e}, verification deviation {:e}",
        report.relative_residual(),
        verify.relative_deviation()
    )];
    Ok(Outcome {
        code: if ok { EXIT_OK } else { EXIT_FAILS },
        text: render_report("root", &body, &footer),
    })
}

fn analyze(config: &RunConfig, path: &Path, windows: &Windows, cap: f64, rows: &[usize]) -> CliResult<Outcome> {
    let fmt = only_report(config, &[OutputFormat::Report, OutputFormat::Csv])?;
    if !(cap > 0.0) {
        return Err(CliError::input(format!("--cap must be positive, got {cap}")));
    }
    if rows.contains(&0) {
        return Err(CliError::input("--rows are 1-based"));
    }
    let k = read_kernel(path)?;
    let zero_based: Vec<usize> = rows.iter().map(|r| r - 1).collect();
    let report = root_existence_diagnostic(&k, &windows.0, cap, &zero_based)?;
    let code = if report.pd.is_psd { EXIT_OK } else { EXIT_FAILS };
    if fmt == OutputFormat::Csv {
        return Ok(Outcome {
            code,
            text: report.certificate.to_csv(),
        });
    }
    let body = json!({
        "command": "analyze",
        "kernel": path.display().to_string(),
        "diagnostic": report.to_json(),
    });
    let mut footer = vec![format!("verdict: {}", report.verdict.as_str())];
    footer.extend(report.notes.iter().cloned());
    Ok(Outcome {
        code,
        text: render_report("analyze", &body, &footer),
    })
}

fn read_moments(path: &Path) -> CliResult<MomentSequence> {
    let v = read_json(path)?;
    let array = match &v {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("moments")
            .and_then(Value::as_array)
            .ok_or_else(|| CliError::input(format!("{}: expected an array of moments", path.display())))?,
        _ => return Err(CliError::input(format!("{}: expected an array of moments", path.display()))),
    };
    let c = array
        .iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64()
                .ok_or_else(|| CliError::input(format!("{}: moments[{i}] is not a number", path.display())))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(MomentSequence::raw(c)?)
}

fn hankel(
    config: &RunConfig,
    measure: Option<&Path>,
    moments: Option<&Path>,
    batch: Option<usize>,
    windows: &Windows,
    seed: u64,
) -> CliResult<Outcome> {
    only_report(config, &[OutputFormat::Report])?;
    let n = windows.largest();
    if let Some(trials) = batch {
        let e = hankel_multiplicity_experiment(trials, n, seed)?;
        let mut body = e.to_json();
        body["command"] = json!("hankel");
        body["trial_outcomes"] = json!(e
            .trials
            .iter()
            .map(|t| json!({"seed": t.seed, "atoms": t.atoms, "rank": t.rank, "generators": t.generators}))
            .collect::<Vec<_>>());
        let ok = e.max_generators <= 2;
        let footer = vec![format!("max generators {} over {} trials (ceiling 2)", e.max_generators, trials)];
        return Ok(Outcome {
            code: if ok { EXIT_OK } else { EXIT_FAILS },
            text: render_report("hankel", &body, &footer),
        });
    }
    let tol = resolve_tol(config.tol, EIG_TOL)?;
    let (c, source) = match (measure, moments) {
        (Some(p), None) => {
            let m = MeasureSpec::from_json(&read_json(p)?)?;
            let source = m.to_json();
            (moments_from_measure(&m, 2 * n), source)
        }
        (None, Some(p)) => (read_moments(p)?, json!("raw")),
        _ => return Err(CliError::input("give exactly one of --measure, --moments or --batch")),
    };
    let mut sections = Vec::new();
    let mut all = true;
    for size in 1..=n {
        let r = hankel_double_positivity(&c, size, tol)?;
        all &= r.h_psd && r.shifted_psd;
        sections.push(r.to_json());
    }
    let h = hankel_section(&c, n, 0)?;
    let multiplicity = if h.lambda_max() > 0.0 {
        let w = psd_range(&h, RANK_TOL);
        let restricted = HermitianMatrix::symmetrized(w.vectors().adjoint() * h.as_matrix() * w.vectors())
            .map_err(|e| CliError::input(e.to_string()))?;
        json!(krylov_generators(&restricted, 1e-9)?.to_json())
    } else {
        Value::Null
    };
    let body = json!({
        "command": "hankel",
        "N": n,
        "tol": tol,
        "source": source,
        "moments": c.c,
        "double_positive": all,
        "sections": sections,
        "range_restricted_generators": multiplicity,
    });
    let footer = vec![format!("double positivity up to N = {n}: {all}")];
    Ok(Outcome {
        code: if all { EXIT_OK } else { EXIT_FAILS },
        text: render_report("hankel", &body, &footer),
    })
}

fn complex_entry(v: &Value, field: &str) -> CliResult<Complex64> {
    match v {
        Value::Number(x) => Ok(Complex64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(p) if p.len() == 2 => match (p[0].as_f64(), p[1].as_f64()) {
            (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
            _ => Err(CliError::input(format!("{field}: expected [re, im]"))),
        },
        _ => Err(CliError::input(format!("{field}: expected [re, im]"))),
    }
}

pub fn read_subspace(path: &Path) -> CliResult<SubspaceBasis> {
    let v = read_json(path)?;
    let n = v
        .get("ambient_dim")
        .and_then(Value::as_u64)
        .ok_or_else(|| CliError::input(format!("{}: missing field `ambient_dim`", path.display())))?
        as usize;
    let vectors = v
        .get("vectors")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::input(format!("{}: missing field `vectors`", path.display())))?;
    if vectors.is_empty() {
        return Ok(SubspaceBasis::zero(n));
    }
    let k = vectors.len();
    let mut row_major = vec![Complex64::new(0.0, 0.0); n * k];
    for (j, col) in vectors.iter().enumerate() {
        let entries = col
            .as_array()
            .filter(|a| a.len() == n)
            .ok_or_else(|| CliError::input(format!("{}: vectors[{j}] must have {n} entries", path.display())))?;
        for (i, e) in entries.iter().enumerate() {
            row_major[i * k + j] = complex_entry(e, &format!("vectors[{j}][{i}]"))?;
        }
    }
    let spanning = ComplexMatrix::from_row_slice(n, k, &row_major)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    SubspaceBasis::from_spanning(spanning.into_inner(), RANK_TOL)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn wz(config: &RunConfig, operator: &Path, subspace: &Path) -> CliResult<Outcome> {
    only_report(config, &[OutputFormat::Report])?;
    let tol = resolve_tol(config.tol, 1e-8)?;
    let k = read_kernel(operator)?;
    let n = k
        .len()
        .ok_or_else(|| CliError::input(format!("{}: operator must be a finite kernel", operator.display())))?;
    let a = PositiveOperatorSpec::new(k.gram(&Window::new(n)?)?, operator.display().to_string(), EIG_TOL)?;
    let z = read_subspace(subspace)?;
    let report = match build_wz(&a, &z, tol) {
        Ok(r) => r,
        Err(OpError::Degenerate { angle, min_angle }) => {
            let body = json!({
                "command": "wz",
                "operator": operator.display().to_string(),
                "subspace": subspace.display().to_string(),
                "degenerate": true,
                "min_angle": angle,
                "required_angle": min_angle,
            });
            let footer = vec![OpError::Degenerate { angle, min_angle }.to_string()];
            return Ok(Outcome {
                code: EXIT_FAILS,
                text: render_report("wz", &body, &footer),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let wold = wold_analyze(&report.v, tol)?;
    let body = json!({
        "command": "wz",
        "operator": operator.display().to_string(),
        "subspace": subspace.display().to_string(),
        "degenerate": false,
        "isometry": report.to_json(true),
        "wold": wold.to_json(),
    });
    let worst = report
        .checks
        .named()
        .iter()
        .copied()
        .fold(("", 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let footer = vec![format!("largest residual {} = {:e} (tol {:e})", worst.0, worst.1, tol)];
    Ok(Outcome {
        code: if report.passes() { EXIT_OK } else { EXIT_FAILS },
        text: render_report("wz", &body, &footer),
    })
}

fn corpus_cmd(config: &RunConfig, name: &str, params: &str) -> CliResult<Outcome> {
    let fmt = only_report(config, &[OutputFormat::Kernel, OutputFormat::Report])?;
    let params: Map<String, Value> = match serde_json::from_str(params) {
        Ok(Value::Object(m)) => m,
        _ => return Err(CliError::input(format!("--params must be a JSON object, got {params:?}"))),
    };
    let k = corpus(name, &params)?;
    if fmt == OutputFormat::Kernel {
        return Ok(Outcome {
            code: EXIT_OK,
            text: format::to_string(&k),
        });
    }
    let body = json!({"command": "corpus", "name": name, "kernel": format::to_json(&k)});
    Ok(Outcome {
        code: EXIT_OK,
        text: render_report("corpus", &body, &[]),
    })
}
