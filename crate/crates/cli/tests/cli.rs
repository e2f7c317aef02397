use std::path::PathBuf;
use std::process::Command;

use clap::Parser;
use serde_json::{json, Value};
use tempfile::TempDir;

use pdmskit::kernel::{format, Window};
use pdmskit_cli::{parse_report, render_report, run, RunConfig, EXIT_FAILS, EXIT_INPUT, EXIT_OK, TOL_ENV};

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_args(args: &[&str]) -> (i32, String) {
    let config = RunConfig::try_parse_from(std::iter::once("pdmskit").chain(args.iter().copied())).unwrap();
    match run(&config) {
        Ok(o) => (o.code, o.text),
        Err(e) => (e.code, e.message),
    }
}

const PLUS_ONE: &str = r#"{"type":"dense","labels":["a","b"],"entries":[[[2,0],[1,0]],[[1,0],[2,0]]]}"#;

#[test]
fn report_body_round_trips() {
    let body = json!({"x": 0.1, "nested": {"v": [1.0, -2.5e-300]}});
    let text = render_report("demo", &body, &["note one".into(), "note two".into()]);
    assert!(text.starts_with("# pdmskit demo "));
    assert!(text.ends_with("# note two\n"));
    assert_eq!(parse_report(&text).unwrap(), body);
}

#[test]
fn window_lists_must_be_positive_and_ascending() {
    for bad in ["8,4", "0", "4,4", "x", ""] {
        assert!(RunConfig::try_parse_from(["pdmskit", "check-pd", "--kernel", "k", "--window", bad]).is_err(), "{bad}");
    }
    assert!(RunConfig::try_parse_from(["pdmskit", "check-pd", "--kernel", "k", "--window", "1,4,9"]).is_ok());
}

#[test]
fn check_pd_reports_every_window() {
    let dir = TempDir::new().unwrap();
    let k = file(&dir, "delta.json", &format::to_string(&pdmskit::kernel::Kernel::delta()));
    let (code, text) = run_args(&["check-pd", "--kernel", k.to_str().unwrap(), "--window", "2,5"]);
    assert_eq!(code, EXIT_OK);
    let body = parse_report(&text).unwrap();
    let windows = body["windows"].as_array().unwrap();
    assert_eq!(windows.len(), 2);
    for w in windows {
        assert_eq!(w["lambda_min"], json!(1.0));
        assert_eq!(w["is_pd"], json!(true));
    }
}

#[test]
fn root_in_kernel_format_matches_closed_form() {
    // sqrt([[2,1],[1,2]]) = [[s+t, s-t], [s-t, s+t]] / 2 with s = sqrt 3, t = 1.
    let dir = TempDir::new().unwrap();
    let k = file(&dir, "k.json", PLUS_ONE);
    let (code, text) = run_args(&["--format", "kernel", "root", "--kernel", k.to_str().unwrap(), "--window", "2"]);
    assert_eq!(code, EXIT_OK);
    let r = format::parse(&text).unwrap().gram(&Window::new(2).unwrap()).unwrap();
    let s = 3f64.sqrt();
    let expected = [[(s + 1.0) / 2.0, (s - 1.0) / 2.0], [(s - 1.0) / 2.0, (s + 1.0) / 2.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((r.as_matrix()[(i, j)].re - expected[i][j]).abs() < 1e-14);
        }
    }
}

#[test]
fn analyze_emits_csv_with_one_row_per_window() {
    let dir = TempDir::new().unwrap();
    let k = file(&dir, "k.json", &format::to_string(&pdmskit::kernel::Kernel::harmonic()));
    let (code, text) = run_args(&["--format", "csv", "analyze", "--kernel", k.to_str().unwrap(), "--window", "4,8,16"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines.len(), 4, "{text}");
}

#[test]
fn hankel_moments_of_a_dirac_mass_pass() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "m.json", "[1, 1, 1, 1, 1, 1, 1, 1]");
    let (code, text) = run_args(&["hankel", "--moments", m.to_str().unwrap(), "--window", "3"]);
    assert_eq!(code, EXIT_OK, "{text}");
    let (code, _) = run_args(&["hankel", "--moments", m.to_str().unwrap(), "--window", "5"]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn wz_report_carries_the_isometry() {
    let dir = TempDir::new().unwrap();
    let a = file(&dir, "a.json", r#"{"type":"dense","labels":["1","2"],"entries":[[[1,0],[0,0]],[[0,0],[0,0]]]}"#);
    let z = file(&dir, "z.json", r#"{"ambient_dim":2,"vectors":[[[0,0],[1,0]]]}"#);
    let (code, text) = run_args(&["wz", "--operator", a.to_str().unwrap(), "--subspace", z.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{text}");
    let body: Value = parse_report(&text).unwrap();
    assert_eq!(body["isometry"]["passes"], json!(true));
    assert!(body["isometry"]["V"].is_array());
}

#[test]
fn corpus_rejects_bad_parameters() {
    assert_eq!(run_args(&["corpus", "--name", "outer_power"]).0, EXIT_INPUT);
    assert_eq!(run_args(&["corpus", "--name", "outer_power", "--params", "[1]"]).0, EXIT_INPUT);
    assert_eq!(run_args(&["corpus", "--name", "outer_power", "--params", r#"{"alpha": 1}"#]).0, EXIT_OK);
}

#[test]
fn tolerance_flag_and_environment() {
    let dir = TempDir::new().unwrap();
    let k = file(&dir, "k.json", r#"{"type":"dense","labels":["a","b"],"entries":[[[1,0],[1,0]],[[1,0],[0.9999,0]]]}"#);
    let k = k.to_str().unwrap();
    let bin = env!("CARGO_BIN_EXE_pdmskit");
    let status = |tol_env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(bin);
        c.args(extra).args(["check-pd", "--kernel", k, "--window", "2"]).env_remove(TOL_ENV);
        if let Some(v) = tol_env {
            c.env(TOL_ENV, v);
        }
        c.output().unwrap().status.code().unwrap()
    };
    // λ_min ≈ -5e-5: rejected at the default tolerance, accepted at 1e-3.
    assert_eq!(status(None, &[]), EXIT_FAILS);
    assert_eq!(status(Some("1e-3"), &[]), EXIT_OK);
    assert_eq!(status(Some("1e-3"), &["--tol", "1e-12"]), EXIT_FAILS);
    assert_eq!(status(Some("abc"), &[]), EXIT_INPUT);
    assert_eq!(status(None, &["--tol", "-1"]), EXIT_INPUT);
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.txt");
    let status = Command::new(env!("CARGO_BIN_EXE_pdmskit"))
        .args(["--out", out.to_str().unwrap(), "corpus", "--name", "delta"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    assert!(status.stdout.is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(format::parse(&text).is_ok());
}
