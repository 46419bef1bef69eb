use jwit_core::problem::{Status, WitnessReport};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn jwit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jwit"))
        .args(args)
        .output()
        .expect("jwit runs")
}

fn run_to(cmd: &str, problem: &str, out: &Path, extra: &[&str]) -> i32 {
    let input = data(problem);
    let mut args = vec![cmd, "--in", input.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    jwit(&args).status.code().expect("exit code")
}

fn report(path: &Path) -> WitnessReport {
    WitnessReport::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exit_code_goldens() {
    let dir = tempfile::tempdir().unwrap();
    let table = std::fs::read_to_string(data("exit_codes.txt")).unwrap();
    let mut mismatches = Vec::new();
    for line in table.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let want: i32 = f[2].parse().unwrap();
        let out = dir.path().join("report.json");
        let got = run_to(f[0], f[1], &out, &[]);
        if got != want {
            mismatches.push(format!("{line}: got {got}"));
        }
        if want != 2 {
            // Every run past parsing leaves a report with a matching status.
            let r = report(&out);
            assert_eq!(r.status.code(), want, "{line}");
        }
    }
    assert!(mismatches.is_empty(), "{mismatches:#?}");
}

#[test]
fn witness_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(run_to("witness", "sqrt2.json", &a, &[]), 0);
    assert_eq!(run_to("witness", "sqrt2.json", &b, &["--threads", "1"]), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for problem in ["sqrt2.json", "jprime.json", "torus_sum.json", "product.json"] {
        let out = dir.path().join("r.json");
        assert_eq!(run_to("witness", problem, &out, &[]), 0, "{problem}");
        let text = std::fs::read_to_string(&out).unwrap();
        let r = WitnessReport::from_json(&text).unwrap();
        assert_eq!(r.to_json(), text, "{problem}");
        assert_eq!(r.status, Status::Success);
        let tol = r.witness.as_ref().unwrap().tolerance();
        assert!(r.residuals.iter().all(|&x| x <= tol), "{problem}: {:?}", r.residuals);
    }
}

#[test]
fn seed_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    assert_eq!(run_to("check", "sqrt2.json", &out, &["--seed", "99"]), 0);
    assert_eq!(report(&out).seed, 99);
}

#[test]
fn scan_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sqrt2.json");
    assert_eq!(run_to("witness", "sqrt2.json", &out, &["--scan"]), 0);
    let heights = std::fs::read_to_string(dir.path().join("sqrt2.heights.csv")).unwrap();
    let residuals = std::fs::read_to_string(dir.path().join("sqrt2.residuals.csv")).unwrap();
    let mut h = heights.lines();
    assert_eq!(h.next(), Some("height,best_distance"));
    for row in h {
        let (height, d) = row.split_once(',').unwrap();
        height.parse::<i64>().unwrap();
        assert!(d.parse::<f64>().unwrap() >= 0.0);
    }
    let mut r = residuals.lines();
    assert_eq!(r.next(), Some("step,abs_residual"));
    assert!(r.count() >= 1);
}

#[test]
fn forced_search_skips_predicates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let code = run_to("witness", "diagonal.json", &out, &["--force"]);
    // The diagonal is not free, but a witness may still exist; only the
    // predicate gate is skipped.
    assert_ne!(code, 1);
    assert!(report(&out).verdicts.is_some());
}

fn eval_value(args: &[&str]) -> (f64, f64, f64) {
    let out = jwit(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let f: Vec<&str> = text.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(f[0], "j");
    (f[1].parse().unwrap(), f[2].parse().unwrap(), f[4].parse().unwrap())
}

#[test]
fn eval_known_values() {
    let (re, im, err) = eval_value(&["eval", "--z", "0", "1"]);
    assert!((re - 1728.0).abs() <= err.max(1e-10 * 1728.0) && im.abs() <= 1e-8);
    let (re, im, _) = eval_value(&["eval", "--z", "0.5", "0.866025403784"]);
    assert!(re.abs() < 1e-6 && im.abs() < 1e-6);
    let (re, _, _) = eval_value(&["eval", "--z", "0", "2", "--prec", "1e-12"]);
    assert!((re - 287496.0).abs() <= 1e-10 * 287496.0);
}

#[test]
fn eval_prints_seventeen_digits() {
    let out = jwit(&["eval", "--z", "0.1", "1.3", "--derivs"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    for line in text.lines() {
        for tok in line.split_whitespace().filter(|t| t.parse::<f64>().is_ok()) {
            let mantissa = tok.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.len(), 18, "{tok}");
        }
    }
}

#[test]
fn eval_exit_codes() {
    let code = |args: &[&str]| jwit(args).status.code().unwrap();
    assert_eq!(code(&["eval", "--z", "0", "1", "--prec", "1e-30"]), 3);
    assert_eq!(code(&["eval", "--z", "0", "-1"]), 2);
    assert_eq!(code(&["eval", "--z", "x", "1"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
}
