use std::path::Path;
use std::process::{Command, Output};

use condent::codec::StateFile;
use condent::states::{make_named_state, Family};

fn condent(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condent"))
        .args(args)
        .current_dir(dir)
        .env_remove("CONDENT_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).to_string()
}

#[test]
fn make_state_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = condent(&["make-state", "werner", "--p", "0.7", "w.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("w.json")).unwrap();
    let back = StateFile::parse(&text).unwrap().to_mixed().unwrap();
    let want = make_named_state(&Family::Werner { p: 0.7, d: 2 }).unwrap().into_mixed();
    assert!(condent::linalg::max_abs_diff(back.matrix(), want.matrix()) < 1e-12);

    let o = condent(&["make-state", "flower", "--d", "2", "f.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let f = StateFile::parse(&std::fs::read_to_string(dir.path().join("f.json")).unwrap()).unwrap();
    match f {
        StateFile::Pure { vector, .. } => assert_eq!(vector.len(), 32),
        other => panic!("expected a pure state file, got {other:?}"),
    }
}

#[test]
fn bad_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = condent(&["make-state", "werner", "--p", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("p out of range"), "{}", stderr(&o));

    let o = condent(&["make-state", "nosuch", "x.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nosuch"));

    condent(&["make-state", "bell", "bell.json"], dir.path());
    let o = condent(&["compute", "bell.json", "I", "--split", "A:Q"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = condent(&["compute", "bell.json", "c_I", "--restarts", "300"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = condent(&["compute", "bell.json", "c_I", "--iterations", "5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = condent(&["compute", "missing.json", "I"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"labels":["A"],"dims":[2],"matrix":[[[1,0],[0,0]],[[0,0],[0,"x"]]]}"#,
    )
    .unwrap();
    let o = condent(&["compute", "bad.json", "S"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[1][1]"), "{}", stderr(&o));

    let o = condent(&["sweep", "werner", "log_neg", "--param", "p", "--grid", ""], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compute_examples() {
    let dir = tempfile::tempdir().unwrap();
    condent(&["make-state", "bell", "bell.json"], dir.path());
    let o = condent(&["compute", "bell.json", "I", "--split", "A:B"], dir.path());
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "2.000000"));

    let o = condent(&["compute", "bell.json", "c_I", "--split", "A:B"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: f64 = stdout(&o).parse().unwrap();
    assert!((v - 1.0).abs() <= 5e-3);
    assert!(dir.path().join("bell.c_I.certificate.json").exists());

    let o = condent(&["compute", "bell.json", "ppt", "--split", "A:B"], dir.path());
    assert_eq!(stdout(&o), "-0.500000 NPT");

    condent(&["make-state", "flower", "--d", "2", "flower2.json"], dir.path());
    let o = condent(
        &["compute", "flower2.json", "e_sq_q", "--split", "A1,A2:B1,B2", "--trivial-only", "--certificate", "c.json"],
        dir.path(),
    );
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "1.500000"));
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    assert!(cert.get("roles").is_some() && cert.get("kind").is_some());

    condent(&["make-state", "ghz", "--n", "3", "ghz.json"], dir.path());
    let o = condent(&["compute", "ghz.json", "I_n", "--split", "A:B:C"], dir.path());
    assert_eq!(stdout(&o), "3.000000");
    let o = condent(&["compute", "ghz.json", "cmi", "--split", "A:B:C"], dir.path());
    assert_eq!(stdout(&o), "1.000000");
}

#[test]
fn tiny_budget_reports_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    condent(&["make-state", "werner", "--p", "0.8", "w.json"], dir.path());
    let o = condent(&["compute", "w.json", "c_I", "--restarts", "1", "--iterations", "10"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stdout(&o).parse::<f64>().is_ok(), "partial result printed: {}", stdout(&o));
}

#[test]
fn sweeps_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = condent(
        &["sweep", "werner", "log_neg", "--param", "p", "--grid", "0:0.1:1", "--out", "s.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("param,value,converged,restarts_used,seconds"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 11);
    for (p, v) in &rows {
        if *p <= 1.0 / 3.0 {
            assert_eq!(*v, 0.0, "p={p}");
        }
    }
    for w in rows.windows(2).filter(|w| w[0].0 > 1.0 / 3.0) {
        assert!(w[1].1 > w[0].1);
    }
}

#[test]
fn sweep_is_deterministic_apart_from_timings() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep", "werner", "c_I", "--param", "p", "--grid", "0.2,0.6,1", "--restarts", "2", "--iterations", "200",
    ];
    let strip = |o: &Output| -> Vec<String> {
        stdout(o).lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
    };
    let a = condent(&args, dir.path());
    let b = condent(&args, dir.path());
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn tampered_tolerances_fail_verification() {
    let dir = tempfile::tempdir().unwrap();
    let o = condent(
        &["verify", "--profile", "quick", "--seed", "5", "--tolerance-scale", "-1", "--out", "r.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let names: Vec<&str> = reports.as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert_eq!(names.len(), 9);
    assert!(stderr(&o).contains("FAIL"));
}

#[test]
fn werner_c_i_sweep_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let o = condent(&["sweep", "werner", "c_I", "--param", "p", "--grid", "0:0.125:1"], dir.path());
    assert!(matches!(o.status.code(), Some(0) | Some(3)), "{}", stderr(&o));
    let values: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 9);
    for w in values.windows(2) {
        assert!(w[1] >= w[0] - 0.01, "{values:?}");
    }
}
