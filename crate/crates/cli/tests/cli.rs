use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn leray(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leray"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn leray")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const TG: &str = "\
[grid]
dim = 2
n = 32
[model]
kind = leray-alpha
nu = 0.01
alpha = 0.1
theta = 0.25
[stepper]
dt = 0.001
t_end = 0.2
sample_every = 10
[initial]
kind = taylor-green
[output]
dir = out
";

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn taylor_green_run_matches_decay() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tg.cfg"), TG).unwrap();
    let o = leray(dir.path(), &["run", "tg.cfg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/energy.csv")).unwrap();
    let t = column(&csv, "t");
    let e = column(&csv, "e_kin");
    assert_eq!(t.len(), 21);
    for (ti, ei) in t.iter().zip(&e) {
        let exact = e[0] * (-4.0 * 0.01 * ti).exp();
        assert!((ei / exact - 1.0).abs() < 1e-10, "t = {ti}: {ei} vs {exact}");
    }
    let summary = fs::read_to_string(dir.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("budget_residual = "));
    assert!(dir.path().join("out/final.chk").exists());

    let first = fs::read(dir.path().join("out/energy.csv")).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_leray"))
        .args(["run", "tg.cfg"])
        .env("LERAY_THREADS", "1")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(fs::read(dir.path().join("out/energy.csv")).unwrap(), first);
}

#[test]
fn sample_rows_are_counted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TG
        .replace("t_end = 0.2", "t_end = 0.01")
        .replace("sample_every = 10", "sample_every = 1");
    fs::write(dir.path().join("c.cfg"), cfg).unwrap();
    assert!(leray(dir.path(), &["run", "c.cfg"]).status.success());
    let csv = fs::read_to_string(dir.path().join("out/energy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.starts_with("t,e_kin,e_mag,grad_u,grad_b,inject,h_half,div_residual\n"));
}

const SWEEP: &str = "\
[grid]
dim = 3
n = 16
[model]
kind = leray-alpha
nu = 0.01
alpha = 0.1
theta = 0.25
[stepper]
dt = 0.001
t_end = 0.01
[initial]
kind = random
seed = 5
slope = -1
cutoff = 4
[output]
dir = sweep
";

#[test]
fn alpha_sweep_slope_and_failure_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.cfg"), SWEEP).unwrap();
    let o = leray(dir.path(), &["sweep-alpha", "s.cfg", "--alphas", "1e-4,5e-5,2.5e-5"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("sweep/sweep.csv")).unwrap();
    let footer = csv.lines().last().unwrap();
    let slope: f64 = footer.strip_prefix("slope,").unwrap().parse().unwrap();
    assert!((slope - 0.5).abs() < 0.05, "{slope}");
    assert_eq!(csv.lines().count(), 5);

    let o = leray(
        dir.path(),
        &["sweep-alpha", "s.cfg", "--alphas", "1e-4,5e-5,2.5e-5", "--target-slope", "1.0"],
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn order_sweep_without_filter_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.cfg"), SWEEP.replace("alpha = 0.1", "alpha = 0")).unwrap();
    let o = leray(dir.path(), &["sweep-n", "s.cfg", "--orders", "0,1,2,4", "--s-norm", "0.5"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("sweep/sweep.csv")).unwrap();
    assert!(csv.ends_with("ratio,exact\n"), "{csv}");
    assert!(csv.lines().skip(1).take(4).all(|l| l.ends_with(",0.0000000000000000e0")));
}

#[test]
fn multiplier_table_columns() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.cfg"), SWEEP).unwrap();
    let o = leray(dir.path(), &["multiplier-table", "s.cfg", "--output", "m.csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("k_mag,g_multiplier,filter_multiplier,hn_multiplier\n"));
    assert_eq!(fs::read_to_string(dir.path().join("m.csv")).unwrap(), text);
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), TG.replace("theta = 0.25", "theta = 0.1")).unwrap();
    let o = leray(dir.path(), &["run", "bad.cfg"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.theta"));

    fs::write(dir.path().join("dup.cfg"), TG.replace("nu = 0.01", "nu = 0.01\nnu = 0.02")).unwrap();
    let o = leray(dir.path(), &["run", "dup.cfg"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lines 6 and 7"));

    let o = leray(dir.path(), &["run", "missing.cfg"]);
    assert_eq!(o.status.code(), Some(5));

    let ck = TG.replace("kind = taylor-green", "kind = checkpoint\npath = nowhere.chk");
    fs::write(dir.path().join("ck.cfg"), ck).unwrap();
    assert_eq!(leray(dir.path(), &["run", "ck.cfg"]).status.code(), Some(5));
}

#[test]
fn resume_continues_the_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TG.replace("dir = out", "dir = out\ncheckpoint_every = 100");
    fs::write(dir.path().join("a.cfg"), &cfg).unwrap();
    assert!(leray(dir.path(), &["run", "a.cfg"]).status.success());
    let resumed = cfg
        .replace("kind = taylor-green", "kind = checkpoint\npath = out/step_00000100.chk")
        .replace("dir = out", "dir = resumed");
    fs::write(dir.path().join("b.cfg"), resumed).unwrap();
    let o = leray(dir.path(), &["run", "b.cfg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let full = fs::read(dir.path().join("out/final.chk")).unwrap();
    let part = fs::read(dir.path().join("resumed/final.chk")).unwrap();
    assert_eq!(full, part);
    let full_csv = fs::read_to_string(dir.path().join("out/energy.csv")).unwrap();
    let part_csv = fs::read_to_string(dir.path().join("resumed/energy.csv")).unwrap();
    assert!(full_csv.ends_with(part_csv.split_once('\n').unwrap().1));
}

#[test]
fn validate_negative_control_and_repeatability() {
    let dir = tempfile::tempdir().unwrap();
    let ok = leray(dir.path(), &["validate", "--criteria", "3,7"]);
    assert!(ok.status.success(), "{}", stdout(&ok));
    assert_eq!(stdout(&ok).lines().filter(|l| l.starts_with("PASS")).count(), 2);
    let again = leray(dir.path(), &["validate", "--criteria", "3,7"]);
    assert_eq!(stdout(&again), stdout(&ok));

    let bad = leray(dir.path(), &["validate", "--criteria", "3,7", "--no-dealias"]);
    assert_eq!(bad.status.code(), Some(3));
    let text = stdout(&bad);
    assert!(text.lines().any(|l| l.starts_with("FAIL  3")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("PASS  7")), "{text}");
}
