use std::path::Path;
use std::process::{Command, Output};

use quasiflow::experiments::records_from_csv;
use quasiflow_cli::parse_config;

fn quasiflow(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasiflow"))
        .args(args)
        .arg("--out-dir")
        .arg(out_dir)
        .env("QUASIFLOW_THREADS", "2")
        .output()
        .unwrap()
}

#[test]
fn unknown_flag_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = quasiflow(&["separation", "--no-such-flag"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_config_key_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.toml");
    std::fs::write(&file, "alpha = 1.0\nbogus = 3\n").unwrap();
    let o = quasiflow(&["feasibility", "--config", file.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn missing_config_file_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = quasiflow(&["feasibility", "--config", "/nonexistent/run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn flags_override_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.toml");
    std::fs::write(&file, "command = \"solve\"\nalpha = 1.5\ns = 3.0\ngrid_n = 64\n").unwrap();
    let out = dir.path().display().to_string();
    let base = ["quasiflow", "--out-dir", out.as_str()];

    let cfg = parse_config(base.iter().copied().chain(["--alpha", "0.5"]), Some(&file)).unwrap();
    assert_eq!(cfg.alpha, 0.5);
    assert_eq!(cfg.s, 3.0);
    assert_eq!(cfg.command, quasiflow_cli::Command::Solve);
    assert_eq!(cfg.grid_n, quasiflow_cli::GridSize::Points(64));

    let cfg = parse_config(base.iter().copied(), Some(&file)).unwrap();
    assert_eq!(cfg.alpha, 1.5);
}

#[test]
fn feasibility_marks_only_alpha_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = quasiflow(&["feasibility"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let infeasible: Vec<&str> = text.lines().filter(|l| l.contains("Infeasible")).collect();
    assert_eq!(infeasible.len(), 1);
    assert!(infeasible[0].starts_with("alpha=2 "));
}

#[test]
fn separation_writes_monotone_records_and_stable_svg() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["separation", "--alpha", "1.0", "--s", "2.6", "--n-lo", "3", "--n-hi", "5", "--emit-svg"];
    let o = quasiflow(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("n=")).count(), 3);

    let csv = std::fs::read(dir.path().join("separation__alpha1.0__s2.6.csv")).unwrap();
    let recs = records_from_csv(&csv).unwrap();
    assert_eq!(recs.iter().map(|r| r.n).collect::<Vec<_>>(), vec![3, 4, 5]);
    assert!(recs.windows(2).all(|w| w[1].d0 < w[0].d0));

    let svg_path = dir.path().join("separation__alpha1.0__s2.6.svg");
    let first = std::fs::read(&svg_path).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).matches("<polyline").count(), 3);
    let o = quasiflow(&args, dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&svg_path).unwrap(), first);
}

#[test]
fn separation_jsonl_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = quasiflow(&["separation", "--n-lo", "3", "--n-hi", "4", "--format", "jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let bytes = std::fs::read(dir.path().join("separation__alpha1.0__s2.6.jsonl")).unwrap();
    assert_eq!(quasiflow::experiments::records_from_jsonl(&bytes).unwrap().len(), 2);
}

#[test]
fn fixed_grid_sets_a_floor() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.toml");
    std::fs::write(&file, "n_lo = 3\nn_hi = 4\n").unwrap();
    let o = quasiflow(&["separation", "--config", file.to_str().unwrap(), "--grid-n", "512"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let recs = records_from_csv(&std::fs::read(dir.path().join("separation__alpha1.0__s2.6.csv")).unwrap()).unwrap();
    assert!(recs.iter().all(|r| r.grid_n == 512));
}

#[test]
fn linear_solve_reports_exact_translation() {
    let dir = tempfile::tempdir().unwrap();
    let o = quasiflow(&["solve", "--u0", "cos", "--alpha", "1", "--t", "0.3", "--linear"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let get = |k: &str| -> f64 {
        text.split_whitespace().find_map(|w| w.strip_prefix(k)).unwrap().parse().unwrap()
    };
    assert!(get("max_err_exact=") < 1e-10);
    assert!(get("l2_drift=") <= 1e-8);
}

#[test]
fn ww_symbols_and_paradiff_check_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = quasiflow(&["ww-symbols", "--grid-n", "64", "--seed", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("ww_symbols__seed3.csv").exists());
    let o = quasiflow(&["paradiff-check", "--seed", "5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}
