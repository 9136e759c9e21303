use std::path::Path;
use std::process::Command;

use ptfourwell::config::{parse_config, ScenarioKind};
use ptfourwell::par::Execution;
use ptfourwell::scenario::{run_scenario, run_scenario_with, Status};
use ptfourwell::series::{parse_table, HEADER};

const STATIONARY: &str = "scenario = stationary\ngamma = 0.5\nj12 = 1.0\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ptfourwell"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn exit_code(config: &Path, extra: &[&str]) -> i32 {
    bin()
        .arg("run")
        .arg("--config")
        .arg(config)
        .args(extra)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn config_examples() {
    let c = parse_config(STATIONARY).unwrap();
    assert_eq!(c.scenario, ScenarioKind::Stationary);
    assert_eq!((c.gamma, c.j12, c.dt, c.t_end), (0.5, 1.0, 0.01, 10.0));
    let c = parse_config("scenario = adiabatic\ngamma_f = 0.5\nt_f = 70").unwrap();
    assert_eq!((c.gamma, c.t_f, c.t_end), (0.5, 70.0, 80.0));
    assert!(parse_config("scenario = stationary\ngamma = 0.5\nt_f = 3").is_err());
    assert!(parse_config("scenario = adiabatic\ngamma_f = 1.5\nt_f = 70").is_err());
}

#[test]
fn csv_round_trip_and_stationary_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(&parse_config(STATIONARY).unwrap(), Some(dir.path())).unwrap();
    let text = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert!(!text.contains('\r'));
    let table = parse_table(&text).unwrap();
    assert_eq!(table.header, HEADER);
    assert_eq!(table.rows.len(), out.record.samples.len());
    for (row, s) in table.rows.iter().zip(&out.record.samples) {
        let exact = [s.t, s.obs.n[0], s.obs.n[1], s.obs.j12, s.params.e0, s.residuals.r1];
        let read = [row[0], row[1], row[2], row[6], row[8], row[13]];
        for (a, b) in exact.iter().zip(read) {
            // fifteen significant digits
            assert!((a - b).abs() <= 5e-15 * a.abs(), "{a} vs {b}");
        }
    }
    let n1 = table.column("n1").unwrap();
    assert!(n1.iter().all(|v| (v - 0.5).abs() <= 1e-6));
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("status = Success"));
}

#[test]
fn output_is_deterministic() {
    let text = "scenario = oscillatory\ngamma = 0.5\nj12 = 1.0\nt_end = 5\nperturbation = 1e-3\nseed = 9\n";
    let cfg = parse_config(text).unwrap();
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    run_scenario_with(&cfg, Some(dirs[0].path()), Execution::Parallel).unwrap();
    run_scenario_with(&cfg, Some(dirs[1].path()), Execution::Parallel).unwrap();
    run_scenario_with(&cfg, Some(dirs[2].path()), Execution::Sequential).unwrap();
    for name in ["series.csv", "series_perturbed.csv", "report.txt"] {
        let read = |d: &tempfile::TempDir| std::fs::read(d.path().join(name)).unwrap();
        assert_eq!(read(&dirs[0]), read(&dirs[1]), "{name}");
        assert_eq!(read(&dirs[0]), read(&dirs[2]), "{name}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.cfg", STATIONARY);
    assert_eq!(exit_code(&ok, &["--out", dir.path().join("ok").to_str().unwrap()]), 0);

    let strict = write(dir.path(), "strict.cfg", &format!("{STATIONARY}norm_tol = 1e-30\n"));
    assert_eq!(exit_code(&strict, &[]), Status::ToleranceFailure.exit_code());

    let bad = write(dir.path(), "bad.cfg", "dt = -1\n");
    assert_eq!(exit_code(&bad, &[]), 2);
    assert_eq!(exit_code(&dir.path().join("missing.cfg"), &[]), 2);

    // reservoirs far too small to carry the gain current
    let empty = write(dir.path(), "empty.cfg", &format!("{STATIONARY}n0 = 0.001\nn3 = 0.001\n"));
    assert_eq!(exit_code(&empty, &[]), 3);
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", &format!("{STATIONARY}t_end = 2\n"));
    let out = dir.path().join("sweep");
    let o = bin()
        .args(["run", "--sweep", "gamma=0.1:0.3:3", "--out"])
        .arg(&out)
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("gamma = 0.2:"), "{stdout}");
    for i in 0..3 {
        let csv = std::fs::read_to_string(out.join(format!("gamma_{i:03}/series.csv"))).unwrap();
        let gamma = parse_table(&csv).unwrap().column("Gamma").unwrap()[0];
        assert!((gamma - (0.1 + 0.1 * i as f64)).abs() < 1e-12);
    }
    assert_eq!(bin().args(["run", "--sweep", "gamma=1:2", "--config"]).arg(&cfg).output().unwrap().status.code(), Some(2));
}

#[test]
fn physical_run_writes_trap_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.cfg", "scenario = physical\ngamma_f = 0.5\nt_f = 70\n");
    assert_eq!(exit_code(&cfg, &["--out", dir.path().to_str().unwrap()]), 0);
    let table = parse_table(&std::fs::read_to_string(dir.path().join("series.csv")).unwrap()).unwrap();
    let v0 = table.column("V0").unwrap();
    let v3 = table.column("V3").unwrap();
    // gain well 1 draws from well 0, which rises; well 3 deepens to absorb
    assert!((v0[0] + 122.0).abs() < 1e-6 && (v3[0] + 122.0).abs() < 1e-6);
    assert!(v0.last().unwrap() > &v0[0] && v3.last().unwrap() < &v3[0]);
    for k in ["delta0", "delta3"] {
        assert!(table.column(k).unwrap().iter().all(|d| d.abs() <= 0.1));
    }
    assert!(dir.path().join("trap.csv").exists());
}

#[test]
fn check_passes() {
    let o = bin().arg("check").output().unwrap();
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 12);
}
