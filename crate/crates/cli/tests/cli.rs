use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dressed-thermo"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("DRESSED_THERMO_WORKERS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) {
    let out = run(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

/// Header plus numeric rows; empty cells become `None`.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|c| if c.is_empty() { None } else { Some(c.parse().unwrap()) }).collect()).collect();
    (header, rows)
}

fn manifest(dir: &Path, command: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{command}.manifest.json"))).unwrap()).unwrap()
}

const SMALL_SWEEP: [&str; 6] = [
    "--set",
    "sweep.chirp_a_ps2={start=-10,stop=10,points=5}",
    "--set",
    "sweep.theta0_over_pi={start=0,stop=6,points=4}",
    "--set",
    "sweep.detunings_ps_inv=[0, 2.5]",
];

#[test]
fn unchirped_resonant_preview_has_lambda_equal_omega_and_is_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["pulse-preview", "--set", "pulse.chirp_a_ps2=0", "--set", "pulse.delta_ps_inv=0", "--set", "solver.samples=401"], dir.path());
    let (header, rows) = read_csv(&dir.path().join("pulse_preview.csv"));
    assert_eq!(&header[..4], ["t_ps", "omega_ps_inv", "delta_ps_inv", "lambda_ps_inv"]);
    for r in &rows {
        assert!((r[3].unwrap() - r[1].unwrap()).abs() < 1e-12);
        assert_eq!(r[4].unwrap(), 0.5 * r[3].unwrap());
        assert_eq!(r[5].unwrap(), -0.5 * r[3].unwrap());
    }
    let n = rows.len();
    for i in 0..n / 2 {
        assert!((rows[i][0].unwrap() + rows[n - 1 - i][0].unwrap()).abs() < 1e-9);
        assert!((rows[i][3].unwrap() - rows[n - 1 - i][3].unwrap()).abs() < 1e-9);
    }
}

fn lambda_minima(dir: &Path) -> Vec<(f64, f64)> {
    let (_, rows) = read_csv(&dir.join("pulse_preview.csv"));
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].unwrap(), r[3].unwrap())).collect();
    (1..pts.len() - 1).filter(|&i| pts[i].1 < pts[i - 1].1 && pts[i].1 <= pts[i + 1].1).map(|i| pts[i]).collect()
}

#[test]
fn chirped_preview_has_one_anticrossing() {
    let dir = tempfile::tempdir().unwrap();
    // default pulse: 9π, a = 10 ps², δ = 2.5 ps⁻¹
    ok(&["pulse-preview", "--set", "solver.samples=2001"], dir.path());
    let minima = lambda_minima(dir.path());
    assert_eq!(minima.len(), 1, "{minima:?}");
    let (_, rows) = read_csv(&dir.path().join("pulse_preview.csv"));
    let edge = rows[0][3].unwrap().min(rows.last().unwrap()[3].unwrap());
    assert!(minima[0].1 < 0.2 * edge);

    ok(&["pulse-preview", "--set", "pulse.delta_ps_inv=0", "--set", "pulse.theta0_over_pi=3", "--set", "solver.samples=2001"], dir.path());
    let minima = lambda_minima(dir.path());
    assert_eq!(minima.len(), 1, "{minima:?}");
    assert!(minima[0].0.abs() < 1e-9);
}

#[test]
fn heat_sweep_zero_area_row_signs_and_reproducibility() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&[&["heat-sweep"], &SMALL_SWEEP[..]].concat(), a.path());
    ok(&[&["heat-sweep", "--workers", "1"], &SMALL_SWEEP[..]].concat(), b.path());
    for name in ["heat_sweep_delta_0.csv", "heat_sweep_delta_2.5.csv"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let (header, rows) = read_csv(&a.path().join("heat_sweep_delta_0.csv"));
    assert_eq!(header, ["chirp_a_ps2", "theta0_over_pi", "mean_heat_ps_inv"]);
    assert_eq!(rows.len(), 20);
    for r in &rows {
        let (chirp, area, q) = (r[0].unwrap(), r[1].unwrap(), r[2].unwrap());
        if area == 0.0 {
            assert_eq!(q, 0.0);
        } else if chirp != 0.0 {
            // resonant driving: up-chirps absorb, down-chirps emit
            assert_eq!(q.signum(), chirp.signum(), "a={chirp} area={area} Q={q}");
        }
    }
    let (_, blue) = read_csv(&a.path().join("heat_sweep_delta_2.5.csv"));
    assert!(blue.iter().filter(|r| r[1].unwrap() > 0.0).all(|r| r[2].unwrap() > 0.0));
}

#[test]
fn efficiency_sweep_leaves_non_absorbing_points_empty() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[&["efficiency-sweep"], &SMALL_SWEEP[..]].concat(), dir.path());
    let (header, rows) = read_csv(&dir.path().join("efficiency_sweep_delta_0.csv"));
    assert_eq!(header[2], "eta_over_carnot");
    for r in &rows {
        if r[1].unwrap() == 0.0 || r[0].unwrap() < 0.0 {
            assert_eq!(r[2], None);
        }
        if let Some(eta) = r[2] {
            // weak strokes can absorb heat yet export entropy, giving η < 0
            assert!(eta < 1.0);
        }
    }
}

#[test]
fn chirped_pulse_beats_unchirped_pulse_in_efficiency() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&["evolve"], a.path());
    ok(
        &["evolve", "--set", "pulse.tau0_ps=2", "--set", "pulse.theta0_over_pi=6", "--set", "pulse.chirp_a_ps2=0"],
        b.path(),
    );
    let eta = |d: &Path| manifest(d, "evolve")["summary"]["efficiency"]["eta_over_carnot"].as_f64().unwrap();
    assert!(eta(a.path()) > eta(b.path()), "{} vs {}", eta(a.path()), eta(b.path()));
}

#[test]
fn evolve_writes_full_trajectory_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 9\n[solver]\nsamples = 51\n[output]\nformats = [\"csv\", \"json\"]\n").unwrap();
    ok(&["evolve", "--config", cfg.to_str().unwrap(), "--seed", "4"], dir.path());
    let (header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 51);
    assert_eq!(header.len(), 16);
    assert!(dir.path().join("trajectory.json").exists());
    let m = manifest(dir.path(), "evolve");
    assert_eq!(m["config"]["seed"], 4);
    assert_eq!(m["config"]["solver"]["samples"], 51);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(m["outputs"].as_array().unwrap().iter().any(|o| o == "trajectory.csv"));
    let last = rows.last().unwrap();
    let q = m["summary"]["heat_ps_inv"].as_f64().unwrap();
    assert!((last[13].unwrap() - q).abs() < 1e-6 * q.abs());
}

#[test]
fn bad_configs_are_rejected_with_the_key_named() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["evolve", "--set", "pulse.tau0=1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau0"));
    let out = run(&["evolve", "--set", "bath.temperature_k=-3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[bath]"));
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[pulse]\ntau0_ps = 1.0\nshape = \"square\"\n").unwrap();
    let out = run(&["evolve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("square"));
}

#[test]
fn failed_points_give_a_nonzero_exit_and_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "heat-sweep",
            "--set",
            "sweep.chirp_a_ps2={start=5,stop=5,points=1}",
            "--set",
            "sweep.theta0_over_pi={start=2,stop=2,points=1}",
            "--set",
            "sweep.detunings_ps_inv=[0]",
            "--set",
            "solver.rel_tol=1e-300",
            "--set",
            "solver.abs_tol=1e-300",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let m = manifest(dir.path(), "heat-sweep");
    assert_eq!(m["failures"].as_array().unwrap().len(), 1);
    let (_, rows) = read_csv(&dir.path().join("heat_sweep_delta_0.csv"));
    assert_eq!(rows, vec![vec![Some(5.0), Some(2.0), None]]);
}

#[test]
fn gnuplot_stub_references_the_tables() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["cooling-map", "--gnuplot-stub", "--set", "cw.delta_ps_inv={start=-5,stop=5,points=11}"], dir.path());
    let script = std::fs::read_to_string(dir.path().join("cooling-map.gp")).unwrap();
    assert!(script.contains("'cooling_map.csv' using 1:2:5"));
    let (header, rows) = read_csv(&dir.path().join("cooling_map.csv"));
    assert_eq!(header, ["delta_ps_inv", "omega_ps_inv", "cooling_W", "heating_W", "net_W"]);
    assert_eq!(rows.len(), 11 * 41);
    for r in &rows {
        assert!((r[2].unwrap() - r[3].unwrap() - r[4].unwrap()).abs() <= 1e-12 * r[3].unwrap().abs().max(1e-30));
    }
}

#[test]
fn heat_distribution_and_oracle_agree_on_the_mean() {
    let dir = tempfile::tempdir().unwrap();
    let small = ["--set", "pulse.tau0_ps=2", "--set", "pulse.theta0_over_pi=4", "--set", "pulse.chirp_a_ps2=5"];
    ok(&[&["heat-distribution", "--set", "counting.n=256"], &small[..]].concat(), dir.path());
    let text = std::fs::read_to_string(dir.path().join("heat_distribution.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# grid:")));
    assert!(text.lines().any(|l| l.starts_with("# sign:")));
    let (header, rows) = read_csv(&dir.path().join("heat_distribution.csv"));
    assert_eq!(header, ["q_ps_inv", "probability_density", "q_mev"]);
    let dq = rows[1][0].unwrap() - rows[0][0].unwrap();
    let mass: f64 = rows.iter().map(|r| r[1].unwrap() * dq).sum();
    assert!((mass - 1.0).abs() < 1e-6);

    ok(&[&["oracle-mc", "--set", "oracle.trajectories=4000", "--set", "oracle.n=256", "--seed", "11"], &small[..]].concat(), dir.path());
    let stats: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("oracle_stats.json")).unwrap()).unwrap();
    assert_eq!(stats["n"], 4000);
    assert_eq!(stats["seed"], 11);
    let (mean, se, fcs) = (stats["mean"].as_f64().unwrap(), stats["stderr"].as_f64().unwrap(), stats["fcs_mean"].as_f64().unwrap());
    assert!((mean - fcs).abs() < 4.0 * se, "{mean} ± {se} vs {fcs}");
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["selftest"], dir.path());
    let checks: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("selftest.json")).unwrap()).unwrap();
    assert!(checks.as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn worker_count_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_dressed-thermo");
    let status = Command::new(bin)
        .args(["pulse-preview", "--set", "workers=3", "--out-dir"])
        .arg(dir.path())
        .env("DRESSED_THERMO_WORKERS", "2")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(manifest(dir.path(), "pulse-preview")["config"]["workers"], 2);
    let status = Command::new(bin)
        .args(["pulse-preview", "--workers", "1", "--out-dir"])
        .arg(dir.path())
        .env("DRESSED_THERMO_WORKERS", "2")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(manifest(dir.path(), "pulse-preview")["config"]["workers"], 1);
}
