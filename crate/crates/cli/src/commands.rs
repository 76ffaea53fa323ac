//! One function per subcommand. Each writes its tables into the output set
//! and returns a JSON summary plus the list of failed points.

use std::f64::consts::PI;

use anyhow::{Context, Result};
use dressed_thermo::fcs::{characteristic_scan, heat_distribution, CountingGrid, HeatDistribution};
use dressed_thermo::model::DensityMatrix2;
use dressed_thermo::propagator::{evolve, EvolutionSpec};
use dressed_thermo::pulse::preview;
use dressed_thermo::selftest::run_selftest;
use dressed_thermo::steady::{absorption_heating, net_cooling_count, net_cooling_map};
use dressed_thermo::sweep::{chirp_area_sweep, SweepPoint};
use dressed_thermo::thermo::{efficiency_from, entropy_change, integrated_heat, ts_trajectory};
use dressed_thermo::unravel::{ket_from_pure, sample_trajectories, total_variation, JumpKind, UnravelSettings};
use dressed_thermo::units;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::output::{OutputSet, Table};

pub struct Outcome {
    pub summary: Value,
    pub failures: Vec<String>,
}

impl Outcome {
    fn ok(summary: Value) -> Self {
        Self { summary, failures: Vec::new() }
    }
}

fn pulse_comments(cfg: &ExperimentConfig) -> Vec<String> {
    let p = &cfg.pulse;
    let b = &cfg.bath;
    vec![
        format!(
            "pulse: tau0_ps={} theta0_over_pi={} chirp_a_ps2={} delta_ps_inv={} t_center_ps={}",
            p.tau0_ps, p.theta0_over_pi, p.chirp_a_ps2, p.delta_ps_inv, p.t_center_ps
        ),
        format!(
            "bath: temperature_k={} form={:?} amplitude_ps2={} cutoff_ps_inv={}",
            b.temperature_k, b.form, b.amplitude_ps2, b.cutoff_ps_inv
        ),
    ]
}

pub fn pulse_preview(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let spec = cfg.evolution_spec()?;
    let pulse = spec.pulse().expect("pulse spec");
    let rows = preview(pulse, spec.t_start, spec.t_end, cfg.solver.samples);
    let mut t = Table::new(&[
        "t_ps",
        "omega_ps_inv",
        "delta_ps_inv",
        "lambda_ps_inv",
        "plus_half_lambda_ps_inv",
        "minus_half_lambda_ps_inv",
    ]);
    for r in &rows {
        t.push_values(&[r.t, r.omega, r.delta, r.lambda, 0.5 * r.lambda, -0.5 * r.lambda]);
    }
    let min = rows.iter().min_by(|a, b| a.lambda.total_cmp(&b.lambda)).expect("rows");
    out.table("pulse_preview", t)?;
    Ok(Outcome::ok(json!({
        "t_start_ps": spec.t_start,
        "t_end_ps": spec.t_end,
        "max_lambda_ps_inv": spec.max_splitting(),
        "min_lambda_ps_inv": min.lambda,
        "t_min_lambda_ps": min.t,
    })))
}

pub fn evolve_cmd(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let spec = cfg.evolution_spec()?;
    let traj = evolve(&spec, &DensityMatrix2::ground()).context("evolve")?;
    let mut t = Table::new(&[
        "t_ps",
        "rho00",
        "rho11",
        "rho01_re",
        "rho01_im",
        "p_plus",
        "p_minus",
        "lambda_ps_inv",
        "omega_ps_inv",
        "delta_ps_inv",
        "gamma_a_ps_inv",
        "gamma_e_ps_inv",
        "heat_current_ps_inv2",
        "cumulative_heat_ps_inv",
        "entropy_vn",
        "t_eff_k",
    ]);
    for r in &traj.rows {
        let m = r.rho.matrix();
        t.push(vec![
            Some(r.t),
            Some(m[(0, 0)].re),
            Some(m[(1, 1)].re),
            Some(m[(0, 1)].re),
            Some(m[(0, 1)].im),
            Some(r.p_plus),
            Some(r.p_minus),
            Some(r.lambda),
            Some(r.omega),
            Some(r.delta),
            Some(r.gamma_a),
            Some(r.gamma_e),
            Some(r.heat_current),
            Some(r.cumulative_heat),
            Some(r.entropy),
            r.t_eff_kelvin.is_finite().then_some(r.t_eff_kelvin),
        ]);
    }
    out.table("trajectory", t)?;
    let heat = integrated_heat(&traj);
    let ds = entropy_change(&traj);
    let engine = cfg.engine()?;
    let efficiency = (heat > 0.0).then(|| efficiency_from(heat, ds, &engine));
    let summary = json!({
        "heat_ps_inv": heat,
        "heat_mev": units::ps_inv_to_mev(heat),
        "entropy_change": ds,
        "entropy_production": ds - heat / spec.bath.temperature,
        "final_excited_population": traj.last().rho.population_excited(),
        "efficiency": efficiency,
        "integration": traj.stats,
    });
    out.json("evolve_summary.json", &summary)?;
    Ok(Outcome::ok(summary))
}

pub fn ts(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let spec = cfg.evolution_spec()?;
    let traj = evolve(&spec, &DensityMatrix2::ground()).context("evolve")?;
    let rows = ts_trajectory(&traj);
    let mut t = Table::new(&["t_ps", "t_eff_k", "entropy_vn", "entropy_diagonal"]);
    for r in &rows {
        t.push(vec![Some(r.t), r.t_eff_kelvin.is_finite().then_some(r.t_eff_kelvin), Some(r.entropy), Some(r.diagonal_entropy)]);
    }
    out.table("ts", t)?;
    let peak = rows.iter().map(|r| r.t_eff_kelvin).filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let last = rows.last().expect("rows");
    Ok(Outcome::ok(json!({
        "bath_temperature_k": cfg.bath.temperature_k,
        "max_t_eff_k": peak.is_finite().then_some(peak),
        "final_t_eff_k": last.t_eff_kelvin.is_finite().then_some(last.t_eff_kelvin),
        "final_entropy_vn": last.entropy,
    })))
}

fn sweep_failure(delta: f64, p: &SweepPoint) -> Option<String> {
    p.error.as_ref().map(|e| format!("delta={delta} chirp_a={} theta0_over_pi={}: {e}", p.chirp_a, p.theta0 / PI))
}

fn run_sweeps(cfg: &ExperimentConfig, out: &mut OutputSet, efficiency: bool) -> Result<Outcome> {
    let chirps = cfg.sweep.chirp_a_ps2.values();
    let areas: Vec<f64> = cfg.sweep.theta0_over_pi.values().iter().map(|x| x * PI).collect();
    let engine = cfg.engine()?;
    let (prefix, value_col) = if efficiency { ("efficiency_sweep", "eta_over_carnot") } else { ("heat_sweep", "mean_heat_ps_inv") };
    let mut failures = Vec::new();
    let mut files = Vec::new();
    for &delta in &cfg.sweep.detunings_ps_inv {
        let spec = cfg.sweep_spec(delta)?;
        let points = chirp_area_sweep(&spec, &chirps, &areas, efficiency.then_some(&engine));
        let mut t = Table::new(&["chirp_a_ps2", "theta0_over_pi", value_col]);
        t.comment(format!("tau0_ps={} delta_ps_inv={} bath_temperature_k={}", cfg.sweep.tau0_ps, delta, cfg.bath.temperature_k));
        if efficiency {
            t.comment(format!("engine: cold_k={}; points without net heat uptake are left empty", cfg.engine.cold_k));
        } else {
            t.comment("mean_heat_ps_inv > 0: heat flows from the phonons into the emitter");
        }
        for (i, p) in points.iter().enumerate() {
            let th = cfg.sweep.theta0_over_pi.values()[i / chirps.len()];
            let v = if efficiency { p.eta_over_carnot } else { p.heat };
            t.push(vec![Some(p.chirp_a), Some(th), v]);
            failures.extend(sweep_failure(delta, p));
        }
        let stem = format!("{prefix}_delta_{delta}");
        out.table(&stem, t)?;
        files.push(stem);
    }
    Ok(Outcome {
        summary: json!({ "tables": files, "grid_points": chirps.len() * areas.len(), "failed_points": failures.len() }),
        failures,
    })
}

pub fn heat_sweep(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    run_sweeps(cfg, out, false)
}

pub fn efficiency_sweep(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    run_sweeps(cfg, out, true)
}

fn distribution_table(cfg: &ExperimentConfig, q: &[f64], densities: &[(&str, &[f64])], grid: &CountingGrid) -> Table {
    let mut cols = vec!["q_ps_inv"];
    cols.extend(densities.iter().map(|(n, _)| *n));
    if cfg.output.mev_column {
        cols.push("q_mev");
    }
    let mut t = Table::new(&cols);
    t.comment(format!(
        "grid: n={} du_ps={} dq_ps_inv={} q_range_ps_inv={} apodize={}",
        grid.n,
        grid.du,
        grid.q_resolution(),
        grid.q_range(),
        grid.apodize
    ));
    t.comment("sign: Q > 0 is heat taken from the phonon bath by the emitter");
    for c in pulse_comments(cfg) {
        t.comment(c);
    }
    for (i, &qi) in q.iter().enumerate() {
        let mut row = vec![Some(qi)];
        row.extend(densities.iter().map(|(_, d)| Some(d[i])));
        if cfg.output.mev_column {
            row.push(Some(units::ps_inv_to_mev(qi)));
        }
        t.push(row);
    }
    t
}

fn distribution(spec: &EvolutionSpec, grid: &CountingGrid) -> Result<(HeatDistribution, f64)> {
    grid.validate(spec.max_splitting()).context("[counting]")?;
    let scan = characteristic_scan(spec, &DensityMatrix2::ground(), grid).context("counting-field scan")?;
    let dist = heat_distribution(&scan).context("heat distribution")?;
    Ok((dist, scan.hermitian_defect()))
}

pub fn heat_distribution_cmd(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let mut spec = cfg.evolution_spec()?;
    if let Some(t) = cfg.counting.t_end_ps {
        anyhow::ensure!(t > spec.t_start, "[counting] t_end_ps must lie after the window start {}", spec.t_start);
        spec = spec.with_end(t);
    }
    let grid = cfg.counting_grid(&spec);
    let (dist, defect) = distribution(&spec, &grid)?;
    let heat = integrated_heat(&evolve(&spec.with_samples(2), &DensityMatrix2::ground())?);
    let mut t = distribution_table(cfg, &dist.q_values, &[("probability_density", &dist.probabilities)], &grid);
    t.comment(format!("t_end_ps={}", spec.t_end));
    out.table("heat_distribution", t)?;
    let summary = json!({
        "t_end_ps": spec.t_end,
        "mean_ps_inv": dist.mean,
        "variance_ps_inv2": dist.variance,
        "integrated_heat_ps_inv": heat,
        "total_probability": dist.total_probability(),
        "negative_mass": dist.negative_mass(),
        "max_imaginary": dist.max_imaginary,
        "hermitian_defect": defect,
    });
    out.json("heat_distribution_summary.json", &summary)?;
    Ok(Outcome::ok(summary))
}

pub fn cooling_map(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let deltas = cfg.cw.delta_ps_inv.values();
    let omegas = cfg.cw.omega_ps_inv.values();
    let rows = net_cooling_map(&deltas, &omegas, &cfg.cw_base()?, &cfg.absorption).context("cooling map")?;
    let mut t = Table::new(&["delta_ps_inv", "omega_ps_inv", "cooling_W", "heating_W", "net_W"]);
    t.comment(format!(
        "gamma_sp_ns_inv={} bath_temperature_k={} dipole_debye={} density_over_absorption_m2={} refractive_index={}",
        cfg.cw.gamma_sp_ns_inv,
        cfg.cw.bath.temperature_k,
        cfg.absorption.dipole_debye,
        cfg.absorption.density_over_absorption_m2,
        cfg.absorption.refractive_index
    ));
    t.comment("cooling_W > 0: heat removed from the phonons; net_W = cooling_W - heating_W");
    for r in &rows {
        t.push_values(&[r.delta_ps_inv, r.omega_ps_inv, r.cooling_w, r.heating_w, r.net_w]);
    }
    out.table("cooling_map", t)?;
    let best = rows.iter().max_by(|a, b| a.net_w.total_cmp(&b.net_w)).expect("non-empty grid");
    let residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(Outcome::ok(json!({
        "net_cooling_points": net_cooling_count(&rows),
        "best": { "delta_ps_inv": best.delta_ps_inv, "omega_ps_inv": best.omega_ps_inv, "net_W": best.net_w },
        "heating_at_best_W": absorption_heating(best.omega_ps_inv, &cfg.absorption),
        "max_steady_state_residual": residual,
    })))
}

pub fn oracle_mc(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let spec = cfg.evolution_spec()?;
    let psi0 = ket_from_pure(&DensityMatrix2::ground())?;
    let n = cfg.oracle.trajectories;
    let stats = sample_trajectories(&spec, &psi0, n, cfg.seed, &UnravelSettings::default()).context("trajectory sampling")?;
    let grid = CountingGrid::for_range(cfg.oracle.q_range_ps_inv, cfg.oracle.n);
    let dq = grid.q_resolution();
    let masses = stats.histogram(&grid);
    let density: Vec<f64> = masses.iter().map(|m| m / dq).collect();
    let half = (grid.n / 2) as i64;
    let q: Vec<f64> = (-half..half).map(|j| j as f64 * dq).collect();

    let fcs = if cfg.oracle.compare_fcs { Some(distribution(&spec, &grid)?.0) } else { None };
    let mut columns: Vec<(&str, &[f64])> = vec![("probability_density", &density)];
    if let Some(d) = &fcs {
        columns.push(("fcs_probability_density", &d.probabilities));
    }
    let mut t = distribution_table(cfg, &q, &columns, &grid);
    t.comment(format!("trajectories={n} seed={}", cfg.seed));
    out.table("oracle_histogram", t)?;

    let absorptions = stats.first_jumps.iter().filter(|j| **j == Some(JumpKind::Absorption)).count();
    let jumped = stats.first_jumps.iter().filter(|j| j.is_some()).count();
    let summary = json!({
        "n": n,
        "seed": cfg.seed,
        "mean": stats.mean_heat,
        "stderr": stats.standard_error,
        "first_jump_absorption": absorptions,
        "trajectories_with_jumps": jumped,
        "fcs_mean": fcs.as_ref().map(|d| d.mean),
        "total_variation": fcs.as_ref().map(|d| total_variation(&masses, &d.masses())),
    });
    out.json("oracle_stats.json", &summary)?;
    Ok(Outcome::ok(summary))
}

pub fn selftest(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<Outcome> {
    let checks = run_selftest(cfg.seed);
    for c in &checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    out.json("selftest.json", &checks)?;
    let failures = checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
    Ok(Outcome { summary: json!({ "checks": checks.len() }), failures })
}
