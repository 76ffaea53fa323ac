//! Acceptance criteria. Each test writes one `PASS`/`FAIL` line to stderr
//! (outside the harness capture) and then asserts on the same condition.
//!
//! Named pulses, both with δ = 2.5 ps⁻¹ and T_h = 20 K:
//! - chirped: τ₀ = 0.5 ps, Θ₀ = 9π, a = 10 ps²
//! - unchirped: τ₀ = 2 ps, Θ₀ = 6π, a = 0

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use dressed_thermo::bath::{phonon_rates, BathSpec, SpectralDensity};
use dressed_thermo::fcs::{heat_distribution_for, CountingGrid, HeatDistribution};
use dressed_thermo::model::{dressed_splitting, DensityMatrix2};
use dressed_thermo::propagator::{evolve, evolve_counting, evolve_final, EvolutionSpec};
use dressed_thermo::pulse::{chirp_transform, ChirpedGaussianSpec};
use dressed_thermo::steady::{absorption_heating, cooling_power, net_cooling_map, AbsorptionModel, CWDriveSpec};
use dressed_thermo::sweep::{chirp_area_sweep, Axis, SweepPoint, SweepSpec};
use dressed_thermo::thermo::{engine_efficiency, find_plateau, integrated_heat, ts_trajectory, EngineSpec, PlateauCriteria};
use dressed_thermo::unravel::{ket_from_pure, sample_trajectories, total_variation, trajectory_rng, UnravelSettings};
use dressed_thermo::units::ns_inv_to_ps_inv;
use rand::Rng;

const SEED: u64 = 20_240_601;

// criterion 1
const CONSERVATION_PULSES: usize = 200;
const TRACE_TOL: f64 = 1e-9;
const EIGEN_TOL: f64 = 1e-9;
const G0_TOL: f64 = 1e-9;
const DETAILED_BALANCE_TOL: f64 = 1e-12;
const CONSERVATION_BUDGET: Duration = Duration::from_secs(600);
// criterion 2
const FIRST_MOMENT_REL_TOL: f64 = 1e-3;
// criterion 3
const MC_TRAJECTORIES: usize = 100_000;
const TV_TOL: f64 = 0.05;
const MC_SIGMAS: f64 = 3.0;
const ORACLE_Q_RANGE: f64 = 20.0;
// criterion 4 and 9
const SIGN_THRESHOLD: f64 = 1e-6;
const SWEEP_BUDGET: Duration = Duration::from_secs(300);
const ENTROPY_PRODUCTION_TOL: f64 = 1e-6;
// criterion 5
const HOT_K: f64 = 20.0;
const COLD_K: f64 = 2.7;
const MIN_CHIRPED_ETA_OVER_CARNOT: f64 = 0.9;
const CARNOT_SLACK: f64 = 1e-9;
// criterion 6
const PLATEAU_VARIATION: f64 = 0.2;
// criterion 7
const MIN_NEGATIVE_MASS: f64 = 1e-3;
// criterion 8
const ARP_MIN_P1: f64 = 0.99;
// criterion 10
const STEADY_RESIDUAL_TOL: f64 = 1e-10;
const ZERO_CURRENT_TOL: f64 = 1e-12;
const COOLING_BUDGET: Duration = Duration::from_secs(60);

fn report(criterion: &str, passed: bool, detail: String) {
    let line = format!("{} criterion {criterion}: {detail}\n", if passed { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(passed, "criterion {criterion}: {detail}");
}

fn exciton_bath(kelvin: f64) -> BathSpec {
    BathSpec::from_kelvin(kelvin, SpectralDensity::exciton_default()).unwrap()
}

fn chirped() -> ChirpedGaussianSpec {
    ChirpedGaussianSpec::new(0.5, 9.0 * PI, 10.0, 2.5).unwrap()
}

fn unchirped() -> ChirpedGaussianSpec {
    ChirpedGaussianSpec::new(2.0, 6.0 * PI, 0.0, 2.5).unwrap()
}

fn named_spec(pulse: ChirpedGaussianSpec) -> EvolutionSpec {
    EvolutionSpec::for_pulse(pulse, exciton_bath(HOT_K)).unwrap()
}

fn random_pulse(rng: &mut impl Rng) -> (ChirpedGaussianSpec, BathSpec) {
    let pulse = ChirpedGaussianSpec::new(
        rng.gen_range(0.2..=5.0),
        rng.gen_range(0.0..=10.0 * PI),
        rng.gen_range(-30.0..=30.0),
        rng.gen_range(-5.0..=5.0),
    )
    .unwrap();
    (pulse, exciton_bath(rng.gen_range(4.0..=50.0)))
}

/// P(Q) of the chirped pulse on the default grid, shared by criteria 2 and 7.
fn chirped_distribution() -> &'static HeatDistribution {
    static DIST: OnceLock<HeatDistribution> = OnceLock::new();
    DIST.get_or_init(|| {
        let spec = named_spec(chirped());
        heat_distribution_for(&spec, &DensityMatrix2::ground(), &CountingGrid::default_for(&spec)).unwrap()
    })
}

/// Criterion-4 sweep: 9 × 9 grid, a = −20..20 ps², Θ₀ = 10πk/9, τ₀ = 2 ps.
fn sign_sweep() -> &'static (Vec<(f64, Vec<SweepPoint>)>, Duration) {
    static SWEEP: OnceLock<(Vec<(f64, Vec<SweepPoint>)>, Duration)> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let chirps = Axis::new(-20.0, 20.0, 9).values();
        let areas: Vec<f64> = (1..=9).map(|k| 10.0 * PI * k as f64 / 9.0).collect();
        let engine = EngineSpec::new(HOT_K, COLD_K).unwrap();
        let sweeps = [0.0, -2.5, 2.5]
            .into_iter()
            .map(|delta| (delta, chirp_area_sweep(&SweepSpec::new(2.0, delta, exciton_bath(HOT_K)), &chirps, &areas, Some(&engine))))
            .collect();
        (sweeps, start.elapsed())
    })
}

#[test]
fn criterion_01_conservation() {
    let start = Instant::now();
    let mut rng = trajectory_rng(SEED, 1);
    let (mut trace_err, mut min_eig, mut g0_err, mut db_err): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..CONSERVATION_PULSES {
        let (pulse, bath) = random_pulse(&mut rng);
        let spec = EvolutionSpec::for_pulse(pulse, bath).unwrap().with_samples(201);
        let traj = evolve(&spec, &DensityMatrix2::ground()).unwrap();
        for row in &traj.rows {
            trace_err = trace_err.max((row.rho.trace() - 1.0).abs());
            min_eig = min_eig.min(row.rho.min_eigenvalue());
            let frame = spec.drive.frame_at(row.t);
            let rates = phonon_rates(frame, &bath);
            if rates.emission > 1e-300 && rates.absorption > 0.0 {
                let expected = (-dressed_splitting(frame) / bath.temperature).exp();
                db_err = db_err.max((rates.absorption / rates.emission - expected).abs() / expected);
            }
        }
        g0_err = g0_err.max((evolve_counting(&spec, &DensityMatrix2::ground(), 0.0).unwrap() - 1.0).norm());
    }
    let elapsed = start.elapsed();
    report(
        "1 (conservation)",
        trace_err < TRACE_TOL && min_eig > -EIGEN_TOL && g0_err < G0_TOL && db_err < DETAILED_BALANCE_TOL && elapsed < CONSERVATION_BUDGET,
        format!(
            "{CONSERVATION_PULSES} pulses: trace {trace_err:.1e}, min eigenvalue {min_eig:.1e}, |G(0)-1| {g0_err:.1e}, detailed balance {db_err:.1e}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_02_first_moment_identity() {
    let mut rng = trajectory_rng(SEED, 2);
    let mut specs: Vec<EvolutionSpec> = (0..5)
        .map(|_| {
            let (pulse, bath) = random_pulse(&mut rng);
            EvolutionSpec::for_pulse(pulse, bath).unwrap()
        })
        .collect();
    specs.push(named_spec(unchirped()));
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    let mut check = |dist_mean: f64, spec: &EvolutionSpec| {
        let current = integrated_heat(&evolve(&spec.with_samples(2), &DensityMatrix2::ground()).unwrap());
        let rel = (dist_mean - current).abs() / current.abs().max(1e-12);
        worst = worst.max(rel);
        lines.push(format!("{current:.4}"));
    };
    for spec in &specs {
        let dist = heat_distribution_for(spec, &DensityMatrix2::ground(), &CountingGrid::default_for(spec)).unwrap();
        check(dist.mean, spec);
    }
    check(chirped_distribution().mean, &named_spec(chirped()));
    report(
        "2 (first moment)",
        worst < FIRST_MOMENT_REL_TOL,
        format!("7 pulses, worst relative gap {worst:.2e}; integrated heats [{}]", lines.join(", ")),
    );
}

#[test]
fn criterion_03_oracle_equivalence() {
    let spec = named_spec(chirped());
    let rho0 = DensityMatrix2::ground();
    let stats = sample_trajectories(&spec, &ket_from_pure(&rho0).unwrap(), MC_TRAJECTORIES, SEED, &UnravelSettings::default()).unwrap();
    let grid = CountingGrid::for_range(ORACLE_Q_RANGE, CountingGrid::DEFAULT_SAMPLES);
    let dist = heat_distribution_for(&spec, &rho0, &grid).unwrap();
    let tv = total_variation(&stats.histogram(&grid), &dist.masses());

    let heat = integrated_heat(&evolve(&spec.with_samples(2), &rho0).unwrap());
    let mean_sigmas = (stats.mean_heat - heat).abs() / stats.standard_error;

    let rho = evolve_final(&spec, &rho0).unwrap();
    let mut state_sigmas: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let d = stats.mean_state[(i, j)] - rho.matrix()[(i, j)];
            let se = stats.state_standard_error[(i, j)];
            for (diff, err) in [(d.re, se.re), (d.im, se.im)] {
                if err > 0.0 {
                    state_sigmas = state_sigmas.max(diff.abs() / err);
                } else {
                    assert!(diff.abs() < 1e-12);
                }
            }
        }
    }
    report(
        "3 (oracle)",
        tv < TV_TOL && mean_sigmas < MC_SIGMAS && state_sigmas < MC_SIGMAS,
        format!(
            "TV {tv:.4}; mean {:.5} ± {:.5} vs {heat:.5} ({mean_sigmas:.2}σ); final state within {state_sigmas:.2}σ",
            stats.mean_heat, stats.standard_error
        ),
    );
}

#[test]
fn criterion_04_sign_structure() {
    let (sweeps, elapsed) = sign_sweep();
    let heats = |d: f64| sweeps.iter().find(|(x, _)| *x == d).unwrap().1.iter().map(|p| (p.chirp_a, p.heat.unwrap())).collect::<Vec<_>>();
    let resonant = heats(0.0);
    let literal_bad: Vec<(f64, f64)> =
        resonant.iter().copied().filter(|(a, q)| q.abs() > SIGN_THRESHOLD && q.signum() != if *a == 0.0 { 0.0 } else { a.signum() }).collect();
    let chirped_bad = literal_bad.iter().filter(|(a, _)| *a != 0.0).count();
    let red_bad = heats(-2.5).iter().filter(|(_, q)| *q > SIGN_THRESHOLD).count();
    let blue_bad = heats(2.5).iter().filter(|(_, q)| *q < -SIGN_THRESHOLD).count();
    let unchirped: Vec<f64> = literal_bad.iter().filter(|(a, _)| *a == 0.0).map(|p| p.1).collect();
    let lo = unchirped.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = unchirped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report(
        "4 (sign structure)",
        literal_bad.is_empty() && red_bad == 0 && blue_bad == 0 && *elapsed < SWEEP_BUDGET,
        format!(
            "δ=0: {} sign mismatches ({chirped_bad} at a≠0; a=0 column has ⟨Q⟩ in [{lo:.3e}, {hi:.3e}] where sign(a)=0); δ=−2.5: {red_bad} positive; δ=+2.5: {blue_bad} negative; {:.1} s",
            literal_bad.len(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_05_efficiency_ordering() {
    let engine = EngineSpec::new(HOT_K, COLD_K).unwrap();
    let carnot_exact = (engine.carnot() - 0.865).abs() < 1e-15;
    let eta = |p| engine_efficiency(&evolve(&named_spec(p), &DensityMatrix2::ground()).unwrap(), &engine).unwrap();
    let (c, u) = (eta(chirped()), eta(unchirped()));
    let mut worst_excess = c.eta.max(u.eta) - engine.carnot();
    for (_, pts) in &sign_sweep().0 {
        for p in pts.iter().filter_map(|p| p.eta_over_carnot) {
            worst_excess = worst_excess.max((p - 1.0) * engine.carnot());
        }
    }
    report(
        "5 (efficiency)",
        carnot_exact && c.eta_over_carnot >= MIN_CHIRPED_ETA_OVER_CARNOT && c.eta_over_carnot > u.eta_over_carnot && worst_excess <= CARNOT_SLACK,
        format!(
            "η/η_C chirped {:.4}, unchirped {:.4}; max η − η_C over named pulses and sweep {worst_excess:.3e}",
            c.eta_over_carnot, u.eta_over_carnot
        ),
    );
}

#[test]
fn criterion_06_isothermal_plateau() {
    let plateau = |pulse: ChirpedGaussianSpec, above: Option<f64>| {
        let tau = chirp_transform(&pulse).tau;
        let rows = ts_trajectory(&evolve(&named_spec(pulse).with_samples(2001), &DensityMatrix2::ground()).unwrap());
        let criteria = PlateauCriteria {
            min_duration: tau / 4.0,
            max_relative_variation: PLATEAU_VARIATION,
            below_kelvin: HOT_K,
            above_kelvin: above,
        };
        find_plateau(&rows, &criteria)
    };
    let chirped_plateau = plateau(chirped(), None);
    let near_bath = Some((1.0 - PLATEAU_VARIATION) * HOT_K);
    let chirped_near = plateau(chirped(), near_bath);
    let unchirped_near = plateau(unchirped(), near_bath);
    report(
        "6 (T_eff plateau)",
        // the bare criterion is already met by the cold pre-pulse stretch, so
        // the chirped pulse must also show a plateau close to the bath
        chirped_plateau.is_some() && chirped_near.is_some() && unchirped_near.is_none(),
        format!(
            "chirped: first plateau {chirped_plateau:?} ps, within 20% of T_h {chirped_near:?} ps; unchirped within 20% of T_h: {unchirped_near:?}"
        ),
    );
}

#[test]
fn criterion_07_negative_heat_mass() {
    let dist = chirped_distribution();
    let neg = dist.negative_mass();
    report(
        "7 (negative-Q mass)",
        neg > MIN_NEGATIVE_MASS && dist.mean > 0.0,
        format!("P(Q<0) mass {neg:.4}, mean {:.4} ps⁻¹, dQ {:.4} ps⁻¹", dist.mean, dist.dq),
    );
}

#[test]
fn criterion_08_adiabatic_rapid_passage() {
    let pulse = ChirpedGaussianSpec::new(2.0, 6.0 * PI, 20.0, 0.0).unwrap();
    let spec = EvolutionSpec::for_pulse(pulse, exciton_bath(0.0)).unwrap();
    let p1 = evolve_final(&spec, &DensityMatrix2::ground()).unwrap().population_excited();
    report("8 (ARP)", p1 > ARP_MIN_P1, format!("τ₀=2 ps, Θ₀=6π, a=20 ps², T=0: p₁ = {p1:.6}"));
}

#[test]
fn criterion_09_second_law() {
    let (sweeps, _) = sign_sweep();
    let min = sweeps.iter().flat_map(|(_, p)| p.iter().map(|p| p.entropy_production.unwrap())).fold(f64::INFINITY, f64::min);
    report("9 (second law)", min >= -ENTROPY_PRODUCTION_TOL, format!("min Σ over 243 sweep points {min:.4e} k_B"));
}

#[test]
fn criterion_10_cooling_map() {
    let start = Instant::now();
    let deltas = Axis::new(-5.0, 5.0, 41).values();
    let omegas: Vec<f64> = (1..=41).map(|k| 5.0 * k as f64 / 41.0).collect();
    let bath = BathSpec::from_kelvin(20.0, SpectralDensity::siv_default()).unwrap();
    let model = AbsorptionModel::siv_default();
    let base = CWDriveSpec { delta: 0.0, omega: 1.0, bath, gamma_sp: ns_inv_to_ps_inv(1.0) };
    let rows = net_cooling_map(&deltas, &omegas, &base, &model).unwrap();
    let residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);

    let mut zero_current: f64 = 0.0;
    for &delta in &deltas {
        for &omega in &omegas {
            zero_current = zero_current.max(cooling_power(&CWDriveSpec { delta, omega, bath, gamma_sp: 0.0 }).unwrap().abs());
        }
    }
    let red_cooling = rows.iter().filter(|r| r.net_cooling() && r.delta_ps_inv > 0.0).count();
    let blue_cooling = rows.iter().filter(|r| r.net_cooling() && r.delta_ps_inv < 0.0).count();
    let unit = absorption_heating(1.0, &model);
    let quadratic = rows.iter().all(|r| r.heating_w == absorption_heating(r.omega_ps_inv, &model))
        && omegas.iter().all(|&w| ((absorption_heating(w, &model) / (unit * w * w)) - 1.0).abs() < 1e-14);
    let elapsed = start.elapsed();
    report(
        "10 (cooling map)",
        residual < STEADY_RESIDUAL_TOL && zero_current < ZERO_CURRENT_TOL && red_cooling > 0 && quadratic && elapsed < COOLING_BUDGET,
        format!(
            "max residual {residual:.1e}; |J| at γ_sp=0 ≤ {zero_current:.1e}; net cooling at {red_cooling} red-detuned points ({blue_cooling} blue); heating ∝ Ω²: {quadratic}; {:.2} s",
            elapsed.as_secs_f64()
        ),
    );
}
