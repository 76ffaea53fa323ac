//! Quick invariant suite behind the `selftest` command.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::bath::{phonon_rates, BathSpec, SpectralDensity};
use crate::fcs::{heat_distribution_for, CountingGrid};
use crate::model::{dressed_splitting, DensityMatrix2, DriveFrame};
use crate::propagator::{evolve, evolve_counting, EvolutionSpec};
use crate::pulse::ChirpedGaussianSpec;
use crate::steady::{absorption_heating, cooling_power, steady_state, AbsorptionModel, CWDriveSpec};
use crate::thermo::integrated_heat;
use crate::unravel::trajectory_rng;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn random_pulse(rng: &mut impl Rng) -> (ChirpedGaussianSpec, BathSpec) {
    let pulse = ChirpedGaussianSpec::new(
        rng.gen_range(0.5..3.0),
        rng.gen_range(0.0..6.0 * PI),
        rng.gen_range(-10.0..10.0),
        rng.gen_range(-3.0..3.0),
    )
    .expect("sampled ranges are valid");
    let bath = BathSpec::from_kelvin(rng.gen_range(4.0..40.0), SpectralDensity::exciton_default()).expect("valid bath");
    (pulse, bath)
}

fn detailed_balance(seed: u64) -> Check {
    let mut rng = trajectory_rng(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let frame = DriveFrame { delta: rng.gen_range(-5.0..5.0), omega: rng.gen_range(0.01..5.0) };
        let bath = BathSpec::from_kelvin(rng.gen_range(4.0..50.0), SpectralDensity::exciton_default()).expect("valid bath");
        let r = phonon_rates(frame, &bath);
        if r.emission > 1e-300 {
            let expected = (-dressed_splitting(frame) / bath.temperature).exp();
            worst = worst.max((r.absorption / r.emission - expected).abs() / expected);
        }
    }
    check("detailed_balance", worst < 1e-12, format!("max relative error {worst:.2e}"))
}

fn conservation(seed: u64) -> Check {
    let mut rng = trajectory_rng(seed, 1);
    let (mut trace_err, mut min_eig, mut g0_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..8 {
        let (pulse, bath) = random_pulse(&mut rng);
        let spec = match EvolutionSpec::for_pulse(pulse, bath) {
            Ok(s) => s.with_samples(101),
            Err(e) => return check("conservation", false, e.to_string()),
        };
        match (evolve(&spec, &DensityMatrix2::ground()), evolve_counting(&spec, &DensityMatrix2::ground(), 0.0)) {
            (Ok(traj), Ok(g0)) => {
                for row in &traj.rows {
                    trace_err = trace_err.max((row.rho.trace() - 1.0).abs());
                    min_eig = min_eig.min(row.rho.min_eigenvalue());
                }
                g0_err = g0_err.max((g0 - 1.0).norm());
            }
            (Err(e), _) | (_, Err(e)) => return check("conservation", false, e.to_string()),
        }
    }
    check(
        "conservation",
        trace_err < 1e-9 && min_eig > -1e-9 && g0_err < 1e-9,
        format!("trace error {trace_err:.2e}, min eigenvalue {min_eig:.2e}, |G(0) - 1| {g0_err:.2e}"),
    )
}

fn first_moment() -> Check {
    let bath = BathSpec::from_kelvin(20.0, SpectralDensity::exciton_default()).expect("valid bath");
    let run = || -> crate::Result<(f64, f64)> {
        let pulse = ChirpedGaussianSpec::new(2.0, 4.0 * PI, 5.0, 0.0)?;
        let spec = EvolutionSpec::for_pulse(pulse, bath)?;
        let grid = CountingGrid::default_for(&spec);
        let dist = heat_distribution_for(&spec, &DensityMatrix2::ground(), &grid)?;
        Ok((dist.mean, integrated_heat(&evolve(&spec, &DensityMatrix2::ground())?)))
    };
    match run() {
        Ok((fcs, current)) => {
            let rel = (fcs - current).abs() / current.abs();
            check("fcs_first_moment", rel < 1e-3, format!("distribution mean {fcs:.8}, integrated current {current:.8}"))
        }
        Err(e) => check("fcs_first_moment", false, e.to_string()),
    }
}

fn arp() -> Check {
    let run = || -> crate::Result<f64> {
        let pulse = ChirpedGaussianSpec::new(2.0, 6.0 * PI, 20.0, 0.0)?;
        let bath = BathSpec::from_kelvin(0.0, SpectralDensity::exciton_default())?;
        let traj = evolve(&EvolutionSpec::for_pulse(pulse, bath)?.with_samples(2), &DensityMatrix2::ground())?;
        Ok(traj.last().rho.population_excited())
    };
    match run() {
        Ok(p1) => check("adiabatic_rapid_passage", p1 > 0.99, format!("final excited population {p1:.6}")),
        Err(e) => check("adiabatic_rapid_passage", false, e.to_string()),
    }
}

fn steady() -> Check {
    let bath = BathSpec::from_kelvin(20.0, SpectralDensity::siv_default()).expect("valid bath");
    let mut worst: f64 = 0.0;
    let mut thermal_current: f64 = 0.0;
    for i in 0..21 {
        for j in 1..=21 {
            let (delta, omega) = (-5.0 + 0.5 * i as f64, 5.0 * j as f64 / 21.0);
            let cw = CWDriveSpec { delta, omega, bath, gamma_sp: 1e-3 };
            match steady_state(&cw) {
                Ok(ss) => worst = worst.max(ss.residual),
                Err(e) => return check("steady_state", false, e.to_string()),
            }
            match cooling_power(&CWDriveSpec { gamma_sp: 0.0, ..cw }) {
                Ok(p) => thermal_current = thermal_current.max(p.abs()),
                Err(e) => return check("steady_state", false, e.to_string()),
            }
        }
    }
    check(
        "steady_state",
        worst < 1e-10 && thermal_current < 1e-12,
        format!("max residual {worst:.2e}, max current without decay {thermal_current:.2e}"),
    )
}

fn heating_law() -> Check {
    let m = AbsorptionModel::siv_default();
    let one = absorption_heating(1.0, &m);
    let ok = (one - 1.059_143_966_724e-12).abs() < 1e-10 * one && absorption_heating(2.0, &m) == 4.0 * one;
    check("absorption_heating", ok, format!("P(Ω = 1 ps⁻¹) = {one:.6e} W"))
}

pub fn run_selftest(seed: u64) -> Vec<Check> {
    vec![detailed_balance(seed), conservation(seed), first_moment(), arp(), steady(), heating_law()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes() {
        for c in run_selftest(1) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
