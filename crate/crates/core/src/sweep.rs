//! Parameter sweeps over chirp and pulse area.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::model::DensityMatrix2;
use crate::propagator::{evolve, EvolutionSpec};
use crate::pulse::ChirpedGaussianSpec;
use crate::thermo::{efficiency_from, entropy_change, integrated_heat, EngineSpec};

/// Evenly spaced values including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(start: f64, stop: f64, points: usize) -> Self {
        Self { start, stop, points }
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        if self.points == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::invalid(name, "axis needs finite ends and at least one point"));
        }
        if self.points > 1 && self.start == self.stop {
            return Err(Error::invalid(name, "axis with several points needs distinct ends"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| if i + 1 == self.points { self.stop } else { self.start + step * i as f64 }).collect()
    }
}

/// Fixed pulse parameters of a (a, Θ₀) sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub tau0: f64,
    pub delta0: f64,
    pub bath: BathSpec,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl SweepSpec {
    pub fn new(tau0: f64, delta0: f64, bath: BathSpec) -> Self {
        Self { tau0, delta0, bath, rel_tol: EvolutionSpec::DEFAULT_REL_TOL, abs_tol: EvolutionSpec::DEFAULT_ABS_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub chirp_a: f64,
    pub theta0: f64,
    /// Phonons → emitter, ps⁻¹.
    pub heat: Option<f64>,
    pub entropy_change: Option<f64>,
    /// ΔS − Q/T_h, k_B.
    pub entropy_production: Option<f64>,
    /// Present when an engine was given and the stroke absorbs heat.
    pub eta_over_carnot: Option<f64>,
    pub error: Option<String>,
}

fn evaluate(spec: &SweepSpec, chirp_a: f64, theta0: f64, engine: Option<&EngineSpec>) -> SweepPoint {
    let run = || -> Result<(f64, f64)> {
        let pulse = ChirpedGaussianSpec::new(spec.tau0, theta0, chirp_a, spec.delta0)?;
        let evo = EvolutionSpec::for_pulse(pulse, spec.bath)?.with_tolerances(spec.rel_tol, spec.abs_tol).with_samples(2);
        let traj = evolve(&evo, &DensityMatrix2::ground())?;
        Ok((integrated_heat(&traj), entropy_change(&traj)))
    };
    match run() {
        Ok((heat, ds)) => SweepPoint {
            chirp_a,
            theta0,
            heat: Some(heat),
            entropy_change: Some(ds),
            entropy_production: Some(ds - heat / spec.bath.temperature),
            eta_over_carnot: engine.filter(|_| heat > 0.0).map(|e| efficiency_from(heat, ds, e).eta_over_carnot),
            error: None,
        },
        Err(e) => SweepPoint {
            chirp_a,
            theta0,
            heat: None,
            entropy_change: None,
            entropy_production: None,
            eta_over_carnot: None,
            error: Some(e.to_string()),
        },
    }
}

/// Evaluates every (a, Θ₀) pair, Θ₀-major. Failed points carry their error
/// and do not stop the sweep.
pub fn chirp_area_sweep(spec: &SweepSpec, chirps: &[f64], areas: &[f64], engine: Option<&EngineSpec>) -> Vec<SweepPoint> {
    let grid: Vec<(f64, f64)> = areas.iter().flat_map(|&th| chirps.iter().map(move |&a| (a, th))).collect();
    grid.par_iter().map(|&(a, th)| evaluate(spec, a, th, engine)).collect()
}

pub fn failures(points: &[SweepPoint]) -> impl Iterator<Item = &SweepPoint> {
    points.iter().filter(|p| p.error.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::SpectralDensity;
    use std::f64::consts::PI;

    fn bath() -> BathSpec {
        BathSpec::from_kelvin(20.0, SpectralDensity::exciton_default()).unwrap()
    }

    #[test]
    fn axis_values() {
        assert_eq!(Axis::new(-20.0, 20.0, 5).values(), vec![-20.0, -10.0, 0.0, 10.0, 20.0]);
        assert_eq!(Axis::new(1.0, 1.0, 1).values(), vec![1.0]);
        assert!(Axis::new(0.0, 1.0, 0).validate("x").is_err());
    }

    #[test]
    fn zero_area_row_has_no_heat() {
        let pts = chirp_area_sweep(&SweepSpec::new(2.0, 0.0, bath()), &[-5.0, 0.0, 5.0], &[0.0], None);
        assert!(pts.iter().all(|p| p.heat == Some(0.0)));
    }

    #[test]
    fn order_and_determinism() {
        let spec = SweepSpec::new(2.0, 0.0, bath());
        let engine = EngineSpec::new(20.0, 2.7).unwrap();
        let a = chirp_area_sweep(&spec, &[-5.0, 5.0], &[PI, 3.0 * PI], Some(&engine));
        let b = chirp_area_sweep(&spec, &[-5.0, 5.0], &[PI, 3.0 * PI], Some(&engine));
        assert_eq!(a, b);
        assert_eq!((a[1].chirp_a, a[1].theta0), (5.0, PI));
        assert!(a[0].heat.unwrap() < 0.0 && a[0].eta_over_carnot.is_none());
        assert!(a[1].heat.unwrap() > 0.0 && a[1].eta_over_carnot.is_some());
    }

    #[test]
    fn failed_points_are_recorded() {
        let pts = chirp_area_sweep(&SweepSpec::new(-1.0, 0.0, bath()), &[1.0], &[PI], None);
        assert_eq!(failures(&pts).count(), 1);
    }
}
