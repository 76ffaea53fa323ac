//! Heat, entropy and engine efficiency along a trajectory.
//!
//! Heat is counted positive when it flows from the phonons into the
//! emitter. Temperatures passed to these functions are k_B T / ħ in ps⁻¹
//! unless the name says kelvin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{shannon, von_neumann_entropy};
use crate::propagator::{TrajectoryRecord, TrajectoryRow};
use crate::units;

/// Λ(γ_a p₋ − γ_e p₊) for one sample, ps⁻².
pub fn heat_current(row: &TrajectoryRow) -> f64 {
    row.lambda * (row.gamma_a * row.p_minus - row.gamma_e * row.p_plus)
}

/// Total heat absorbed from the phonons over the trajectory, ps⁻¹.
///
/// The current is integrated alongside the state by the propagator, so this
/// reads the accumulated value rather than re-integrating sampled rows.
pub fn integrated_heat(traj: &TrajectoryRecord) -> f64 {
    traj.last().cumulative_heat - traj.first().cumulative_heat
}

/// Trapezoidal quadrature of the sampled current; coarser than
/// [`integrated_heat`] and used as a cross-check.
pub fn trapezoid_heat(traj: &TrajectoryRecord) -> f64 {
    traj.rows
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (heat_current(&w[0]) + heat_current(&w[1])))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TsRow {
    pub t: f64,
    /// Dressed-population temperature, K. Infinite when p₊ = p₋.
    pub t_eff_kelvin: f64,
    /// Von Neumann entropy of ρ, k_B.
    pub entropy: f64,
    /// Entropy of the dressed populations alone, k_B.
    pub diagonal_entropy: f64,
}

pub fn ts_trajectory(traj: &TrajectoryRecord) -> Vec<TsRow> {
    traj.rows
        .iter()
        .map(|r| TsRow {
            t: r.t,
            t_eff_kelvin: r.t_eff_kelvin,
            entropy: r.entropy,
            diagonal_entropy: shannon(&[r.p_plus, r.p_minus]),
        })
        .collect()
}

/// Change of the emitter's von Neumann entropy over the trajectory.
pub fn entropy_change(traj: &TrajectoryRecord) -> f64 {
    von_neumann_entropy(&traj.last().rho) - von_neumann_entropy(&traj.first().rho)
}

/// Σ = ΔS − Q / T_h in units of k_B, with `hot_temperature` in ps⁻¹.
pub fn entropy_production(traj: &TrajectoryRecord, hot_temperature: f64) -> f64 {
    let heat = integrated_heat(traj);
    if heat == 0.0 {
        return entropy_change(traj);
    }
    entropy_change(traj) - heat / hot_temperature
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineSpec {
    pub hot_kelvin: f64,
    pub cold_kelvin: f64,
}

impl EngineSpec {
    pub fn new(hot_kelvin: f64, cold_kelvin: f64) -> Result<Self> {
        if !(cold_kelvin > 0.0 && cold_kelvin < hot_kelvin) || !hot_kelvin.is_finite() {
            return Err(Error::invalid("engine", "requires 0 < cold_T < hot_T"));
        }
        Ok(Self { hot_kelvin, cold_kelvin })
    }

    pub fn carnot(&self) -> f64 {
        1.0 - self.cold_kelvin / self.hot_kelvin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Efficiency {
    pub eta: f64,
    pub carnot: f64,
    pub eta_over_carnot: f64,
    pub heat_absorbed: f64,
    pub entropy_change: f64,
}

/// Efficiency of the cycle whose hot stroke is the driven trajectory and
/// which closes reversibly against the cold bath: η = 1 − T_c ΔS / Q_h.
pub fn engine_efficiency(traj: &TrajectoryRecord, engine: &EngineSpec) -> Result<Efficiency> {
    let heat = integrated_heat(traj);
    if !(heat > 0.0) {
        return Err(Error::NotHeatAbsorbing { heat });
    }
    let ds = entropy_change(traj);
    Ok(efficiency_from(heat, ds, engine))
}

pub fn efficiency_from(heat: f64, entropy_change: f64, engine: &EngineSpec) -> Efficiency {
    let cold = units::kelvin_to_angular_rate(engine.cold_kelvin);
    let eta = 1.0 - cold * entropy_change / heat;
    let carnot = engine.carnot();
    Efficiency { eta, carnot, eta_over_carnot: eta / carnot, heat_absorbed: heat, entropy_change }
}

/// Criteria for an approximately isothermal stretch of a T–S trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauCriteria {
    pub min_duration: f64,
    /// Largest allowed (max − min) / max over the interval.
    pub max_relative_variation: f64,
    /// T_eff must lie strictly below this temperature, K.
    pub below_kelvin: f64,
    /// Optional lower bound on T_eff, K.
    pub above_kelvin: Option<f64>,
}

/// Finds the first interval `[t0, t1]` with `t1 − t0 ≥ min_duration` over
/// which every sample satisfies the criteria. Any longer qualifying interval
/// contains a minimal one, so only minimal windows are scanned.
pub fn find_plateau(rows: &[TsRow], criteria: &PlateauCriteria) -> Option<(f64, f64)> {
    let ok = |r: &TsRow| {
        r.t_eff_kelvin.is_finite()
            && r.t_eff_kelvin > 0.0
            && r.t_eff_kelvin < criteria.below_kelvin
            && criteria.above_kelvin.map_or(true, |lo| r.t_eff_kelvin >= lo)
    };
    for start in 0..rows.len() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for end in start..rows.len() {
            let r = &rows[end];
            if !ok(r) {
                break;
            }
            lo = lo.min(r.t_eff_kelvin);
            hi = hi.max(r.t_eff_kelvin);
            if (hi - lo) / hi >= criteria.max_relative_variation {
                break;
            }
            if r.t - rows[start].t >= criteria.min_duration {
                return Some((rows[start].t, r.t));
            }
        }
    }
    None
}
