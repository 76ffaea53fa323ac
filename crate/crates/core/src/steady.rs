//! Continuous-wave steady state with spontaneous emission, its phonon
//! cooling power, and the competing laser-absorption heating.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{rates_with_splitting, BathSpec};
use crate::error::{Error, Result};
use crate::model::{dressed_frame, DensityMatrix2, DriveFrame, Operator2};
use crate::units;

/// Diamond.
pub const DEFAULT_REFRACTIVE_INDEX: f64 = 2.4;

/// Column-stacked superoperator acting on vec(ρ) = (ρ₀₀, ρ₁₀, ρ₀₁, ρ₁₁).
pub type Superoperator = Matrix4<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CWDriveSpec {
    pub delta: f64,
    pub omega: f64,
    pub bath: BathSpec,
    /// ps⁻¹.
    pub gamma_sp: f64,
}

impl CWDriveSpec {
    pub fn validate(&self) -> Result<()> {
        DriveFrame::new(self.delta, self.omega)?;
        if !(self.gamma_sp >= 0.0) || !self.gamma_sp.is_finite() {
            return Err(Error::invalid("gamma_sp", "must be non-negative"));
        }
        Ok(())
    }

    pub fn frame(&self) -> DriveFrame {
        DriveFrame { delta: self.delta, omega: self.omega }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorptionModel {
    pub dipole_debye: f64,
    /// Emitter density over host absorption coefficient, m⁻².
    pub density_over_absorption_m2: f64,
    #[serde(default = "default_refractive_index")]
    pub refractive_index: f64,
}

fn default_refractive_index() -> f64 {
    DEFAULT_REFRACTIVE_INDEX
}

impl AbsorptionModel {
    /// Silicon vacancy in diamond.
    pub fn siv_default() -> Self {
        Self { dipole_debye: 14.3, density_over_absorption_m2: 1.47e22, refractive_index: DEFAULT_REFRACTIVE_INDEX }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dipole_debye", self.dipole_debye),
            ("density_over_absorption_m2", self.density_over_absorption_m2),
            ("refractive_index", self.refractive_index),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        Ok(())
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// vec(A X B) = (Bᵀ ⊗ A) vec(X).
fn sandwich(a: &Operator2, b: &Operator2) -> Superoperator {
    b.transpose().kronecker(a)
}

/// γ(c X c† − ½{c†c, X}).
fn dissipator(op: &Operator2, rate: f64) -> Superoperator {
    let id = Operator2::identity();
    let cdc = op.adjoint() * op;
    (sandwich(op, &op.adjoint()) - (sandwich(&cdc, &id) + sandwich(&id, &cdc)) * c(0.5)) * c(rate)
}

/// Generator of the continuous-wave master equation, including radiative
/// decay γ_sp of |1⟩.
pub fn liouvillian(spec: &CWDriveSpec) -> Superoperator {
    let frame = spec.frame();
    let h = frame.hamiltonian();
    let id = Operator2::identity();
    let i = Complex64::new(0.0, 1.0);
    let mut l = (sandwich(&h, &id) - sandwich(&id, &h)) * (-i);

    let dressed = dressed_frame(frame);
    let rates = rates_with_splitting(frame.omega, dressed.lambda, &spec.bath);
    if !dressed.degenerate {
        l += dissipator(&dressed.jump_up(), rates.absorption);
        l += dissipator(&dressed.jump_down(), rates.emission);
    }
    if spec.gamma_sp > 0.0 {
        let lower = Operator2::new(c(0.0), c(1.0), c(0.0), c(0.0));
        l += dissipator(&lower, spec.gamma_sp);
    }
    l
}

pub fn vectorize(rho: &Operator2) -> Vector4<Complex64> {
    Vector4::new(rho[(0, 0)], rho[(1, 0)], rho[(0, 1)], rho[(1, 1)])
}

pub fn unvectorize(v: &Vector4<Complex64>) -> Operator2 {
    Operator2::new(v[0], v[2], v[1], v[3])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub rho: DensityMatrix2,
    /// ‖𝓛 vec(ρ)‖.
    pub residual: f64,
}

/// Relative singular-value threshold separating the null space.
const NULL_TOL: f64 = 1e-10;

/// Unique trace-one null vector of the generator.
pub fn steady_state(spec: &CWDriveSpec) -> Result<SteadyState> {
    spec.validate()?;
    let l = liouvillian(spec);

    let singular = l.singular_values();
    let largest = singular.max();
    let null_dim = singular.iter().filter(|s| **s <= NULL_TOL * largest.max(1e-300)).count();
    if null_dim != 1 {
        return Err(Error::NoUniqueSteadyState { dimension: null_dim });
    }

    // the trace row replaces a redundant equation (the rows sum to zero on
    // the trace functional)
    let mut a = l;
    let trace_row = [c(1.0), c(0.0), c(0.0), c(1.0)];
    for (j, t) in trace_row.iter().enumerate() {
        a[(0, j)] = *t;
    }
    let b = Vector4::new(c(1.0), c(0.0), c(0.0), c(0.0));
    let v = a.lu().solve(&b).ok_or(Error::NoUniqueSteadyState { dimension: 0 })?;

    let m = unvectorize(&v);
    let m = (m + m.adjoint()) * c(0.5);
    let residual = (l * vectorize(&m)).norm();
    Ok(SteadyState { rho: DensityMatrix2::from_matrix_unchecked(m), residual })
}

/// Steady phonon heat current Λ(γ_a p₋ − γ_e p₊), ps⁻², phonons → emitter
/// positive.
pub fn cooling_power(spec: &CWDriveSpec) -> Result<f64> {
    let ss = steady_state(spec)?;
    Ok(current_at(spec, &ss.rho))
}

fn current_at(spec: &CWDriveSpec, rho: &DensityMatrix2) -> f64 {
    let dressed = dressed_frame(spec.frame());
    if dressed.degenerate {
        return 0.0;
    }
    let rates = rates_with_splitting(spec.omega, dressed.lambda, &spec.bath);
    let (p_plus, p_minus) = dressed.populations(rho);
    dressed.lambda * (rates.absorption * p_minus - rates.emission * p_plus)
}

/// Absorbed laser power per emitter, W: the host absorbs I·α per unit
/// volume, shared among ρ emitters per unit volume, with the intensity
/// I = ½ c ε₀ n_r E² at field E = ħΩ/d.
pub fn absorption_heating(omega: f64, model: &AbsorptionModel) -> f64 {
    let dipole = model.dipole_debye * units::DEBYE_C_M;
    let field = units::HBAR_J_S * units::ps_inv_to_s_inv(omega) / dipole;
    let intensity = 0.5 * units::SPEED_OF_LIGHT * units::EPSILON_0 * model.refractive_index * field * field;
    intensity / model.density_over_absorption_m2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoolingRow {
    pub delta_ps_inv: f64,
    pub omega_ps_inv: f64,
    #[serde(rename = "cooling_W")]
    pub cooling_w: f64,
    #[serde(rename = "heating_W")]
    pub heating_w: f64,
    #[serde(rename = "net_W")]
    pub net_w: f64,
    #[serde(skip)]
    pub residual: f64,
}

impl CoolingRow {
    pub fn net_cooling(&self) -> bool {
        self.net_w > 0.0
    }
}

/// Cooling, heating and net power over the (Δ, Ω) grid, Δ-major.
pub fn net_cooling_map(deltas: &[f64], omegas: &[f64], base: &CWDriveSpec, model: &AbsorptionModel) -> Result<Vec<CoolingRow>> {
    model.validate()?;
    let points: Vec<(f64, f64)> = deltas.iter().flat_map(|&d| omegas.iter().map(move |&o| (d, o))).collect();
    points
        .par_iter()
        .map(|&(delta, omega)| {
            let spec = CWDriveSpec { delta, omega, ..*base };
            let ss = steady_state(&spec)?;
            let cooling_w = units::power_ps2_to_watts(current_at(&spec, &ss.rho));
            let heating_w = absorption_heating(omega, model);
            Ok(CoolingRow {
                delta_ps_inv: delta,
                omega_ps_inv: omega,
                cooling_w,
                heating_w,
                net_w: cooling_w - heating_w,
                residual: ss.residual,
            })
        })
        .collect()
}

/// Number of grid points with net cooling.
pub fn net_cooling_count(rows: &[CoolingRow]) -> usize {
    rows.iter().filter(|r| r.net_cooling()).count()
}
