//! Acoustic-phonon bath: spectral densities, Bose occupation and the
//! dressed-state absorption/emission rates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dressed_splitting, DriveFrame, LAMBDA_EPS};
use crate::units;

/// Occupation guard, ps⁻¹.
pub const ENERGY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralForm {
    /// A ω³ exp(−ω²/ω_c²)
    SuperOhmicGaussianCutoff,
    /// A ω³ exp(−ω/ω_c)
    SuperOhmicExponentialCutoff,
}

/// Super-ohmic phonon spectral density J(ω).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub form: SpectralForm,
    /// Coupling amplitude A, ps².
    pub amplitude: f64,
    /// Cutoff ω_c, ps⁻¹.
    pub cutoff: f64,
}

impl SpectralDensity {
    /// Deformation-potential coupling typical of InGaAs quantum dots.
    pub fn exciton_default() -> Self {
        Self { form: SpectralForm::SuperOhmicGaussianCutoff, amplitude: 0.027, cutoff: 2.2 }
    }

    /// Default for the silicon-vacancy two-level model.
    pub fn siv_default() -> Self {
        Self { form: SpectralForm::SuperOhmicExponentialCutoff, amplitude: 0.005, cutoff: 5.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::invalid("amplitude", "must be non-negative"));
        }
        if !(self.cutoff > 0.0) || !self.cutoff.is_finite() {
            return Err(Error::invalid("cutoff", "must be positive"));
        }
        Ok(())
    }
}

pub fn spectral_density_at(j: &SpectralDensity, energy: f64) -> f64 {
    if energy <= 0.0 {
        return 0.0;
    }
    let cubic = j.amplitude * energy.powi(3);
    match j.form {
        SpectralForm::SuperOhmicGaussianCutoff => cubic * (-(energy / j.cutoff).powi(2)).exp(),
        SpectralForm::SuperOhmicExponentialCutoff => cubic * (-energy / j.cutoff).exp(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    /// k_B T / ħ in ps⁻¹.
    pub temperature: f64,
    pub spectral_density: SpectralDensity,
}

impl BathSpec {
    pub fn from_kelvin(kelvin: f64, spectral_density: SpectralDensity) -> Result<Self> {
        if !(kelvin >= 0.0) || !kelvin.is_finite() {
            return Err(Error::invalid("temperature", "must be a non-negative number of kelvin"));
        }
        spectral_density.validate()?;
        Ok(Self { temperature: units::kelvin_to_angular_rate(kelvin), spectral_density })
    }

    pub fn kelvin(&self) -> f64 {
        units::angular_rate_to_kelvin(self.temperature)
    }

    /// Same spectral density with all couplings switched off.
    pub fn uncoupled(&self) -> Self {
        let mut b = *self;
        b.spectral_density.amplitude = 0.0;
        b
    }
}

/// Bose–Einstein occupation 1 / (e^{E/k_BT} − 1).
pub fn bose_occupation(energy: f64, bath: &BathSpec) -> Result<f64> {
    if bath.temperature <= 0.0 {
        return Ok(0.0);
    }
    if energy <= ENERGY_EPS {
        return Err(Error::ZeroEnergyOccupation { energy });
    }
    Ok(1.0 / (energy / bath.temperature).exp_m1())
}

/// Absorption and emission rates between the dressed states, ps⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhononRates {
    pub absorption: f64,
    pub emission: f64,
}

/// γ_a = πΩ² n_B(Λ) J(Λ) / (2Λ²), γ_e likewise with n_B + 1.
#[inline]
pub fn phonon_rates(frame: DriveFrame, bath: &BathSpec) -> PhononRates {
    let lambda = dressed_splitting(frame);
    rates_with_splitting(frame.omega, lambda, bath)
}

#[inline]
pub(crate) fn rates_with_splitting(omega: f64, lambda: f64, bath: &BathSpec) -> PhononRates {
    if lambda < LAMBDA_EPS || omega == 0.0 {
        return PhononRates::default();
    }
    let j = spectral_density_at(&bath.spectral_density, lambda);
    let prefactor = PI * omega * omega * j / (2.0 * lambda * lambda);
    let n = if bath.temperature > 0.0 { 1.0 / (lambda / bath.temperature).exp_m1() } else { 0.0 };
    PhononRates { absorption: prefactor * n, emission: prefactor * (n + 1.0) }
}
