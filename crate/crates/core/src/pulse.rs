//! Linearly-chirped Gaussian pulses.
//!
//! A bandwidth-limited Gaussian of duration τ₀ and area Θ₀ receives the
//! quadratic spectral phase a(ω − ω₀)²/2. The result is again Gaussian in
//! time with stretched duration τ = √(τ₀² + a²/τ₀²), a linear frequency sweep
//! ω(t) = ω₀ + α t with α = a / (τ₀⁴ + a²), and peak Rabi frequency
//! Θ₀ / √(2π τ₀ τ). Positive `a` sweeps the laser frequency upwards, so the
//! detuning Δ(t) = δ − α t decreases through the pulse.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dressed_splitting, DriveFrame};

/// Pulse definition in terms of the bandwidth-limited parent pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpedGaussianSpec {
    /// Bandwidth-limited duration τ₀, ps.
    pub tau0: f64,
    /// Area Θ₀ of the bandwidth-limited pulse, rad.
    pub theta0: f64,
    /// Spectral chirp a, ps².
    pub chirp_a: f64,
    /// Center detuning δ = E_x − ω₀, ps⁻¹.
    pub delta0: f64,
    /// Time of the pulse maximum, ps.
    pub t_center: f64,
}

impl ChirpedGaussianSpec {
    pub fn new(tau0: f64, theta0: f64, chirp_a: f64, delta0: f64) -> Result<Self> {
        let spec = Self { tau0, theta0, chirp_a, delta0, t_center: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0) || !self.tau0.is_finite() {
            return Err(Error::invalid("tau0", "must be positive"));
        }
        if !(self.theta0 >= 0.0) || !self.theta0.is_finite() {
            return Err(Error::invalid("theta0", "must be non-negative"));
        }
        if !self.chirp_a.is_finite() || !self.delta0.is_finite() || !self.t_center.is_finite() {
            return Err(Error::invalid("pulse", "chirp, detuning and center must be finite"));
        }
        Ok(())
    }

    pub fn with_center(mut self, t_center: f64) -> Self {
        self.t_center = t_center;
        self
    }
}

/// Time-domain parameters of the chirped pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChirpedPulseParams {
    /// Stretched duration τ, ps.
    pub tau: f64,
    /// Temporal chirp rate α, ps⁻².
    pub alpha: f64,
    /// Peak Rabi frequency, ps⁻¹.
    pub peak_rabi: f64,
}

pub fn chirp_transform(spec: &ChirpedGaussianSpec) -> ChirpedPulseParams {
    let tau0 = spec.tau0;
    let a = spec.chirp_a;
    let tau = (tau0 * tau0 + a * a / (tau0 * tau0)).sqrt();
    let alpha = a / (tau0.powi(4) + a * a);
    let peak_rabi = spec.theta0 / (2.0 * PI * tau0 * tau).sqrt();
    ChirpedPulseParams { tau, alpha, peak_rabi }
}

pub fn rabi_at(spec: &ChirpedGaussianSpec, t: f64) -> f64 {
    ChirpedPulse::new(*spec).rabi_at(t)
}

pub fn detuning_at(spec: &ChirpedGaussianSpec, t: f64) -> f64 {
    ChirpedPulse::new(*spec).detuning_at(t)
}

/// A spec together with its precomputed time-domain parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpedPulse {
    pub spec: ChirpedGaussianSpec,
    pub params: ChirpedPulseParams,
}

impl ChirpedPulse {
    pub fn new(spec: ChirpedGaussianSpec) -> Self {
        Self { spec, params: chirp_transform(&spec) }
    }

    pub fn rabi_at(&self, t: f64) -> f64 {
        let x = (t - self.spec.t_center) / self.params.tau;
        self.params.peak_rabi * (-0.5 * x * x).exp()
    }

    pub fn detuning_at(&self, t: f64) -> f64 {
        self.spec.delta0 - self.params.alpha * (t - self.spec.t_center)
    }

    pub fn frame_at(&self, t: f64) -> DriveFrame {
        DriveFrame { delta: self.detuning_at(t), omega: self.rabi_at(t) }
    }

    /// Symmetric window `t_center ± half_widths · τ`.
    pub fn window(&self, half_widths: f64) -> (f64, f64) {
        let h = half_widths * self.params.tau;
        (self.spec.t_center - h, self.spec.t_center + h)
    }
}

/// Default integration half-window in units of τ.
pub const DEFAULT_WINDOW_TAU: f64 = 6.0;

/// Time-dependent drive seen by the emitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    Chirped(ChirpedPulse),
    /// Continuous-wave drive with fixed (Δ, Ω).
    Constant(DriveFrame),
}

impl Drive {
    pub fn chirped(spec: ChirpedGaussianSpec) -> Self {
        Drive::Chirped(ChirpedPulse::new(spec))
    }

    #[inline]
    pub fn frame_at(&self, t: f64) -> DriveFrame {
        match self {
            Drive::Chirped(p) => p.frame_at(t),
            Drive::Constant(f) => *f,
        }
    }

    /// Largest dressed splitting over `[t0, t1]`, sampled on `n` points.
    pub fn max_splitting(&self, t0: f64, t1: f64, n: usize) -> f64 {
        let n = n.max(2);
        (0..n)
            .map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64)
            .map(|t| dressed_splitting(self.frame_at(t)))
            .fold(0.0, f64::max)
    }
}

/// One row of the pulse preview table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreviewRow {
    pub t: f64,
    pub omega: f64,
    pub delta: f64,
    pub lambda: f64,
}

pub fn preview(pulse: &ChirpedPulse, t_start: f64, t_end: f64, samples: usize) -> Vec<PreviewRow> {
    let samples = samples.max(2);
    (0..samples)
        .map(|i| {
            let t = t_start + (t_end - t_start) * i as f64 / (samples - 1) as f64;
            let frame = pulse.frame_at(t);
            PreviewRow { t, omega: frame.omega, delta: frame.delta, lambda: dressed_splitting(frame) }
        })
        .collect()
}

/// Complex Rabi envelope built by applying the spectral chirp numerically.
#[derive(Debug, Clone)]
pub struct SpectralEnvelope {
    pub dt: f64,
    pub times: Vec<f64>,
    pub field: Vec<Complex64>,
    /// Index of the sample at `t_center`.
    pub center_index: usize,
}

impl SpectralEnvelope {
    pub fn energy(&self) -> f64 {
        self.field.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dt
    }

    /// Duration τ recovered from the second moment of |E|², which is τ²/2
    /// for a Gaussian envelope exp(−t²/2τ²).
    pub fn fitted_duration(&self) -> f64 {
        let tc = self.times[self.center_index];
        let (mut w, mut m2) = (0.0, 0.0);
        for (t, z) in self.times.iter().zip(&self.field) {
            let p = z.norm_sqr();
            w += p;
            m2 += p * (t - tc).powi(2);
        }
        (2.0 * m2 / w).sqrt()
    }

    pub fn peak_modulus(&self) -> f64 {
        self.field[self.center_index].norm()
    }

    /// Instantaneous-frequency slope at the peak, from the second difference
    /// of the envelope phase. The carrier convention is Re[E e^{−iω₀t}], so
    /// ω(t) − ω₀ = −d arg E / dt.
    pub fn chirp_rate_at_peak(&self) -> f64 {
        let i = self.center_index;
        let forward = (self.field[i + 1] * self.field[i].conj()).arg();
        let backward = (self.field[i] * self.field[i - 1].conj()).arg();
        -(forward - backward) / (self.dt * self.dt)
    }
}

/// Builds the chirped envelope by Fourier synthesis: the bandwidth-limited
/// Gaussian is transformed, multiplied by exp(i a ω²/2) and transformed back.
pub fn synthesize_spectrally(
    spec: &ChirpedGaussianSpec,
    n_samples: usize,
    time_window: f64,
) -> Result<SpectralEnvelope> {
    spec.validate()?;
    if n_samples < 1024 || !n_samples.is_power_of_two() {
        return Err(Error::invalid("n_samples", "must be a power of two >= 1024"));
    }
    let params = chirp_transform(spec);
    let required = 8.0 * params.tau;
    if !(time_window >= required) {
        return Err(Error::WindowTooSmall { window: time_window, required });
    }
    let dt = time_window / n_samples as f64;
    let nyquist = PI / dt;
    // bandwidth-limited spectrum exp(−ω²τ₀²/2) must vanish before Nyquist
    if nyquist * spec.tau0 < 7.7 {
        return Err(Error::SpectrumUnderResolved(format!(
            "Nyquist {nyquist:.3} ps⁻¹ against spectral width {:.3} ps⁻¹",
            1.0 / spec.tau0
        )));
    }

    let center_index = n_samples / 2;
    let times: Vec<f64> = (0..n_samples)
        .map(|k| spec.t_center + (k as f64 - center_index as f64) * dt)
        .collect();
    let amplitude = spec.theta0 / ((2.0 * PI).sqrt() * spec.tau0);
    let mut field: Vec<Complex64> = times
        .iter()
        .map(|t| {
            let x = (t - spec.t_center) / spec.tau0;
            Complex64::new(amplitude * (-0.5 * x * x).exp(), 0.0)
        })
        .collect();

    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n_samples).process(&mut field);
    let dw = 2.0 * PI / (n_samples as f64 * dt);
    for (j, z) in field.iter_mut().enumerate() {
        let index = if j < n_samples / 2 { j as f64 } else { j as f64 - n_samples as f64 };
        let w = index * dw;
        *z *= Complex64::from_polar(1.0, 0.5 * spec.chirp_a * w * w);
    }
    planner.plan_fft_inverse(n_samples).process(&mut field);
    let scale = 1.0 / n_samples as f64;
    field.iter_mut().for_each(|z| *z *= scale);

    Ok(SpectralEnvelope { dt, times, field, center_index })
}
