//! Time integration of the dressed-state master equation and of its
//! counting-field deformation.
//!
//! The phonon dissipator is written with the superoperator
//! `𝓛(O)ρ = O†Oρ + ρO†O − 2OρO†` weighted by half the transition rate,
//!
//! ```text
//! dρ/dt = −i[H, ρ] − (γ_a/2) 𝓛(|+⟩⟨−|)ρ − (γ_e/2) 𝓛(|−⟩⟨+|)ρ − (γ_sp/2) 𝓛(|0⟩⟨1|)ρ
//! ```
//!
//! so that γ_a, γ_e and γ_sp are the transition rates themselves and the
//! mean heat current is exactly Λ(γ_a p₋ − γ_e p₊).
//!
//! In the deformed equation for ρ_u the sandwich term of the absorption
//! channel carries e^{−iuΛ(t)} and that of the emission channel e^{+iuΛ(t)},
//! so `Tr ρ_u = G(u) = ⟨e^{iu ΔE_bath}⟩`.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::bath::{rates_with_splitting, BathSpec, PhononRates};
use crate::error::{Error, Result};
use crate::model::{
    dressed_frame, effective_temperature, von_neumann_entropy, DensityMatrix2, DressedFrame, DriveFrame, Operator2,
};
use crate::ode::{self, IntegrationStats, StepControl};
use crate::pulse::{ChirpedGaussianSpec, ChirpedPulse, Drive, DEFAULT_WINDOW_TAU};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Everything needed to integrate one process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionSpec {
    pub drive: Drive,
    pub bath: BathSpec,
    /// Radiative decay rate |1⟩ → |0⟩, ps⁻¹. Zero for pulsed driving.
    pub gamma_sp: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Number of uniformly spaced output rows, including both end points.
    pub samples: usize,
}

impl EvolutionSpec {
    pub const DEFAULT_REL_TOL: f64 = 1e-10;
    pub const DEFAULT_ABS_TOL: f64 = 1e-12;
    pub const DEFAULT_SAMPLES: usize = 601;

    /// Pulse evolution over `t_center ± 6τ` with step cap τ/100.
    pub fn for_pulse(pulse: ChirpedGaussianSpec, bath: BathSpec) -> Result<Self> {
        Self::for_pulse_window(pulse, bath, DEFAULT_WINDOW_TAU)
    }

    pub fn for_pulse_window(pulse: ChirpedGaussianSpec, bath: BathSpec, half_widths: f64) -> Result<Self> {
        pulse.validate()?;
        let pulse = ChirpedPulse::new(pulse);
        let (t_start, t_end) = pulse.window(half_widths);
        let spec = Self {
            drive: Drive::Chirped(pulse),
            bath,
            gamma_sp: 0.0,
            t_start,
            t_end,
            rel_tol: Self::DEFAULT_REL_TOL,
            abs_tol: Self::DEFAULT_ABS_TOL,
            max_step: pulse.params.tau / 100.0,
            samples: Self::DEFAULT_SAMPLES,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Constant drive over `[0, duration]`.
    pub fn constant(frame: DriveFrame, bath: BathSpec, gamma_sp: f64, duration: f64) -> Result<Self> {
        let spec = Self {
            drive: Drive::Constant(frame),
            bath,
            gamma_sp,
            t_start: 0.0,
            t_end: duration,
            rel_tol: Self::DEFAULT_REL_TOL,
            abs_tol: Self::DEFAULT_ABS_TOL,
            max_step: (duration / 100.0).max(1e-3),
            samples: Self::DEFAULT_SAMPLES,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start < self.t_end) {
            return Err(Error::invalid("t_end", "must exceed t_start"));
        }
        for (name, tol) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(tol > 0.0 && tol <= 1e-2) {
                return Err(Error::invalid(name, "must lie in (0, 1e-2]"));
            }
        }
        if !(self.max_step > 0.0) {
            return Err(Error::invalid("max_step", "must be positive"));
        }
        if !(self.gamma_sp >= 0.0) {
            return Err(Error::invalid("gamma_sp", "must be non-negative"));
        }
        Ok(())
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn pulse(&self) -> Option<&ChirpedPulse> {
        match &self.drive {
            Drive::Chirped(p) => Some(p),
            Drive::Constant(_) => None,
        }
    }

    pub fn step_control(&self) -> StepControl {
        StepControl::new(self.rel_tol, self.abs_tol, self.max_step)
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.samples.max(2);
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.t_end
                } else {
                    self.t_start + (self.t_end - self.t_start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    /// Largest dressed splitting over the evolution window.
    pub fn max_splitting(&self) -> f64 {
        self.drive.max_splitting(self.t_start, self.t_end, 4001)
    }
}

/// Instantaneous quantities shared by all right-hand sides.
#[derive(Debug, Clone, Copy)]
pub struct InstantaneousGenerator {
    pub frame: DriveFrame,
    pub dressed: DressedFrame,
    pub rates: PhononRates,
    pub hamiltonian: Operator2,
    pub projector_plus: Operator2,
    pub projector_minus: Operator2,
    pub gamma_sp: f64,
}

impl InstantaneousGenerator {
    #[inline]
    pub fn at(spec: &EvolutionSpec, t: f64) -> Self {
        let frame = spec.drive.frame_at(t);
        let dressed = dressed_frame(frame);
        let rates = rates_with_splitting(frame.omega, dressed.lambda, &spec.bath);
        Self {
            frame,
            dressed,
            rates,
            hamiltonian: frame.hamiltonian(),
            projector_plus: dressed.projector_plus(),
            projector_minus: dressed.projector_minus(),
            gamma_sp: spec.gamma_sp,
        }
    }

    /// Heat current Λ(γ_a p₋ − γ_e p₊), phonons → emitter positive.
    #[inline]
    pub fn heat_current(&self, p_plus: f64, p_minus: f64) -> f64 {
        self.dressed.lambda * (self.rates.absorption * p_minus - self.rates.emission * p_plus)
    }

    /// Deformed generator applied to ρ_u; `u = 0` gives the physical one.
    #[inline]
    pub fn apply(&self, rho: &Operator2, u: f64) -> Operator2 {
        let mut d = (self.hamiltonian * rho - rho * self.hamiltonian) * (-I);
        let (ga, ge) = (self.rates.absorption, self.rates.emission);
        if !self.dressed.degenerate && (ga != 0.0 || ge != 0.0) {
            let pm = &self.projector_minus;
            let pp = &self.projector_plus;
            // O_a ρ O_a† = ⟨−|ρ|−⟩ P₊ and O_e ρ O_e† = ⟨+|ρ|+⟩ P₋
            let rho_mm = self.dressed.minus_element(rho);
            let rho_pp = self.dressed.plus_element(rho);
            let phase_a = if u == 0.0 { Complex64::new(1.0, 0.0) } else { Complex64::from_polar(1.0, -u * self.dressed.lambda) };
            let phase_e = phase_a.conj();
            if ga != 0.0 {
                d -= (pm * rho + rho * pm - pp * (rho_mm * phase_a * 2.0)) * Complex64::new(0.5 * ga, 0.0);
            }
            if ge != 0.0 {
                d -= (pp * rho + rho * pp - pm * (rho_pp * phase_e * 2.0)) * Complex64::new(0.5 * ge, 0.0);
            }
        }
        if self.gamma_sp > 0.0 {
            d += spontaneous_term(rho, self.gamma_sp);
        }
        d
    }
}

/// γ(σρσ† − ½{σ†σ, ρ}) for σ = |0⟩⟨1|.
#[inline]
fn spontaneous_term(rho: &Operator2, gamma: f64) -> Operator2 {
    let g = Complex64::new(gamma, 0.0);
    let half = Complex64::new(0.5 * gamma, 0.0);
    Matrix2::new(g * rho[(1, 1)], -half * rho[(0, 1)], -half * rho[(1, 0)], -g * rho[(1, 1)])
}

/// Literal superoperator 𝓛(O)ρ = O†Oρ + ρO†O − 2OρO†.
pub fn lindblad_superoperator(o: &Operator2, rho: &Operator2) -> Operator2 {
    let od = o.adjoint();
    let odo = od * o;
    odo * rho + rho * odo - o * rho * od * Complex64::new(2.0, 0.0)
}

pub fn lindblad_rhs(t: f64, rho: &DensityMatrix2, spec: &EvolutionSpec) -> Operator2 {
    InstantaneousGenerator::at(spec, t).apply(rho.matrix(), 0.0)
}

pub fn counting_rhs(t: f64, rho_u: &Operator2, spec: &EvolutionSpec, u: f64) -> Operator2 {
    InstantaneousGenerator::at(spec, t).apply(rho_u, u)
}

#[inline]
pub(crate) fn pack(m: &Operator2) -> [f64; 8] {
    [
        m[(0, 0)].re,
        m[(0, 0)].im,
        m[(0, 1)].re,
        m[(0, 1)].im,
        m[(1, 0)].re,
        m[(1, 0)].im,
        m[(1, 1)].re,
        m[(1, 1)].im,
    ]
}

#[inline]
pub(crate) fn unpack(y: &[f64]) -> Operator2 {
    Matrix2::new(
        Complex64::new(y[0], y[1]),
        Complex64::new(y[2], y[3]),
        Complex64::new(y[4], y[5]),
        Complex64::new(y[6], y[7]),
    )
}

/// One output row of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub rho: DensityMatrix2,
    pub p_plus: f64,
    pub p_minus: f64,
    pub lambda: f64,
    pub omega: f64,
    pub delta: f64,
    pub gamma_a: f64,
    pub gamma_e: f64,
    /// Heat current, phonons → emitter positive, ps⁻².
    pub heat_current: f64,
    /// Heat absorbed since `t_start`, ps⁻¹.
    pub cumulative_heat: f64,
    /// Von Neumann entropy, k_B.
    pub entropy: f64,
    /// Dressed-population temperature, K.
    pub t_eff_kelvin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub rows: Vec<TrajectoryRow>,
    pub stats: IntegrationStats,
}

impl TrajectoryRecord {
    pub fn first(&self) -> &TrajectoryRow {
        &self.rows[0]
    }

    pub fn last(&self) -> &TrajectoryRow {
        self.rows.last().expect("trajectory has at least two rows")
    }
}

fn make_row(spec: &EvolutionSpec, t: f64, y: &[f64; 9]) -> TrajectoryRow {
    let g = InstantaneousGenerator::at(spec, t);
    let rho = DensityMatrix2::from_matrix_unchecked(unpack(y));
    let (p_plus, p_minus) = g.dressed.populations(&rho);
    TrajectoryRow {
        t,
        rho,
        p_plus,
        p_minus,
        lambda: g.dressed.lambda,
        omega: g.frame.omega,
        delta: g.frame.delta,
        gamma_a: g.rates.absorption,
        gamma_e: g.rates.emission,
        heat_current: g.heat_current(p_plus, p_minus),
        cumulative_heat: y[8],
        entropy: von_neumann_entropy(&rho),
        t_eff_kelvin: effective_temperature(p_plus, p_minus, g.dressed.lambda),
    }
}

/// Integrates the master equation from `rho0`, augmented with the cumulative
/// heat so the integrated current carries the same error
/// control as the state.
pub fn evolve(spec: &EvolutionSpec, rho0: &DensityMatrix2) -> Result<TrajectoryRecord> {
    spec.validate()?;
    let mut y0 = [0.0; 9];
    y0[..8].copy_from_slice(&pack(rho0.matrix()));
    let rhs = |t: f64, y: &[f64; 9]| {
        let g = InstantaneousGenerator::at(spec, t);
        let rho = unpack(y);
        let d = pack(&g.apply(&rho, 0.0));
        let p_plus = g.dressed.plus_element(&rho).re;
        let p_minus = g.dressed.minus_element(&rho).re;
        let mut out = [0.0; 9];
        out[..8].copy_from_slice(&d);
        out[8] = g.heat_current(p_plus, p_minus);
        out
    };
    let times = spec.sample_times();
    let mut rows = Vec::with_capacity(times.len());
    let (_, stats) = ode::integrate(rhs, spec.t_start, y0, spec.t_end, spec.step_control(), &times, |_, t, y| {
        rows.push(make_row(spec, t, y));
    })?;
    Ok(TrajectoryRecord { rows, stats })
}

/// Final state only.
pub fn evolve_final(spec: &EvolutionSpec, rho0: &DensityMatrix2) -> Result<DensityMatrix2> {
    let rhs = |t: f64, y: &[f64; 8]| pack(&InstantaneousGenerator::at(spec, t).apply(&unpack(y), 0.0));
    let (y, _) = ode::integrate(rhs, spec.t_start, pack(rho0.matrix()), spec.t_end, spec.step_control(), &[], |_, _, _| {})?;
    Ok(DensityMatrix2::from_matrix_unchecked(unpack(&y)))
}

/// Deformed density matrix ρ_u at `t_end`.
pub fn evolve_counting_state(spec: &EvolutionSpec, rho0: &DensityMatrix2, u: f64) -> Result<Operator2> {
    spec.validate()?;
    let rhs = |t: f64, y: &[f64; 8]| pack(&InstantaneousGenerator::at(spec, t).apply(&unpack(y), u));
    let (y, _) = ode::integrate(rhs, spec.t_start, pack(rho0.matrix()), spec.t_end, spec.step_control(), &[], |_, _, _| {})
        .map_err(|e| Error::CountingFailed { u, source: Box::new(e) })?;
    Ok(unpack(&y))
}

/// Characteristic function G(u) = Tr ρ_u(t_end).
pub fn evolve_counting(spec: &EvolutionSpec, rho0: &DensityMatrix2, u: f64) -> Result<Complex64> {
    evolve_counting_state(spec, rho0, u).map(|m| m.trace())
}
