//! Quantum-jump unraveling of the master equation.
//!
//! Each trajectory evolves a pure state under the non-Hermitian effective
//! Hamiltonian H − (i/2) Σ c†c. A jump fires when ‖ψ‖² decays to a uniform
//! random threshold, so time-dependent rates need no thinning. The no-jump
//! evolution is linear, so its propagator is tabulated once per pulse with
//! the adaptive integrator and shared by every trajectory. Absorption records
//! +Λ(t_jump), emission −Λ(t_jump), spontaneous decay no heat.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fcs::CountingGrid;
use crate::model::{DensityMatrix2, Operator2};
use crate::ode::{self, StepControl};
use crate::propagator::{EvolutionSpec, InstantaneousGenerator};

pub type Ket = Vector2<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpKind {
    Absorption,
    Emission,
    Spontaneous,
}

/// Dressed state with the larger final population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DressedLabel {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnravelSettings {
    /// Tolerances for tabulating the no-jump propagator.
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Table spacing as a phase Λ_max·dt, radians.
    pub phase_step: f64,
}

impl Default for UnravelSettings {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, phase_step: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOutcome {
    /// Phonons → emitter, ps⁻¹.
    pub heat: f64,
    pub jumps: u32,
    pub first_jump: Option<JumpKind>,
    pub final_label: DressedLabel,
    pub final_state: Ket,
}

fn real_ket(v: &Vector2<f64>) -> Ket {
    Ket::new(Complex64::new(v[0], 0.0), Complex64::new(v[1], 0.0))
}

/// −iH − ½ Σ c†c.
fn effective_generator(g: &InstantaneousGenerator) -> Operator2 {
    let i = Complex64::new(0.0, 1.0);
    let mut a = -g.hamiltonian * i;
    a -= g.projector_minus * Complex64::new(0.5 * g.rates.absorption, 0.0);
    a -= g.projector_plus * Complex64::new(0.5 * g.rates.emission, 0.0);
    a[(1, 1)] -= Complex64::new(0.5 * g.gamma_sp, 0.0);
    a
}

/// d‖ψ‖²/dt = −⟨ψ|Σ c†c|ψ⟩.
fn norm_rate(g: &InstantaneousGenerator, psi: &Ket) -> f64 {
    let d = &g.dressed;
    -(g.rates.absorption * real_ket(&d.minus).dotc(psi).norm_sqr()
        + g.rates.emission * real_ket(&d.plus).dotc(psi).norm_sqr()
        + g.gamma_sp * psi[1].norm_sqr())
}

fn pack_matrix(m: &Operator2) -> [f64; 8] {
    [m[(0, 0)].re, m[(0, 0)].im, m[(1, 0)].re, m[(1, 0)].im, m[(0, 1)].re, m[(0, 1)].im, m[(1, 1)].re, m[(1, 1)].im]
}

fn unpack_matrix(y: &[f64; 8]) -> Operator2 {
    let c = |k: usize| Complex64::new(y[k], y[k + 1]);
    Operator2::new(c(0), c(4), c(2), c(6))
}

/// No-jump propagators U(t_{k+1}, t_k) on a uniform grid; shared by all
/// trajectories since the conditional evolution is linear.
#[derive(Debug, Clone)]
pub struct NoJumpTable {
    pub t_start: f64,
    pub dt: f64,
    steps: Vec<Operator2>,
    /// Products over consecutive runs of `BLOCK` steps. ‖ψ‖² never grows
    /// without a jump, so a block whose end norm stays above the threshold
    /// contains no jump and can be skipped whole.
    blocks: Vec<Operator2>,
}

const BLOCK: usize = 64;

impl NoJumpTable {
    pub fn build(spec: &EvolutionSpec, settings: &UnravelSettings) -> Result<Self> {
        spec.validate()?;
        if !(settings.phase_step > 0.0 && settings.phase_step <= 0.5) {
            return Err(Error::invalid("phase_step", "must lie in (0, 0.5]"));
        }
        let span = spec.t_end - spec.t_start;
        let target = (settings.phase_step / spec.max_splitting().max(1e-3)).min(spec.max_step);
        let m = (span / target).ceil().max(1.0) as usize;
        let dt = span / m as f64;
        let control = StepControl::new(settings.rel_tol, settings.abs_tol, dt);
        let rhs = |t: f64, y: &[f64; 8]| {
            let a = effective_generator(&InstantaneousGenerator::at(spec, t));
            pack_matrix(&(a * unpack_matrix(y)))
        };
        let mut steps = Vec::with_capacity(m);
        for k in 0..m {
            let t0 = spec.t_start + k as f64 * dt;
            let t1 = if k + 1 == m { spec.t_end } else { t0 + dt };
            let (y, _) = ode::integrate(rhs, t0, pack_matrix(&Operator2::identity()), t1, control, &[], |_, _, _| {})?;
            steps.push(unpack_matrix(&y));
        }
        let blocks = steps
            .chunks(BLOCK)
            .map(|c| c.iter().fold(Operator2::identity(), |acc, s| s * acc))
            .collect();
        Ok(Self { t_start: spec.t_start, dt, steps, blocks })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }
}

/// One classical RK4 step of the no-jump equation; used only across
/// partial table intervals, where h ≤ dt keeps the error far below the
/// statistical one.
fn rk4(spec: &EvolutionSpec, t: f64, h: f64, psi: &Ket) -> Ket {
    if h <= 0.0 {
        return *psi;
    }
    let a0 = effective_generator(&InstantaneousGenerator::at(spec, t));
    let am = effective_generator(&InstantaneousGenerator::at(spec, t + 0.5 * h));
    let a1 = effective_generator(&InstantaneousGenerator::at(spec, t + h));
    let k1 = a0 * psi;
    let k2 = am * (psi + k1 * Complex64::new(0.5 * h, 0.0));
    let k3 = am * (psi + k2 * Complex64::new(0.5 * h, 0.0));
    let k4 = a1 * (psi + k3 * Complex64::new(h, 0.0));
    psi + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0)
}

/// Root of the cubic Hermite interpolant of ‖ψ‖² through the two ends.
fn hermite_crossing(t0: f64, n0: f64, d0: f64, t1: f64, n1: f64, d1: f64, level: f64) -> f64 {
    let h = t1 - t0;
    let f = |s: f64| {
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * n0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * n1 + (s3 - s2) * h * d1
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    t0 + hi * h
}

/// Runs one trajectory with its own random stream.
pub fn run_trajectory(spec: &EvolutionSpec, table: &NoJumpTable, psi0: &Ket, rng: &mut impl Rng) -> Result<TrajectoryOutcome> {
    let m = table.len();
    let mut heat = 0.0;
    let mut jumps = 0u32;
    let mut first_jump = None;
    let mut psi = psi0.normalize();
    let mut t = spec.t_start;
    let mut k = 0usize;
    let mut threshold: f64 = rng.gen();

    while k < m {
        let t_next = if k + 1 == m { spec.t_end } else { table.time(k + 1) };
        let on_grid = t == table.time(k);
        if on_grid && k % BLOCK == 0 {
            let skipped = table.blocks[k / BLOCK] * psi;
            if skipped.norm_squared() > threshold {
                psi = skipped;
                k = (k + BLOCK).min(m);
                t = if k == m { spec.t_end } else { table.time(k) };
                continue;
            }
        }
        let next = if on_grid { table.steps[k] * psi } else { rk4(spec, t, t_next - t, &psi) };
        let norm_next = next.norm_squared();
        if norm_next > threshold {
            psi = next;
            t = t_next;
            k += 1;
            continue;
        }

        let g0 = InstantaneousGenerator::at(spec, t);
        let g1 = InstantaneousGenerator::at(spec, t_next);
        let t_jump = hermite_crossing(t, psi.norm_squared(), norm_rate(&g0, &psi), t_next, norm_next, norm_rate(&g1, &next), threshold);
        let state = rk4(spec, t, t_jump - t, &psi);
        let g = InstantaneousGenerator::at(spec, t_jump);
        let d = &g.dressed;
        let w_a = g.rates.absorption * real_ket(&d.minus).dotc(&state).norm_sqr();
        let w_e = g.rates.emission * real_ket(&d.plus).dotc(&state).norm_sqr();
        let w_sp = g.gamma_sp * state[1].norm_sqr();
        let total = w_a + w_e + w_sp;
        if !(total > 0.0) {
            return Err(Error::invalid("jump", format!("no channel open at t = {t_jump}")));
        }
        let pick = rng.gen::<f64>() * total;
        let kind = if pick < w_a {
            JumpKind::Absorption
        } else if pick < w_a + w_e {
            JumpKind::Emission
        } else {
            JumpKind::Spontaneous
        };
        psi = match kind {
            JumpKind::Absorption => {
                heat += d.lambda;
                real_ket(&d.plus)
            }
            JumpKind::Emission => {
                heat -= d.lambda;
                real_ket(&d.minus)
            }
            JumpKind::Spontaneous => Ket::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
        };
        first_jump.get_or_insert(kind);
        jumps += 1;
        t = t_jump;
        threshold = rng.gen();
    }

    let final_state = psi.normalize();
    let g = InstantaneousGenerator::at(spec, spec.t_end);
    let p_plus = real_ket(&g.dressed.plus).dotc(&final_state).norm_sqr();
    let final_label = if p_plus > 0.5 { DressedLabel::Plus } else { DressedLabel::Minus };
    Ok(TrajectoryOutcome { heat, jumps, first_jump, final_label, final_state })
}

/// Random stream for trajectory `index`; independent of scheduling.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpTrajectoryStats {
    pub heats: Vec<f64>,
    pub jump_counts: Vec<u32>,
    pub first_jumps: Vec<Option<JumpKind>>,
    pub final_labels: Vec<DressedLabel>,
    pub mean_heat: f64,
    pub standard_error: f64,
    /// Ensemble average of |ψ⟩⟨ψ| at t_end.
    pub mean_state: Operator2,
    /// Standard error of each real and imaginary entry of `mean_state`.
    pub state_standard_error: Matrix2<Complex64>,
}

impl JumpTrajectoryStats {
    pub fn len(&self) -> usize {
        self.heats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heats.is_empty()
    }

    /// Bin masses on the Q grid of a heat distribution with the same
    /// counting grid; out-of-range heats go to the edge bins.
    pub fn histogram(&self, grid: &CountingGrid) -> Vec<f64> {
        let n = grid.n;
        let dq = grid.q_resolution();
        let half = (n / 2) as i64;
        let mut bins = vec![0.0; n];
        let w = 1.0 / self.heats.len() as f64;
        for q in &self.heats {
            let j = ((q / dq).round() as i64).clamp(-half, half - 1);
            bins[(j + half) as usize] += w;
        }
        bins
    }
}

/// ½ Σ |p − q|.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn mean_and_error(values: impl Iterator<Item = f64> + Clone, n: f64) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Samples `n` trajectories from the pure state `psi0`. Trajectory `k` uses
/// stream `k` of the seeded generator, so results do not depend on the
/// thread count.
pub fn sample_trajectories(spec: &EvolutionSpec, psi0: &Ket, n: usize, seed: u64, settings: &UnravelSettings) -> Result<JumpTrajectoryStats> {
    if n == 0 {
        return Err(Error::invalid("trajectories", "need at least one"));
    }
    let table = NoJumpTable::build(spec, settings)?;
    let outcomes = (0..n as u64)
        .into_par_iter()
        .map(|k| run_trajectory(spec, &table, psi0, &mut trajectory_rng(seed, k)))
        .collect::<Result<Vec<_>>>()?;

    let nf = n as f64;
    let heats: Vec<f64> = outcomes.iter().map(|o| o.heat).collect();
    let (mean_heat, standard_error) = mean_and_error(heats.iter().copied(), nf);

    let mut mean_state = Operator2::zeros();
    let mut state_standard_error = Matrix2::zeros();
    for r in 0..2 {
        for c in 0..2 {
            let entry = |o: &TrajectoryOutcome| o.final_state[r] * o.final_state[c].conj();
            let (re, re_err) = mean_and_error(outcomes.iter().map(|o| entry(o).re), nf);
            let (im, im_err) = mean_and_error(outcomes.iter().map(|o| entry(o).im), nf);
            mean_state[(r, c)] = Complex64::new(re, im);
            state_standard_error[(r, c)] = Complex64::new(re_err, im_err);
        }
    }

    Ok(JumpTrajectoryStats {
        jump_counts: outcomes.iter().map(|o| o.jumps).collect(),
        first_jumps: outcomes.iter().map(|o| o.first_jump).collect(),
        final_labels: outcomes.iter().map(|o| o.final_label).collect(),
        heats,
        mean_heat,
        standard_error,
        mean_state,
        state_standard_error,
    })
}

/// Pure state whose projector is `rho`, if `rho` is pure.
pub fn ket_from_pure(rho: &DensityMatrix2) -> Result<Ket> {
    if (rho.purity() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("rho0", "unraveling needs a pure initial state"));
    }
    let m = rho.matrix();
    let ket = if m[(0, 0)].re >= m[(1, 1)].re {
        Ket::new(m[(0, 0)], m[(1, 0)])
    } else {
        Ket::new(m[(0, 1)], m[(1, 1)])
    };
    Ok(ket.normalize())
}
