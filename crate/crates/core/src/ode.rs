//! Dormand–Prince 5(4) integrator with PI step control and the
//! fourth-order continuous extension for dense output.
//!
//! States are fixed-size real arrays; complex quantities are packed by the
//! caller.

use crate::error::{Error, Result};
use serde::Serialize;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn new(rel_tol: f64, abs_tol: f64, max_step: f64) -> Self {
        Self { rel_tol, abs_tol, max_step, max_steps: 5_000_000 }
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let w = h * c;
        for i in 0..N {
            out[i] += w * k[i];
        }
    }
    out
}

/// Adaptive stepper. Each call to [`Dopri5::step`] advances by one accepted
/// step; [`Dopri5::interpolate`] evaluates the continuous extension inside
/// the last accepted step.
pub struct Dopri5<const N: usize, F>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    rhs: F,
    control: StepControl,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    fac_old: f64,
    t_prev: f64,
    cont: [[f64; N]; 5],
    accepted: usize,
    rejected: usize,
    evaluations: usize,
}

impl<const N: usize, F> Dopri5<N, F>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(mut rhs: F, t0: f64, y0: [f64; N], control: StepControl) -> Self {
        let k1 = rhs(t0, &y0);
        let h = initial_step(&y0, &k1, &control);
        Self {
            rhs,
            control,
            t: t0,
            y: y0,
            k1,
            h,
            fac_old: 1e-4,
            t_prev: t0,
            cont: [y0; 5],
            accepted: 0,
            rejected: 0,
            evaluations: 1,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    pub fn previous_t(&self) -> f64 {
        self.t_prev
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    fn error_norm(&self, y_old: &[f64; N], y_new: &[f64; N], err: &[f64; N]) -> f64 {
        let mut sum = 0.0;
        for i in 0..N {
            let scale = self.control.abs_tol + self.control.rel_tol * y_old[i].abs().max(y_new[i].abs());
            sum += (err[i] / scale).powi(2);
        }
        (sum / N as f64).sqrt()
    }

    /// Advances one accepted step without passing `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<()> {
        loop {
            if self.accepted + self.rejected >= self.control.max_steps {
                return Err(Error::TooManySteps { t: self.t, max_steps: self.control.max_steps });
            }
            let remaining = t_limit - self.t;
            let mut h = self.h.min(self.control.max_step);
            let last = 1.01 * h >= remaining;
            if last {
                h = remaining;
            }
            if h <= 1e-13 * self.t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t: self.t, h });
            }
            let (t, y, k1) = (self.t, self.y, self.k1);
            let f = &mut self.rhs;
            let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
            let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let t_new = if last { t_limit } else { t + h };
            let k7 = f(t_new, &y_new);
            self.evaluations += 6;

            let err_vec = axpy(&[0.0; N], h, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
            let err = self.error_norm(&y, &y_new, &err_vec);
            if !err.is_finite() {
                self.rejected += 1;
                self.h = 0.1 * h;
                continue;
            }

            let fac11 = err.powf(0.2 - BETA * 0.75);
            if err <= 1.0 {
                let fac = (fac11 / self.fac_old.powf(BETA)) / SAFETY;
                let fac = fac.clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                self.fac_old = err.max(1e-4);

                let ydiff = {
                    let mut d = [0.0; N];
                    for i in 0..N {
                        d[i] = y_new[i] - y[i];
                    }
                    d
                };
                let mut bspl = [0.0; N];
                let mut c3 = [0.0; N];
                for i in 0..N {
                    bspl[i] = h * k1[i] - ydiff[i];
                    c3[i] = ydiff[i] - h * k7[i] - bspl[i];
                }
                let c4 = axpy(&[0.0; N], h, &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)]);
                self.cont = [y, ydiff, bspl, c3, c4];

                self.t_prev = t;
                self.t = t_new;
                self.y = y_new;
                self.k1 = k7;
                self.accepted += 1;
                // keep the proposal from collapsing after a truncated last step
                self.h = if last { self.h.max(h / fac) } else { h / fac };
                return Ok(());
            }
            self.rejected += 1;
            self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }

    /// Dense output inside the last accepted step `[previous_t, t]`.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let h = self.t - self.t_prev;
        if h == 0.0 {
            return self.y;
        }
        let s = (t - self.t_prev) / h;
        let s1 = 1.0 - s;
        let [c0, c1, c2, c3, c4] = &self.cont;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = c0[i] + (c1[i] + (c2[i] + (c3[i] + c4[i] * s1) * s) * s1) * s;
        }
        out
    }
}

fn initial_step<const N: usize>(y0: &[f64; N], f0: &[f64; N], control: &StepControl) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sk = control.abs_tol + control.rel_tol * y0[i].abs();
        d0 += (y0[i] / sk).powi(2);
        d1 += (f0[i] / sk).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(control.max_step)
}

/// Summary of a finished integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrates from `t0` to `t_end`, calling `on_sample` at each requested
/// time (sorted, inside `[t0, t_end]`) with dense-output values. Returns
/// the final state.
pub fn integrate<const N: usize, F, S>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    control: StepControl,
    sample_times: &[f64],
    mut on_sample: S,
) -> Result<([f64; N], IntegrationStats)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(usize, f64, &[f64; N]),
{
    let mut stepper = Dopri5::new(rhs, t0, y0, control);
    let mut next = 0;
    while next < sample_times.len() && sample_times[next] <= t0 {
        on_sample(next, sample_times[next], &y0);
        next += 1;
    }
    while stepper.t() < t_end {
        stepper.step(t_end)?;
        while next < sample_times.len() && sample_times[next] <= stepper.t() {
            let ts = sample_times[next];
            let y = if ts == stepper.t() { *stepper.y() } else { stepper.interpolate(ts) };
            on_sample(next, ts, &y);
            next += 1;
        }
    }
    let stats = IntegrationStats {
        accepted: stepper.accepted_steps(),
        rejected: stepper.rejected_steps(),
        evaluations: stepper.evaluations(),
    };
    Ok((*stepper.y(), stats))
}

/// Fixed-step classical DP5 (fifth-order solution, no error control). Used
/// for convergence-order checks.
pub fn integrate_fixed<const N: usize, F>(mut rhs: F, t0: f64, y0: [f64; N], t_end: f64, steps: usize) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let h = (t_end - t0) / steps as f64;
    let mut y = y0;
    for n in 0..steps {
        let t = t0 + n as f64 * h;
        let k1 = rhs(t, &y);
        let k2 = rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = rhs(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        y = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn oscillator(_t: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    #[test]
    fn harmonic_oscillator_to_tolerance() {
        let control = StepControl::new(1e-10, 1e-12, 1.0);
        let (y, stats) = integrate(oscillator, 0.0, [1.0, 0.0], 10.0, control, &[], |_, _, _| {}).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((y[1] + 10f64.sin()).abs() < 1e-8);
        assert!(stats.accepted > 10);
    }

    #[test]
    fn dense_output_is_accurate() {
        let control = StepControl::new(1e-9, 1e-12, 0.5);
        let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let mut worst: f64 = 0.0;
        integrate(oscillator, 0.0, [1.0, 0.0], 10.0, control, &times, |_, t, y| {
            worst = worst.max((y[0] - t.cos()).abs());
        })
        .unwrap();
        assert!(worst < 1e-7, "dense output error {worst}");
    }

    #[test]
    fn time_dependent_decay() {
        // y' = −2t y, y = exp(−t²)
        let control = StepControl::new(1e-10, 1e-14, 0.1);
        let (y, _) = integrate(|t, y: &[f64; 1]| [-2.0 * t * y[0]], 0.0, [1.0], 2.0, control, &[], |_, _, _| {}).unwrap();
        assert_relative_eq!(y[0], (-4.0f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn fixed_step_is_fifth_order() {
        let exact = 3f64.cos();
        let e1 = (integrate_fixed(oscillator, 0.0, [1.0, 0.0], 3.0, 20)[0] - exact).abs();
        let e2 = (integrate_fixed(oscillator, 0.0, [1.0, 0.0], 3.0, 40)[0] - exact).abs();
        let order = (e1 / e2).log2();
        assert!(order > 4.5, "observed order {order}");
    }

    #[test]
    fn underflow_reported() {
        // blows up at t = 1
        let control = StepControl::new(1e-8, 1e-10, 0.1);
        let result = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, control, &[], |_, _, _| {});
        assert!(matches!(result, Err(Error::StepSizeUnderflow { .. }) | Err(Error::TooManySteps { .. })));
    }
}
