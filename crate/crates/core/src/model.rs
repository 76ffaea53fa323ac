//! Two-level-system state, drive frame and dressed-state diagonalization.
//!
//! Basis ordering is {|0⟩, |1⟩}. The rotating-frame Hamiltonian is
//! `H = Δ ŝ_z − Ω ŝ_x` with `ŝ_z = ½(|1⟩⟨1| − |0⟩⟨0|)` and the Hermitian
//! pseudospin `ŝ_x = ½(|1⟩⟨0| + |0⟩⟨1|)`.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;

/// 2×2 complex operator in the {|0⟩, |1⟩} basis.
pub type Operator2 = Matrix2<Complex64>;

/// Below this splitting (ps⁻¹) the dressed frame is treated as degenerate.
pub const LAMBDA_EPS: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Instantaneous rotating-frame drive parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveFrame {
    /// Detuning Δ = E_x − ω(t), ps⁻¹.
    pub delta: f64,
    /// Rabi frequency Ω ≥ 0, ps⁻¹.
    pub omega: f64,
}

impl DriveFrame {
    pub fn new(delta: f64, omega: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(Error::invalid("omega", "must be finite and non-negative"));
        }
        Ok(Self { delta, omega })
    }

    pub fn hamiltonian(&self) -> Operator2 {
        let d = Complex64::new(0.5 * self.delta, 0.0);
        let o = Complex64::new(-0.5 * self.omega, 0.0);
        Matrix2::new(-d, o, o, d)
    }
}

pub fn s_z() -> Operator2 {
    Matrix2::new(-0.5 * ONE, ZERO, ZERO, 0.5 * ONE)
}

pub fn s_x() -> Operator2 {
    Matrix2::new(ZERO, 0.5 * ONE, 0.5 * ONE, ZERO)
}

/// Λ = √(Δ² + Ω²).
pub fn dressed_splitting(frame: DriveFrame) -> f64 {
    frame.delta.hypot(frame.omega)
}

/// Eigenframe of the instantaneous Hamiltonian.
///
/// With the mixing angle θ ∈ [0, π] defined by cos θ = Δ/Λ and sin θ = Ω/Λ,
/// the eigenvectors are |−⟩ = (cos θ/2, sin θ/2) and |+⟩ = (−sin θ/2, cos θ/2).
/// Because Ω ≥ 0 keeps θ inside [0, π], this labelling varies continuously
/// along any drive path and never swaps branches at the anticrossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedFrame {
    pub lambda: f64,
    pub theta: f64,
    pub plus: Vector2<f64>,
    pub minus: Vector2<f64>,
    pub degenerate: bool,
}

impl DressedFrame {
    fn ket(v: &Vector2<f64>) -> Vector2<Complex64> {
        Vector2::new(Complex64::new(v[0], 0.0), Complex64::new(v[1], 0.0))
    }

    fn outer(a: &Vector2<f64>, b: &Vector2<f64>) -> Operator2 {
        Self::ket(a) * Self::ket(b).transpose()
    }

    /// |+⟩⟨−|, phonon absorption. Zero in the degenerate case.
    pub fn jump_up(&self) -> Operator2 {
        if self.degenerate {
            return Operator2::zeros();
        }
        Self::outer(&self.plus, &self.minus)
    }

    /// |−⟩⟨+|, phonon emission. Zero in the degenerate case.
    pub fn jump_down(&self) -> Operator2 {
        if self.degenerate {
            return Operator2::zeros();
        }
        Self::outer(&self.minus, &self.plus)
    }

    pub fn projector_plus(&self) -> Operator2 {
        Self::outer(&self.plus, &self.plus)
    }

    pub fn projector_minus(&self) -> Operator2 {
        Self::outer(&self.minus, &self.minus)
    }

    /// ⟨+|A|+⟩ for an arbitrary (possibly non-Hermitian) operator.
    pub fn plus_element(&self, a: &Operator2) -> Complex64 {
        sandwich(&self.plus, a, &self.plus)
    }

    pub fn minus_element(&self, a: &Operator2) -> Complex64 {
        sandwich(&self.minus, a, &self.minus)
    }

    pub fn plus_minus_element(&self, a: &Operator2) -> Complex64 {
        sandwich(&self.plus, a, &self.minus)
    }

    /// Dressed populations (p₊, p₋) of a density matrix.
    pub fn populations(&self, rho: &DensityMatrix2) -> (f64, f64) {
        (self.plus_element(rho.matrix()).re, self.minus_element(rho.matrix()).re)
    }
}

fn sandwich(bra: &Vector2<f64>, a: &Operator2, ket: &Vector2<f64>) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            acc += a[(i, j)] * (bra[i] * ket[j]);
        }
    }
    acc
}

pub fn dressed_frame(frame: DriveFrame) -> DressedFrame {
    let lambda = dressed_splitting(frame);
    let degenerate = lambda < LAMBDA_EPS;
    let cos_theta = if degenerate { 1.0 } else { (frame.delta / lambda).clamp(-1.0, 1.0) };
    let half_cos = (0.5 * (1.0 + cos_theta)).sqrt();
    let half_sin = (0.5 * (1.0 - cos_theta)).sqrt();
    DressedFrame {
        lambda,
        theta: cos_theta.acos(),
        minus: Vector2::new(half_cos, half_sin),
        plus: Vector2::new(-half_sin, half_cos),
        degenerate,
    }
}

/// Reduced density matrix of the emitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2(Operator2);

impl DensityMatrix2 {
    pub const HERMITICITY_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-9;
    pub const POSITIVITY_TOL: f64 = 1e-9;

    /// Wraps a matrix after checking Hermiticity, unit trace and positivity.
    pub fn new(matrix: Operator2) -> Result<Self> {
        let rho = Self(matrix);
        if rho.hermiticity_error() > Self::HERMITICITY_TOL {
            return Err(Error::invalid("rho", "not Hermitian"));
        }
        if (rho.trace() - 1.0).abs() > Self::TRACE_TOL {
            return Err(Error::invalid("rho", "trace differs from one"));
        }
        if rho.min_eigenvalue() < -Self::POSITIVITY_TOL {
            return Err(Error::invalid("rho", "negative eigenvalue"));
        }
        Ok(rho)
    }

    /// Wraps a matrix without validation (integrator output, deformed states).
    pub fn from_matrix_unchecked(matrix: Operator2) -> Self {
        Self(matrix)
    }

    pub fn ground() -> Self {
        Self(Matrix2::new(ONE, ZERO, ZERO, ZERO))
    }

    pub fn excited() -> Self {
        Self(Matrix2::new(ZERO, ZERO, ZERO, ONE))
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix2::identity() * Complex64::new(0.5, 0.0))
    }

    pub fn pure(ket: Vector2<Complex64>) -> Self {
        let norm2 = ket.norm_squared();
        Self(ket * ket.adjoint() / Complex64::new(norm2, 0.0))
    }

    /// Thermal state in the dressed frame at temperature `temperature` (ps⁻¹).
    pub fn dressed_thermal(frame: &DressedFrame, temperature: f64) -> Self {
        let p_plus = if temperature <= 0.0 {
            0.0
        } else {
            1.0 / (1.0 + (frame.lambda / temperature).exp())
        };
        let m = frame.projector_plus() * Complex64::new(p_plus, 0.0)
            + frame.projector_minus() * Complex64::new(1.0 - p_plus, 0.0);
        Self(m)
    }

    pub fn matrix(&self) -> &Operator2 {
        &self.0
    }

    pub fn into_matrix(self) -> Operator2 {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (self.0[(0, 0)] + self.0[(1, 1)]).re
    }

    pub fn population_excited(&self) -> f64 {
        self.0[(1, 1)].re
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.0 - self.0.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.0[(0, 0)].re;
        let d = self.0[(1, 1)].re;
        let b = 0.5 * (self.0[(0, 1)] + self.0[(1, 0)].conj());
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d).powi(2) + b.norm_sqr()).sqrt();
        [mean - radius, mean + radius]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }
}

/// Value returned when the dressed populations are equal.
pub const INFINITE_TEMPERATURE: f64 = f64::INFINITY;

/// Effective temperature in kelvin from dressed populations, via
/// p₊/p₋ = exp(−Λ / k_B T). Negative under population inversion.
pub fn effective_temperature(p_plus: f64, p_minus: f64, lambda: f64) -> f64 {
    units::angular_rate_to_kelvin(effective_temperature_rate(p_plus, p_minus, lambda))
}

/// Same as [`effective_temperature`] but returns k_B T / ħ in ps⁻¹.
pub fn effective_temperature_rate(p_plus: f64, p_minus: f64, lambda: f64) -> f64 {
    let p_plus = p_plus.max(0.0);
    let p_minus = p_minus.max(0.0);
    if p_plus == p_minus {
        return INFINITE_TEMPERATURE;
    }
    if p_plus == 0.0 {
        return 0.0;
    }
    if p_minus == 0.0 {
        return -0.0;
    }
    lambda / (p_minus / p_plus).ln()
}

/// −Σ λ ln λ over eigenvalues, with 0 ln 0 = 0. Units of k_B.
pub fn von_neumann_entropy(rho: &DensityMatrix2) -> f64 {
    shannon(&rho.eigenvalues())
}

/// Entropy of a probability vector, ignoring non-positive entries.
pub fn shannon(probabilities: &[f64]) -> f64 {
    probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}
