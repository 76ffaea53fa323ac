//! Full counting statistics of the heat exchanged with the phonons.
//!
//! The characteristic function G(u) = ⟨e^{iu ΔE_bath}⟩ is sampled on a
//! uniform grid u_k = k·du, k ∈ [−n/2, n/2), and Fourier transformed onto
//! Q_j = j·dQ with dQ = 2π/(n·du). The Q axis is reported in the
//! phonons → emitter convention, so Q = −ΔE_bath.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::DensityMatrix2;
use crate::propagator::{evolve_counting, EvolutionSpec};

/// Sampling of the counting field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingGrid {
    /// u spacing, ps.
    pub du: f64,
    /// Number of samples, a power of two.
    pub n: usize,
    /// Gaussian apodization of G(u) before the transform.
    pub apodize: bool,
}

impl CountingGrid {
    pub const DEFAULT_SAMPLES: usize = 1024;
    /// Q range in units of the largest splitting.
    pub const DEFAULT_RANGE_FACTOR: f64 = 10.0;
    /// Required n·du·Λ_max/π.
    pub const MIN_RESOLUTION_FACTOR: f64 = 8.0;

    /// Q range ±`range_factor`·Λ_max with `n` samples.
    pub fn for_splitting(lambda_max: f64, range_factor: f64, n: usize) -> Self {
        Self { du: PI / (range_factor * lambda_max), n, apodize: false }
    }

    /// Q axis ±`q_range` with `n` samples.
    pub fn for_range(q_range: f64, n: usize) -> Self {
        Self { du: PI / q_range, n, apodize: false }
    }

    pub fn default_for(spec: &EvolutionSpec) -> Self {
        Self::for_splitting(spec.max_splitting(), Self::DEFAULT_RANGE_FACTOR, Self::DEFAULT_SAMPLES)
    }

    pub fn validate(&self, lambda_max: f64) -> Result<()> {
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {} is not a power of two", self.n)));
        }
        if !(self.du > 0.0) || !self.du.is_finite() {
            return Err(Error::InvalidGrid("du must be positive".into()));
        }
        let resolution = self.n as f64 * self.du * lambda_max / PI;
        if resolution < Self::MIN_RESOLUTION_FACTOR {
            return Err(Error::InvalidGrid(format!(
                "n·du·Λ_max/π = {resolution:.3} < {}; Q resolution too coarse",
                Self::MIN_RESOLUTION_FACTOR
            )));
        }
        Ok(())
    }

    /// Half-width of the Q axis, π/du.
    pub fn q_range(&self) -> f64 {
        PI / self.du
    }

    /// Q spacing 2π/(n·du).
    pub fn q_resolution(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.du)
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        let half = (self.n / 2) as i64;
        -half..half
    }

    pub fn u_values(&self) -> Vec<f64> {
        self.indices().map(|k| k as f64 * self.du).collect()
    }
}

/// Sampled characteristic function.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicScan {
    pub grid: CountingGrid,
    pub u: Vec<f64>,
    pub g: Vec<Complex64>,
}

impl CharacteristicScan {
    fn index_of_zero(&self) -> usize {
        self.grid.n / 2
    }

    pub fn at_zero(&self) -> Complex64 {
        self.g[self.index_of_zero()]
    }

    /// Largest |G(−u) − conj G(u)| over the scan.
    pub fn hermitian_defect(&self) -> f64 {
        let z = self.index_of_zero();
        (1..self.grid.n / 2)
            .map(|k| (self.g[z - k] - self.g[z + k].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Mean heat (phonons → emitter) from the central difference of G at
    /// u = 0: ⟨Q⟩ = −Im G'(0).
    pub fn mean_from_derivative(&self) -> f64 {
        let z = self.index_of_zero();
        let derivative = (self.g[z + 1] - self.g[z - 1]) / (2.0 * self.grid.du);
        -derivative.im
    }
}

/// Samples G(u_k) for every grid point; u values are independent and run in
/// parallel on the current rayon pool.
pub fn characteristic_scan(spec: &EvolutionSpec, rho0: &DensityMatrix2, grid: &CountingGrid) -> Result<CharacteristicScan> {
    grid.validate(spec.max_splitting())?;
    let u = grid.u_values();
    let g = u
        .par_iter()
        .map(|&u| evolve_counting(spec, rho0, u))
        .collect::<Result<Vec<_>>>()?;
    Ok(CharacteristicScan { grid: *grid, u, g })
}

/// Sampled heat probability density.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatDistribution {
    /// Ascending Q grid, ps⁻¹ (phonons → emitter positive).
    pub q_values: Vec<f64>,
    /// Density per ps⁻¹.
    pub probabilities: Vec<f64>,
    pub dq: f64,
    pub grid: CountingGrid,
    pub mean: f64,
    pub variance: f64,
    /// Largest discarded imaginary part of the transform.
    pub max_imaginary: f64,
}

impl HeatDistribution {
    /// Σ P·ΔQ.
    pub fn total_probability(&self) -> f64 {
        self.probabilities.iter().sum::<f64>() * self.dq
    }

    /// Probability mass at Q < 0, excluding the Q = 0 bin.
    pub fn negative_mass(&self) -> f64 {
        self.q_values
            .iter()
            .zip(&self.probabilities)
            .filter(|(q, _)| **q < -0.5 * self.dq)
            .map(|(_, p)| p * self.dq)
            .sum()
    }

    /// Bin masses P·ΔQ.
    pub fn masses(&self) -> Vec<f64> {
        self.probabilities.iter().map(|p| p * self.dq).collect()
    }
}

const NORMALIZATION_TOL: f64 = 1e-3;

/// Inverse transform P(Q) = (du/2π) Σ_k G(u_k) e^{i u_k Q}.
pub fn heat_distribution(scan: &CharacteristicScan) -> Result<HeatDistribution> {
    let grid = scan.grid;
    let n = grid.n;
    let half = n / 2;
    let mut buffer = vec![Complex64::new(0.0, 0.0); n];
    // window width a third of the largest |u|
    let sigma = half as f64 * grid.du / 3.0;
    for (i, k) in grid.indices().enumerate() {
        let mut value = scan.g[i];
        if i == 0 {
            // the Nyquist sample has no partner at +n/2; keep its symmetric part
            value = Complex64::new(value.re, 0.0);
        }
        if grid.apodize {
            let u = k as f64 * grid.du;
            value *= (-0.5 * (u / sigma).powi(2)).exp();
        }
        buffer[k.rem_euclid(n as i64) as usize] = value;
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buffer);

    let scale = grid.du / (2.0 * PI);
    let dq = grid.q_resolution();
    let mut q_values = Vec::with_capacity(n);
    let mut probabilities = Vec::with_capacity(n);
    let mut max_imaginary: f64 = 0.0;
    for j in -(half as i64)..half as i64 {
        let z = buffer[j.rem_euclid(n as i64) as usize] * scale;
        q_values.push(j as f64 * dq);
        probabilities.push(z.re);
        max_imaginary = max_imaginary.max(z.im.abs());
    }

    let mut dist = HeatDistribution {
        q_values,
        probabilities,
        dq,
        grid,
        mean: 0.0,
        variance: 0.0,
        max_imaginary,
    };
    let norm = dist.total_probability();
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Aliasing { norm });
    }
    let (mean, variance) = moments(&dist);
    dist.mean = mean;
    dist.variance = variance;
    Ok(dist)
}

/// Grid-quadrature mean and variance, ps⁻¹ and ps⁻².
pub fn moments(dist: &HeatDistribution) -> (f64, f64) {
    let mut m0 = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (q, p) in dist.q_values.iter().zip(&dist.probabilities) {
        let w = p * dist.dq;
        m0 += w;
        m1 += w * q;
        m2 += w * q * q;
    }
    let mean = m1 / m0;
    (mean, m2 / m0 - mean * mean)
}

/// Scan followed by the transform.
pub fn heat_distribution_for(spec: &EvolutionSpec, rho0: &DensityMatrix2, grid: &CountingGrid) -> Result<HeatDistribution> {
    heat_distribution(&characteristic_scan(spec, rho0, grid)?)
}
