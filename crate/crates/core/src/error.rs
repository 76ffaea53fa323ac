use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("step size underflow at t = {t} ps (h = {h:e} ps)")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {max_steps} steps at t = {t} ps")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("energy {energy:e} ps⁻¹ too close to zero for a Bose occupation at finite temperature")]
    ZeroEnergyOccupation { energy: f64 },

    #[error("time window {window} ps is shorter than {required} ps; the spectral synthesis would alias")]
    WindowTooSmall { window: f64, required: f64 },

    #[error("sampling too coarse for the pulse spectrum: {0}")]
    SpectrumUnderResolved(String),

    #[error("counting-field evolution failed at u = {u} ps: {source}")]
    CountingFailed {
        u: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("heat distribution normalization {norm} deviates from one; the Q range is too small")]
    Aliasing { norm: f64 },

    #[error("invalid counting grid: {0}")]
    InvalidGrid(String),

    #[error("no unique steady state (null space dimension {dimension})")]
    NoUniqueSteadyState { dimension: usize },

    #[error("not a heat-absorbing stroke: Q_h = {heat} ps⁻¹")]
    NotHeatAbsorbing { heat: f64 },
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
