//! Experiment configuration.
//!
//! Resolution order, later wins: built-in defaults, the `--config` file,
//! `--set key.path=value` overrides, then dedicated flags (`--seed`,
//! `--out-dir`, `--workers`). The worker count also reads
//! `DRESSED_THERMO_WORKERS`, which sits between the file and the flag.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use dressed_thermo::bath::{BathSpec, SpectralDensity, SpectralForm};
use dressed_thermo::fcs::CountingGrid;
use dressed_thermo::propagator::EvolutionSpec;
use dressed_thermo::pulse::ChirpedGaussianSpec;
use dressed_thermo::steady::{AbsorptionModel, CWDriveSpec};
use dressed_thermo::sweep::{Axis, SweepSpec};
use dressed_thermo::thermo::EngineSpec;
use dressed_thermo::units;
use serde::{Deserialize, Serialize};

pub const WORKERS_ENV: &str = "DRESSED_THERMO_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Worker threads; 0 lets the pool pick.
    pub workers: usize,
    pub pulse: PulseConfig,
    pub bath: BathConfig,
    pub solver: SolverConfig,
    pub counting: CountingConfig,
    pub engine: EngineConfig,
    pub cw: CwConfig,
    pub absorption: AbsorptionModel,
    pub sweep: SweepConfig,
    pub oracle: OracleConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            workers: 0,
            pulse: PulseConfig::default(),
            bath: BathConfig::default(),
            solver: SolverConfig::default(),
            counting: CountingConfig::default(),
            engine: EngineConfig::default(),
            cw: CwConfig::default(),
            absorption: AbsorptionModel::siv_default(),
            sweep: SweepConfig::default(),
            oracle: OracleConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    ChirpedGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    pub shape: PulseShape,
    pub tau0_ps: f64,
    pub theta0_over_pi: f64,
    pub chirp_a_ps2: f64,
    pub delta_ps_inv: f64,
    pub t_center_ps: f64,
    /// Half-width of the integration window in units of the chirped duration.
    pub window_tau: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            shape: PulseShape::ChirpedGaussian,
            tau0_ps: 0.5,
            theta0_over_pi: 9.0,
            chirp_a_ps2: 10.0,
            delta_ps_inv: 2.5,
            t_center_ps: 0.0,
            window_tau: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathConfig {
    pub temperature_k: f64,
    pub form: SpectralForm,
    pub amplitude_ps2: f64,
    pub cutoff_ps_inv: f64,
}

impl BathConfig {
    fn from_density(temperature_k: f64, j: SpectralDensity) -> Self {
        Self { temperature_k, form: j.form, amplitude_ps2: j.amplitude, cutoff_ps_inv: j.cutoff }
    }

    pub fn spec(&self, section: &str) -> Result<BathSpec> {
        let j = SpectralDensity { form: self.form, amplitude: self.amplitude_ps2, cutoff: self.cutoff_ps_inv };
        BathSpec::from_kelvin(self.temperature_k, j).with_context(|| format!("[{section}]"))
    }
}

impl Default for BathConfig {
    fn default() -> Self {
        Self::from_density(20.0, SpectralDensity::exciton_default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Output rows of `evolve` and `ts`.
    pub samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: EvolutionSpec::DEFAULT_REL_TOL,
            abs_tol: EvolutionSpec::DEFAULT_ABS_TOL,
            samples: EvolutionSpec::DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountingConfig {
    /// Number of counting-field samples, a power of two.
    pub n: usize,
    /// Half-width of the Q window, ps⁻¹. Absent: ten times the largest splitting.
    pub q_range_ps_inv: Option<f64>,
    pub apodize: bool,
    /// Stop the process early to look at the distribution at this time, ps.
    pub t_end_ps: Option<f64>,
}

impl Default for CountingConfig {
    fn default() -> Self {
        Self { n: CountingGrid::DEFAULT_SAMPLES, q_range_ps_inv: None, apodize: false, t_end_ps: None }
    }
}

/// The hot reservoir is the phonon bath of `[bath]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub cold_k: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { cold_k: 2.7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CwConfig {
    pub gamma_sp_ns_inv: f64,
    pub delta_ps_inv: Axis,
    pub omega_ps_inv: Axis,
    pub bath: BathConfig,
}

impl Default for CwConfig {
    fn default() -> Self {
        Self {
            gamma_sp_ns_inv: 1.0,
            delta_ps_inv: Axis::new(-5.0, 5.0, 41),
            omega_ps_inv: Axis::new(5.0 / 41.0, 5.0, 41),
            bath: BathConfig::from_density(20.0, SpectralDensity::siv_default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub tau0_ps: f64,
    pub chirp_a_ps2: Axis,
    pub theta0_over_pi: Axis,
    /// One output file per detuning.
    pub detunings_ps_inv: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            tau0_ps: 2.0,
            chirp_a_ps2: Axis::new(-20.0, 20.0, 41),
            theta0_over_pi: Axis::new(0.25, 10.0, 40),
            detunings_ps_inv: vec![0.0, -2.5, 2.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub trajectories: usize,
    pub q_range_ps_inv: f64,
    pub n: usize,
    /// Also reconstruct P(Q) on the same grid and report the distance.
    pub compare_fcs: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { trajectories: 100_000, q_range_ps_inv: 20.0, n: 1024, compare_fcs: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Table formats; CSV and/or JSON records.
    pub formats: Vec<OutputFormat>,
    /// Add a q_mev column to heat distributions.
    pub mev_column: bool,
    pub gnuplot: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), formats: vec![OutputFormat::Csv], mev_column: true, gnuplot: false }
    }
}

/// Parses `value` as a TOML literal, falling back to a bare string.
fn parse_literal(value: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {value}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(value.to_string()),
    }
}

fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, value) = assignment.split_once('=').ok_or_else(|| anyhow!("--set {assignment}: expected key=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        bail!("--set {assignment}: empty key segment");
    }
    let mut table = doc;
    for key in &keys[..keys.len() - 1] {
        let entry = table.entry(key.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| anyhow!("--set {assignment}: `{key}` is not a table"))?;
    }
    table.insert(keys[keys.len() - 1].to_string(), parse_literal(value.trim()));
    Ok(())
}

impl ExperimentConfig {
    /// Builds the config from an optional file and `--set` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str::<toml::Table>(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let origin = path.map(|p| p.display().to_string()).unwrap_or_else(|| "defaults".into());
        let cfg: Self = toml::Value::Table(doc).try_into().with_context(|| format!("invalid configuration ({origin})"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[cfg(test)]
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Unit and range checks that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        self.pulse_spec()?;
        self.bath.spec("bath")?;
        self.cw.bath.spec("cw.bath")?;
        self.engine()?;
        if !(self.pulse.window_tau > 0.0) {
            bail!("[pulse] window_tau: must be positive");
        }
        if !(self.solver.rel_tol > 0.0 && self.solver.abs_tol > 0.0) {
            bail!("[solver] rel_tol and abs_tol must be positive");
        }
        if self.solver.samples < 2 {
            bail!("[solver] samples: need at least 2");
        }
        if !self.counting.n.is_power_of_two() || self.counting.n < 4 {
            bail!("[counting] n: must be a power of two, at least 4");
        }
        if let Some(q) = self.counting.q_range_ps_inv {
            if !(q > 0.0 && q.is_finite()) {
                bail!("[counting] q_range_ps_inv: must be positive");
            }
        }
        if !(self.cw.gamma_sp_ns_inv >= 0.0 && self.cw.gamma_sp_ns_inv.is_finite()) {
            bail!("[cw] gamma_sp_ns_inv: must be non-negative");
        }
        self.cw.delta_ps_inv.validate("cw.delta_ps_inv").context("[cw]")?;
        self.cw.omega_ps_inv.validate("cw.omega_ps_inv").context("[cw]")?;
        if self.cw.omega_ps_inv.values().iter().any(|&w| !(w > 0.0)) {
            bail!("[cw] omega_ps_inv: Rabi frequencies must be positive");
        }
        self.absorption.validate().context("[absorption]")?;
        self.sweep.chirp_a_ps2.validate("sweep.chirp_a_ps2").context("[sweep]")?;
        self.sweep.theta0_over_pi.validate("sweep.theta0_over_pi").context("[sweep]")?;
        if !(self.sweep.tau0_ps > 0.0) {
            bail!("[sweep] tau0_ps: must be positive");
        }
        if self.sweep.theta0_over_pi.start < 0.0 || self.sweep.theta0_over_pi.stop < 0.0 {
            bail!("[sweep] theta0_over_pi: areas must be non-negative");
        }
        if self.sweep.detunings_ps_inv.is_empty() || self.sweep.detunings_ps_inv.iter().any(|d| !d.is_finite()) {
            bail!("[sweep] detunings_ps_inv: need at least one finite detuning");
        }
        if self.oracle.trajectories == 0 {
            bail!("[oracle] trajectories: must be positive");
        }
        if !self.oracle.n.is_power_of_two() || !(self.oracle.q_range_ps_inv > 0.0) {
            bail!("[oracle] n must be a power of two and q_range_ps_inv positive");
        }
        if self.output.formats.is_empty() {
            bail!("[output] formats: need at least one format");
        }
        Ok(())
    }

    pub fn pulse_spec(&self) -> Result<ChirpedGaussianSpec> {
        let p = &self.pulse;
        ChirpedGaussianSpec::new(p.tau0_ps, p.theta0_over_pi * PI, p.chirp_a_ps2, p.delta_ps_inv)
            .map(|s| s.with_center(p.t_center_ps))
            .context("[pulse]")
    }

    /// Pulse evolution with the configured window and tolerances.
    pub fn evolution_spec(&self) -> Result<EvolutionSpec> {
        let spec = EvolutionSpec::for_pulse_window(self.pulse_spec()?, self.bath.spec("bath")?, self.pulse.window_tau)
            .context("[pulse]")?
            .with_tolerances(self.solver.rel_tol, self.solver.abs_tol)
            .with_samples(self.solver.samples);
        spec.validate().context("[solver]")?;
        Ok(spec)
    }

    pub fn engine(&self) -> Result<EngineSpec> {
        EngineSpec::new(self.bath.temperature_k, self.engine.cold_k).context("[engine] cold_k must lie in (0, bath.temperature_k)")
    }

    pub fn sweep_spec(&self, delta: f64) -> Result<SweepSpec> {
        let mut s = SweepSpec::new(self.sweep.tau0_ps, delta, self.bath.spec("bath")?);
        s.rel_tol = self.solver.rel_tol;
        s.abs_tol = self.solver.abs_tol;
        Ok(s)
    }

    pub fn counting_grid(&self, spec: &EvolutionSpec) -> CountingGrid {
        let mut grid = match self.counting.q_range_ps_inv {
            Some(q) => CountingGrid::for_range(q, self.counting.n),
            None => CountingGrid::for_splitting(spec.max_splitting(), CountingGrid::DEFAULT_RANGE_FACTOR, self.counting.n),
        };
        grid.apodize = self.counting.apodize;
        grid
    }

    /// CW drive at the first grid point; the map sweeps δ and Ω over it.
    pub fn cw_base(&self) -> Result<CWDriveSpec> {
        Ok(CWDriveSpec {
            delta: self.cw.delta_ps_inv.start,
            omega: self.cw.omega_ps_inv.start,
            bath: self.cw.bath.spec("cw.bath")?,
            gamma_sp: units::ns_inv_to_ps_inv(self.cw.gamma_sp_ns_inv),
        })
    }
}
