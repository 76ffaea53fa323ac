mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use config::{ExperimentConfig, WORKERS_ENV};
use output::{gnuplot_script, OutputSet};

/// Thermodynamics of a laser-driven two-level emitter in a phonon bath.
#[derive(Debug, Parser)]
#[command(name = "dressed-thermo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set pulse.chirp_a_ps2=-5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// RNG seed for the jump oracle.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads; beats the environment variable and the config.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Also write a gnuplot script for the produced tables.
    #[arg(long, global = true)]
    gnuplot_stub: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Ω(t), Δ(t) and the dressed levels ±Λ(t)/2 of the configured pulse.
    PulsePreview,
    /// Full master-equation trajectory of the configured pulse.
    Evolve,
    /// Mean heat over the (chirp, area) grid, one table per detuning.
    HeatSweep,
    /// η/η_C over the (chirp, area) grid, one table per detuning.
    EfficiencySweep,
    /// Effective temperature and entropy along the pulse.
    Ts,
    /// Heat probability density from the counting-field scan.
    HeatDistribution,
    /// Net CW cooling power over (δ, Ω).
    CoolingMap,
    /// Quantum-jump histogram of the heat, compared with the distribution.
    OracleMc,
    /// Quick invariant checks.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::PulsePreview => "pulse-preview",
            Command::Evolve => "evolve",
            Command::HeatSweep => "heat-sweep",
            Command::EfficiencySweep => "efficiency-sweep",
            Command::Ts => "ts",
            Command::HeatDistribution => "heat-distribution",
            Command::CoolingMap => "cooling-map",
            Command::OracleMc => "oracle-mc",
            Command::Selftest => "selftest",
        }
    }
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        cfg.workers = v.trim().parse().with_context(|| format!("{WORKERS_ENV}={v}: expected a thread count"))?;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.output.directory = d.clone();
    }
    cfg.output.gnuplot |= cli.gnuplot_stub;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = resolve(cli)?;
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global().context("starting worker pool")?;
    }
    let mut out = OutputSet::create(&cfg.output.directory, &cfg.output.formats)?;
    let start = Instant::now();
    let outcome = match cli.command {
        Command::PulsePreview => commands::pulse_preview(&cfg, &mut out),
        Command::Evolve => commands::evolve_cmd(&cfg, &mut out),
        Command::HeatSweep => commands::heat_sweep(&cfg, &mut out),
        Command::EfficiencySweep => commands::efficiency_sweep(&cfg, &mut out),
        Command::Ts => commands::ts(&cfg, &mut out),
        Command::HeatDistribution => commands::heat_distribution_cmd(&cfg, &mut out),
        Command::CoolingMap => commands::cooling_map(&cfg, &mut out),
        Command::OracleMc => commands::oracle_mc(&cfg, &mut out),
        Command::Selftest => commands::selftest(&cfg, &mut out),
    };
    let name = cli.command.name();
    let (summary, failures, error) = match outcome {
        Ok(o) => (o.summary, o.failures, None),
        Err(e) => (serde_json::Value::Null, Vec::new(), Some(format!("{e:#}"))),
    };
    if cfg.output.gnuplot && !out.tables.is_empty() {
        let script = gnuplot_script(&out, name);
        out.text(&format!("{name}.gp"), &script)?;
    }
    let outputs: Vec<String> = out.files.iter().map(|p| out.relative(p)).collect();
    let manifest = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "wall_time_s": start.elapsed().as_secs_f64(),
        "outputs": outputs,
        "failures": failures,
        "error": error,
        "summary": summary,
    });
    output::write_json(&out.directory.join(format!("{name}.manifest.json")), &manifest)?;
    for f in &failures {
        eprintln!("failed: {f}");
    }
    if let Some(e) = error {
        anyhow::bail!(e);
    }
    Ok(failures.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
