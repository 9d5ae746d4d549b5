//! Command-line driver for the modular overlap-measurement experiments.
//!
//! An experiment is chosen by positional name or `--experiment`, configured
//! from defaults, an optional TOML file, and flag overrides, then run
//! deterministically for the given seed. Exit codes: 0 success, 2 config
//! error, 3 pipeline error.

mod config;
mod experiments;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{ConfigError, Experiment, ExperimentConfig, Layer};

const AFTER_HELP: &str = "\
Presets (positional, in place of an experiment name):
  fig4ab   phase-sweep with the tomography protocol, sizes 1 to 3
  fig4cd   phase-sweep with the Bell-basis protocol, sizes 1 to 3
  fig4ef   scaling study over all protocols, sizes 1 to 3
  tableA2  error budget for sizes 1 to 3
  figA3    unitary fidelity across the phase grid

Flags override the config file; --set overrides apply last.";

/// Modular overlap-measurement experiment driver.
#[derive(Parser, Debug)]
#[command(name = "xpv", version, after_help = AFTER_HELP)]
struct Cli {
    /// Experiment (ghz-fidelity, phase-sweep, scaling, budget,
    /// unitary-fidelity) or a preset name.
    command: Option<String>,

    /// TOML config file with flat keys; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Experiment to run; alternative to the positional name.
    #[arg(long, value_name = "NAME")]
    experiment: Option<String>,

    /// Protocols to include (qst, rm, bbm); repeat or comma-separate.
    #[arg(long, value_delimiter = ',', value_name = "NAME")]
    protocol: Vec<String>,

    /// Module size in qubits (1 to 3); scaling runs every size up to it.
    #[arg(long)]
    n: Option<usize>,

    /// Repetitions per measurement setting.
    #[arg(long)]
    shots: Option<u64>,

    /// Seed for every pseudo-random stage.
    #[arg(long)]
    seed: Option<u64>,

    /// Number of points on the phase grid over [0, 2pi].
    #[arg(long)]
    phases: Option<usize>,

    /// Zero all noise rates.
    #[arg(long)]
    noiseless: bool,

    /// Output directory for datasets, reports, and tables.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override one noise parameter (p_1q, p_2q, eps_ro, t1_us, t2_us,
    /// p_th), e.g. --set p_2q=0.02; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(&cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    match experiments::run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
    }
}

/// Resolves the positional experiment or preset name into a layer.
fn preset_layer(name: &str) -> Option<Layer> {
    let mut layer = Layer::default();
    if Experiment::parse(name).is_some() {
        layer.experiment = Some(name.to_string());
        return Some(layer);
    }
    match name {
        "fig4ab" => {
            layer.experiment = Some("phase-sweep".to_string());
            layer.protocols = Some(vec!["qst".to_string()]);
            layer.sizes = Some(vec![1, 2, 3]);
        }
        "fig4cd" => {
            layer.experiment = Some("phase-sweep".to_string());
            layer.protocols = Some(vec!["bbm".to_string()]);
            layer.sizes = Some(vec![1, 2, 3]);
        }
        "fig4ef" => {
            layer.experiment = Some("scaling".to_string());
        }
        "tableA2" | "tablea2" => {
            layer.experiment = Some("budget".to_string());
            layer.sizes = Some(vec![1, 2, 3]);
        }
        "figA3" | "figa3" => {
            layer.experiment = Some("unitary-fidelity".to_string());
        }
        _ => return None,
    }
    Some(layer)
}

/// Merges defaults, config file, preset, and flags into a validated config.
fn build_config(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut layer = Layer::default();
    if let Some(path) = &cli.config {
        layer = layer.merge(config::load_file(path)?);
    }

    let mut violations = Vec::new();
    if let Some(name) = &cli.command {
        match preset_layer(name) {
            Some(preset) => layer = layer.merge(preset),
            None => violations.push(format!(
                "experiment: unknown experiment or preset {name:?}; expected one of {}, \
                 fig4ab, fig4cd, fig4ef, tableA2, figA3",
                Experiment::NAMES.join(", ")
            )),
        }
    }

    let mut flags = Layer {
        experiment: cli.experiment.clone(),
        n: cli.n,
        shots: cli.shots,
        phases: cli.phases,
        seed: cli.seed,
        out: cli.out.clone(),
        ..Layer::default()
    };
    if cli.noiseless {
        flags.noiseless = Some(true);
    }
    if !cli.protocol.is_empty() {
        flags.protocols = Some(cli.protocol.clone());
    }
    for entry in &cli.set {
        match entry.split_once('=') {
            Some((key, value)) => match value.trim().parse::<f64>() {
                Ok(v) => flags.noise.push((key.trim().to_string(), v)),
                Err(_) => violations.push(format!(
                    "{}: cannot parse {:?} as a number",
                    key.trim(),
                    value.trim()
                )),
            },
            None => violations.push(format!("set: expected key=value, got {entry:?}")),
        }
    }
    if !violations.is_empty() {
        return Err(ConfigError(violations));
    }
    config::resolve(layer.merge(flags))
}
