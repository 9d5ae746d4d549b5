//! Run configuration: defaults, file loading, overrides, validation.
//!
//! Precedence is fixed: built-in defaults, then the config file, then a
//! preset, then explicit flags, then `--set` noise overrides. Validation
//! collects every violation and tags each with the key it concerns, so a
//! bad invocation is diagnosed in one pass.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use xpv_core::noise::NoiseModel;
use xpv_core::protocols::Protocol;

pub const DEFAULT_SHOTS: u64 = 10_000;
pub const DEFAULT_PHASES: usize = 15;
pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_OUT: &str = "out";

/// Noise parameters reachable through the config file and `--set`.
pub const NOISE_KEYS: [&str; 6] = ["p_1q", "p_2q", "eps_ro", "t1_us", "t2_us", "p_th"];

/// Named pipelines the driver can execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    GhzFidelity,
    PhaseSweep,
    Scaling,
    Budget,
    UnitaryFidelity,
}

impl Experiment {
    pub const NAMES: [&'static str; 5] = [
        "ghz-fidelity",
        "phase-sweep",
        "scaling",
        "budget",
        "unitary-fidelity",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::GhzFidelity => "ghz-fidelity",
            Experiment::PhaseSweep => "phase-sweep",
            Experiment::Scaling => "scaling",
            Experiment::Budget => "budget",
            Experiment::UnitaryFidelity => "unitary-fidelity",
        }
    }

    pub fn parse(name: &str) -> Option<Experiment> {
        match name {
            "ghz-fidelity" => Some(Experiment::GhzFidelity),
            "phase-sweep" => Some(Experiment::PhaseSweep),
            "scaling" => Some(Experiment::Scaling),
            "budget" => Some(Experiment::Budget),
            "unitary-fidelity" => Some(Experiment::UnitaryFidelity),
            _ => None,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One or more configuration violations, each prefixed with its key path.
#[derive(Debug)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "config error: {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Partially specified configuration. Layers merge field by field with the
/// later layer winning; noise overrides accumulate in application order.
#[derive(Debug, Default, Clone)]
pub struct Layer {
    pub experiment: Option<String>,
    pub n: Option<usize>,
    /// Preset-only multi-size request; an explicit `n` takes precedence.
    pub sizes: Option<Vec<usize>>,
    pub protocols: Option<Vec<String>>,
    pub shots: Option<u64>,
    pub phases: Option<usize>,
    pub seed: Option<u64>,
    pub noiseless: Option<bool>,
    pub out: Option<PathBuf>,
    pub noise: Vec<(String, f64)>,
}

impl Layer {
    pub fn merge(mut self, over: Layer) -> Layer {
        if over.experiment.is_some() {
            self.experiment = over.experiment;
        }
        if over.n.is_some() {
            self.n = over.n;
        }
        if over.sizes.is_some() {
            self.sizes = over.sizes;
        }
        if over.protocols.is_some() {
            self.protocols = over.protocols;
        }
        if over.shots.is_some() {
            self.shots = over.shots;
        }
        if over.phases.is_some() {
            self.phases = over.phases;
        }
        if over.seed.is_some() {
            self.seed = over.seed;
        }
        if over.noiseless.is_some() {
            self.noiseless = over.noiseless;
        }
        if over.out.is_some() {
            self.out = over.out;
        }
        self.noise.extend(over.noise);
        self
    }
}

/// Reads a flat TOML config file into a layer.
pub fn load_file(path: &Path) -> Result<Layer, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ConfigError(vec![format!("config: cannot read {}: {e}", path.display())])
    })?;
    parse_toml(&text)
}

/// Parses flat TOML keys; unknown keys and wrong types are violations.
pub fn parse_toml(text: &str) -> Result<Layer, ConfigError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e| ConfigError(vec![format!("config: {e}")]))?;
    let mut layer = Layer::default();
    let mut violations = Vec::new();
    for (key, value) in &table {
        match key.as_str() {
            "experiment" => match value.as_str() {
                Some(s) => layer.experiment = Some(s.to_string()),
                None => violations.push(format!("{key}: expected a string")),
            },
            "n" => match value.as_integer() {
                Some(v) if v >= 0 => layer.n = Some(v as usize),
                _ => violations.push(format!("{key}: expected a non-negative integer")),
            },
            "protocol" | "protocols" => match protocols_value(value) {
                Some(names) => layer.protocols = Some(names),
                None => violations.push(format!(
                    "{key}: expected a protocol name or an array of names"
                )),
            },
            "shots" => match value.as_integer() {
                Some(v) if v >= 0 => layer.shots = Some(v as u64),
                _ => violations.push(format!("{key}: expected a non-negative integer")),
            },
            "phases" => match value.as_integer() {
                Some(v) if v >= 0 => layer.phases = Some(v as usize),
                _ => violations.push(format!("{key}: expected a non-negative integer")),
            },
            "seed" => match value.as_integer() {
                Some(v) if v >= 0 => layer.seed = Some(v as u64),
                _ => violations.push(format!("{key}: expected a non-negative integer")),
            },
            "noiseless" => match value.as_bool() {
                Some(v) => layer.noiseless = Some(v),
                None => violations.push(format!("{key}: expected a boolean")),
            },
            "out" => match value.as_str() {
                Some(s) => layer.out = Some(PathBuf::from(s)),
                None => violations.push(format!("{key}: expected a string path")),
            },
            k if NOISE_KEYS.contains(&k) => match toml_number(value) {
                Some(v) => layer.noise.push((key.clone(), v)),
                None => violations.push(format!("{key}: expected a number")),
            },
            _ => violations.push(format!("{key}: unknown key")),
        }
    }
    if violations.is_empty() {
        Ok(layer)
    } else {
        Err(ConfigError(violations))
    }
}

fn protocols_value(value: &toml::Value) -> Option<Vec<String>> {
    match value {
        toml::Value::String(s) => Some(
            s.split(',')
                .map(|p| p.trim().to_string())
                .filter(|p| !p.is_empty())
                .collect(),
        ),
        toml::Value::Array(items) => items
            .iter()
            .map(|v| v.as_str().map(|s| s.to_string()))
            .collect(),
        _ => None,
    }
}

fn toml_number(value: &toml::Value) -> Option<f64> {
    match value {
        toml::Value::Float(v) => Some(*v),
        toml::Value::Integer(v) => Some(*v as f64),
        _ => None,
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Module sizes to run, each 1 to 3 qubits.
    pub sizes: Vec<usize>,
    pub protocols: Vec<Protocol>,
    pub noise: NoiseModel,
    pub noiseless: bool,
    /// Repetitions per measurement setting.
    pub shots: u64,
    /// Points on the phase grid over `[0, 2pi]`.
    pub phases: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Comment block with the full resolved configuration and seed;
    /// prepended to every output file. The output directory is the one
    /// field left out: it decides where files land, not what they hold,
    /// and runs into different directories must stay byte-identical.
    pub fn header(&self) -> String {
        let names: Vec<&str> = self.protocols.iter().map(|p| p.name()).collect();
        let mut s = String::new();
        let _ = writeln!(s, "# experiment = {:?}", self.experiment.name());
        let _ = writeln!(s, "# sizes = {:?}", self.sizes);
        let _ = writeln!(s, "# protocols = {names:?}");
        let _ = writeln!(s, "# noiseless = {}", self.noiseless);
        let _ = writeln!(s, "# p_1q = {}", self.noise.p_1q);
        let _ = writeln!(s, "# p_2q = {}", self.noise.p_2q);
        let _ = writeln!(s, "# eps_ro = {}", self.noise.eps_ro);
        let _ = writeln!(s, "# t1_us = {}", self.noise.t1_us);
        let _ = writeln!(s, "# t2_us = {}", self.noise.t2_us);
        let _ = writeln!(s, "# p_th = {}", self.noise.p_th);
        let _ = writeln!(s, "# shots = {}", self.shots);
        let _ = writeln!(s, "# phases = {}", self.phases);
        let _ = writeln!(s, "# seed = {}", self.seed);
        s
    }
}

/// Resolves a merged layer against defaults and validates it. Collects
/// every violation instead of stopping at the first.
pub fn resolve(layer: Layer) -> Result<ExperimentConfig, ConfigError> {
    let mut violations = Vec::new();

    let experiment = match &layer.experiment {
        None => {
            violations.push(format!(
                "experiment: required; one of {}",
                Experiment::NAMES.join(", ")
            ));
            None
        }
        Some(name) => {
            let parsed = Experiment::parse(name);
            if parsed.is_none() {
                violations.push(format!(
                    "experiment: unknown experiment {name:?}; expected one of {}",
                    Experiment::NAMES.join(", ")
                ));
            }
            parsed
        }
    };

    let protocols = match &layer.protocols {
        None => Protocol::ALL.to_vec(),
        Some(names) => {
            let mut list: Vec<Protocol> = Vec::new();
            for name in names {
                let parsed = match name.as_str() {
                    "qst" => Some(Protocol::Qst),
                    "rm" => Some(Protocol::Rm),
                    "bbm" => Some(Protocol::Bbm),
                    _ => {
                        violations.push(format!(
                            "protocol: unknown protocol {name:?}; expected qst, rm, bbm"
                        ));
                        None
                    }
                };
                if let Some(p) = parsed {
                    if !list.contains(&p) {
                        list.push(p);
                    }
                }
            }
            if list.is_empty() && violations.is_empty() {
                violations.push("protocol: at least one protocol required".to_string());
            }
            list
        }
    };

    let noiseless = layer.noiseless.unwrap_or(false);
    let mut noise = if noiseless {
        NoiseModel::noiseless()
    } else {
        NoiseModel::median()
    };
    for (key, value) in &layer.noise {
        match key.as_str() {
            "p_1q" => noise.p_1q = *value,
            "p_2q" => noise.p_2q = *value,
            "eps_ro" => noise.eps_ro = *value,
            "t1_us" => noise.t1_us = *value,
            "t2_us" => noise.t2_us = *value,
            "p_th" => noise.p_th = *value,
            _ => violations.push(format!(
                "set: unknown noise key {key:?}; expected {}",
                NOISE_KEYS.join(", ")
            )),
        }
    }
    for (key, value) in [
        ("p_1q", noise.p_1q),
        ("p_2q", noise.p_2q),
        ("eps_ro", noise.eps_ro),
        ("p_th", noise.p_th),
    ] {
        if !(0.0..=1.0).contains(&value) || value.is_nan() {
            violations.push(format!("{key}: probability {value} outside [0, 1]"));
        }
    }
    let mut times_valid = true;
    for (key, value) in [("t1_us", noise.t1_us), ("t2_us", noise.t2_us)] {
        if !(value > 0.0) {
            violations.push(format!("{key}: relaxation time {value} must be positive"));
            times_valid = false;
        }
    }
    if times_valid && noise.t2_us > 2.0 * noise.t1_us {
        violations.push(format!(
            "t2_us: unphysical pair T2 = {} with T1 = {}; T2 must not exceed 2*T1",
            noise.t2_us, noise.t1_us
        ));
    }

    let default_n = match experiment {
        Some(Experiment::UnitaryFidelity) => 2,
        _ => 3,
    };
    let n = layer.n.unwrap_or(default_n);
    if !(1..=3).contains(&n) {
        violations.push(format!("n: module size {n} outside [1, 3]"));
    } else if experiment == Some(Experiment::UnitaryFidelity) && n > 2 {
        violations.push("n: unitary-fidelity supports modules of at most 2 qubits".to_string());
    }
    let sizes: Vec<usize> = match (&layer.n, &layer.sizes) {
        (None, Some(preset)) => {
            for &size in preset {
                if !(1..=3).contains(&size) {
                    violations.push(format!("n: module size {size} outside [1, 3]"));
                }
            }
            preset.clone()
        }
        _ if experiment == Some(Experiment::Scaling) => (1..=n).collect(),
        _ => vec![n],
    };

    let shots = layer.shots.unwrap_or(DEFAULT_SHOTS);
    if shots == 0 {
        violations.push("shots: must be at least 1".to_string());
    }
    let phases = layer.phases.unwrap_or(DEFAULT_PHASES);
    if phases == 0 {
        violations.push("phases: must be at least 1".to_string());
    }
    if noiseless && experiment == Some(Experiment::Budget) {
        violations.push("noiseless: the error budget needs a non-ideal noise model".to_string());
    }

    if !violations.is_empty() {
        return Err(ConfigError(violations));
    }
    Ok(ExperimentConfig {
        experiment: experiment.expect("validated above"),
        sizes,
        protocols,
        noise,
        noiseless,
        shots,
        phases,
        seed: layer.seed.unwrap_or(DEFAULT_SEED),
        out: layer.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
    })
}
