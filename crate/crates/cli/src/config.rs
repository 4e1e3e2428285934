//! Flat key/value configuration handling and scenario assembly.
//!
//! Settings are resolved in three layers: built-in defaults, then the
//! optional TOML config file, then command-line overrides. The config file
//! must stay flat: scalar values or arrays of scalars, no nested tables.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nbsync::{
    FrameLayout, LoopConfig, Modulation, PreambleSpec, PriorLlrs, PulseParams, ReportFormat,
    Scenario, SyncMode, TanhShape, DEFAULT_SATURATION_THRESHOLD,
};

/// Which phase of the program an error belongs to, driving the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Bad configuration or arguments (exit code 1).
    Config,
    /// Failure while executing a valid configuration (exit code 2).
    Runtime,
}

/// Error with the stage it occurred in.
#[derive(Debug)]
pub struct CliError {
    pub stage: Stage,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            stage: Stage::Config,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError {
            stage: Stage::Runtime,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Frame preset selecting one of the layout constructors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    /// Preamble, PLCP header and DQPSK payload (201 symbols).
    Standard,
    /// Payload-only block: cold acquisition in the payload mode.
    Payload,
    /// Preamble then payload: pilot acquisition, steady-state payload.
    PreamblePayload,
}

impl FromStr for FrameKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(FrameKind::Standard),
            "payload" => Ok(FrameKind::Payload),
            "preamble-payload" => Ok(FrameKind::PreamblePayload),
            other => Err(CliError::config(format!(
                "frame: expected standard, payload or preamble-payload, got `{other}`"
            ))),
        }
    }
}

fn parse_modulation(s: &str) -> Result<Modulation, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "dbpsk" => Ok(Modulation::Dbpsk),
        "dqpsk" => Ok(Modulation::Dqpsk),
        other => Err(CliError::config(format!(
            "payload_modulation: expected dbpsk or dqpsk, got `{other}`"
        ))),
    }
}

fn parse_mode(s: &str) -> Result<SyncMode, CliError> {
    s.parse::<SyncMode>()
        .map_err(|e| CliError::config(e.to_string()))
}

fn parse_format(s: &str) -> Result<ReportFormat, CliError> {
    s.parse::<ReportFormat>()
        .map_err(|e| CliError::config(e.to_string()))
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub snr_db: Option<Vec<f64>>,
    pub tau: Option<Vec<f64>>,
    pub modes: Option<Vec<String>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub mu: Option<f64>,
    pub rolloff: Option<f64>,
    pub sps: Option<usize>,
    pub frame: Option<String>,
    pub payload_modulation: Option<String>,
    pub payload_symbols: Option<usize>,
    pub lowcomplexity_tanh: bool,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub grid_points: Option<usize>,
    pub frames: Option<usize>,
}

/// Fully resolved program settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub scenario: Scenario,
    pub out: PathBuf,
    pub format: ReportFormat,
    pub grid_points: usize,
    pub frames: usize,
}

struct Builder {
    snr_db: Vec<f64>,
    tau: Vec<f64>,
    modes: Vec<SyncMode>,
    trials: usize,
    seed: u64,
    mu: f64,
    initial_estimate: f64,
    clamp_limit: f64,
    rolloff: f64,
    span: usize,
    sps: usize,
    frame: FrameKind,
    payload_modulation: Modulation,
    payload_symbols: usize,
    lowcomplexity_tanh: bool,
    tanh_threshold: f64,
    prior_llr_re: f64,
    prior_llr_im: f64,
    out: PathBuf,
    format: ReportFormat,
    grid_points: usize,
    frames: usize,
}

impl Builder {
    fn defaults() -> Self {
        let scenario = Scenario::default();
        Builder {
            snr_db: scenario.snr_db,
            tau: scenario.tau,
            modes: scenario.modes,
            trials: scenario.trials,
            seed: scenario.master_seed,
            mu: scenario.loop_config.step_size,
            initial_estimate: scenario.loop_config.initial_estimate,
            clamp_limit: scenario.loop_config.clamp_limit,
            rolloff: scenario.pulse.rolloff,
            span: scenario.pulse.span,
            sps: scenario.pulse.sps,
            frame: FrameKind::Standard,
            payload_modulation: Modulation::Dqpsk,
            payload_symbols: 100,
            lowcomplexity_tanh: false,
            tanh_threshold: DEFAULT_SATURATION_THRESHOLD,
            prior_llr_re: 0.0,
            prior_llr_im: 0.0,
            out: PathBuf::from("."),
            format: ReportFormat::Csv,
            grid_points: 61,
            frames: 200,
        }
    }

    fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        for (key, value) in &table {
            self.apply_key(key, value)?;
        }
        Ok(())
    }

    fn apply_key(&mut self, key: &str, value: &toml::Value) -> Result<(), CliError> {
        match key {
            "snr_db" => self.snr_db = float_list(key, value)?,
            "tau" => self.tau = float_list(key, value)?,
            "mode" => {
                self.modes = string_list(key, value)?
                    .iter()
                    .map(|s| parse_mode(s))
                    .collect::<Result<Vec<_>, _>>()?;
            }
            "trials" => self.trials = count(key, value)?,
            "seed" => self.seed = unsigned(key, value)?,
            "mu" => self.mu = float(key, value)?,
            "initial_estimate" => self.initial_estimate = float(key, value)?,
            "clamp_limit" => self.clamp_limit = float(key, value)?,
            "rolloff" => self.rolloff = float(key, value)?,
            "span" => self.span = count(key, value)?,
            "sps" => self.sps = count(key, value)?,
            "frame" => self.frame = string(key, value)?.parse()?,
            "payload_modulation" => {
                self.payload_modulation = parse_modulation(&string(key, value)?)?;
            }
            "payload_symbols" => self.payload_symbols = count(key, value)?,
            "lowcomplexity_tanh" => self.lowcomplexity_tanh = boolean(key, value)?,
            "tanh_threshold" => self.tanh_threshold = float(key, value)?,
            "prior_llr_re" => self.prior_llr_re = float(key, value)?,
            "prior_llr_im" => self.prior_llr_im = float(key, value)?,
            "out" => self.out = PathBuf::from(string(key, value)?),
            "format" => self.format = parse_format(&string(key, value)?)?,
            "grid_points" => self.grid_points = count(key, value)?,
            "frames" => self.frames = count(key, value)?,
            other => {
                return Err(CliError::config(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    fn apply_overrides(&mut self, cli: &Overrides) -> Result<(), CliError> {
        if let Some(v) = &cli.snr_db {
            self.snr_db = v.clone();
        }
        if let Some(v) = &cli.tau {
            self.tau = v.clone();
        }
        if let Some(v) = &cli.modes {
            self.modes = v
                .iter()
                .map(|s| parse_mode(s))
                .collect::<Result<Vec<_>, _>>()?;
        }
        if let Some(v) = cli.trials {
            self.trials = v;
        }
        if let Some(v) = cli.seed {
            self.seed = v;
        }
        if let Some(v) = cli.mu {
            self.mu = v;
        }
        if let Some(v) = cli.rolloff {
            self.rolloff = v;
        }
        if let Some(v) = cli.sps {
            self.sps = v;
        }
        if let Some(v) = &cli.frame {
            self.frame = v.parse()?;
        }
        if let Some(v) = &cli.payload_modulation {
            self.payload_modulation = parse_modulation(v)?;
        }
        if let Some(v) = cli.payload_symbols {
            self.payload_symbols = v;
        }
        if cli.lowcomplexity_tanh {
            self.lowcomplexity_tanh = true;
        }
        if let Some(v) = &cli.out {
            self.out = v.clone();
        }
        if let Some(v) = &cli.format {
            self.format = parse_format(v)?;
        }
        if let Some(v) = cli.grid_points {
            self.grid_points = v;
        }
        if let Some(v) = cli.frames {
            self.frames = v;
        }
        Ok(())
    }

    fn finish(self) -> Result<Settings, CliError> {
        let layout = match self.frame {
            FrameKind::Standard => FrameLayout::standard(),
            FrameKind::Payload => {
                FrameLayout::payload_block(self.payload_modulation, self.payload_symbols)
                    .map_err(|e| CliError::config(e.to_string()))?
            }
            FrameKind::PreamblePayload => {
                FrameLayout::preamble_payload(self.payload_modulation, self.payload_symbols)
                    .map_err(|e| CliError::config(e.to_string()))?
            }
        };
        let tanh = if self.lowcomplexity_tanh {
            TanhShape::Saturating {
                threshold: self.tanh_threshold,
            }
        } else {
            TanhShape::Exact
        };
        let scenario = Scenario {
            snr_db: self.snr_db,
            tau: self.tau,
            modes: self.modes,
            trials: self.trials,
            master_seed: self.seed,
            layout,
            preamble: PreambleSpec::default(),
            pulse: PulseParams {
                rolloff: self.rolloff,
                span: self.span,
                sps: self.sps,
            },
            loop_config: LoopConfig {
                step_size: self.mu,
                initial_estimate: self.initial_estimate,
                clamp_limit: self.clamp_limit,
                tanh,
                priors: PriorLlrs {
                    re: self.prior_llr_re,
                    im: self.prior_llr_im,
                },
                ..LoopConfig::default()
            },
        };
        scenario
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        if self.grid_points < 2 {
            return Err(CliError::config("grid_points: must be at least 2"));
        }
        if self.frames == 0 {
            return Err(CliError::config("frames: must be at least 1"));
        }
        Ok(Settings {
            scenario,
            out: self.out,
            format: self.format,
            grid_points: self.grid_points,
            frames: self.frames,
        })
    }
}

/// Resolves defaults, config file and command-line overrides into settings.
pub fn assemble(config_path: Option<&Path>, cli: &Overrides) -> Result<Settings, CliError> {
    let mut builder = Builder::defaults();
    if let Some(path) = config_path {
        builder.apply_file(path)?;
    }
    builder.apply_overrides(cli)?;
    builder.finish()
}

fn type_err(key: &str, expected: &str, value: &toml::Value) -> CliError {
    CliError::config(format!("{key}: expected {expected}, got {value}"))
}

fn float(key: &str, value: &toml::Value) -> Result<f64, CliError> {
    match value {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::String(s) => s
            .trim()
            .parse()
            .map_err(|_| type_err(key, "a number", value)),
        _ => Err(type_err(key, "a number", value)),
    }
}

fn float_list(key: &str, value: &toml::Value) -> Result<Vec<f64>, CliError> {
    match value {
        toml::Value::Array(items) => items.iter().map(|v| float(key, v)).collect(),
        toml::Value::String(s) => s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse()
                    .map_err(|_| CliError::config(format!("{key}: bad number `{part}`")))
            })
            .collect(),
        single => Ok(vec![float(key, single)?]),
    }
}

fn string(key: &str, value: &toml::Value) -> Result<String, CliError> {
    match value {
        toml::Value::String(s) => Ok(s.clone()),
        _ => Err(type_err(key, "a string", value)),
    }
}

fn string_list(key: &str, value: &toml::Value) -> Result<Vec<String>, CliError> {
    match value {
        toml::Value::Array(items) => items.iter().map(|v| string(key, v)).collect(),
        toml::Value::String(s) => Ok(s.split(',').map(|p| p.trim().to_string()).collect()),
        _ => Err(type_err(key, "a string or list of strings", value)),
    }
}

fn boolean(key: &str, value: &toml::Value) -> Result<bool, CliError> {
    match value {
        toml::Value::Boolean(b) => Ok(*b),
        _ => Err(type_err(key, "a boolean", value)),
    }
}

fn unsigned(key: &str, value: &toml::Value) -> Result<u64, CliError> {
    match value {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(type_err(key, "a non-negative integer", value)),
    }
}

fn count(key: &str, value: &toml::Value) -> Result<usize, CliError> {
    match value {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(type_err(key, "a non-negative integer", value)),
    }
}
