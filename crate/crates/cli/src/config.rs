//! Run configuration: TOML grammar, presets, merging and flag overrides.

use std::path::{Path, PathBuf};

use levsim::experiment::ExperimentConfig;
use levsim::sweep::{Objective, Scenario};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

pub const SCHEMA_VERSION: i64 = 1;
pub const DEFAULT_PRECISION: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    StabilityMap,
    SteadyState,
    Sweep,
    Decoupled,
    Trajectory,
    ExperimentSweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::StabilityMap => "stability-map",
            Command::SteadyState => "steady-state",
            Command::Sweep => "sweep",
            Command::Decoupled => "decoupled",
            Command::Trajectory => "trajectory",
            Command::ExperimentSweep => "experiment-sweep",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: i64,
    pub command: Command,
    pub seed: u64,
    pub precision: usize,
    pub output: OutputConfig,
    pub system: SystemConfig,
    pub measurement: MeasurementConfig,
    pub grid: GridConfig,
    pub sweep: SweepConfig,
    pub stability: StabilityConfig,
    pub decoupled: DecoupledConfig,
    pub trajectory: TrajectoryConfig,
    pub experiment: ExperimentSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Standard output when absent.
    #[serde(default)]
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Dimensionless system, rates in units of `ω_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub delta: f64,
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub eta1: f64,
    pub eta2: f64,
    pub phi: f64,
}

/// Detuning axis shared by the sweeps and the stability map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub delta_min: f64,
    pub delta_max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub scenario: Scenario,
    pub objective: Objective,
    /// `[η₁, η₂]` pairs, one curve each.
    pub efficiencies: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub g_min: f64,
    pub g_max: f64,
    pub g_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoupledConfig {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_points: usize,
    pub eta2: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryMode {
    /// Deterministic mean and covariance.
    Moments,
    /// One stochastic realisation of the conditional mean.
    Stochastic,
    /// Final conditional means of many realisations.
    Ensemble,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub mode: TrajectoryMode,
    pub t_final: f64,
    /// Defaults to a thousandth of a mechanical period.
    #[serde(default)]
    pub dt: Option<f64>,
    pub stride: usize,
    pub feedback: bool,
    pub trajectories: usize,
    pub r0: [f64; 4],
    pub n_cavity: f64,
    pub n_mech: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Trap frequency on resonance, `ω_m0/2π` in Hz.
    pub trap_frequency_hz: f64,
    /// Coupling on resonance, `g₀/2π` in Hz; when set `epsilon_r` is refitted.
    #[serde(default)]
    pub coupling_hz: Option<f64>,
    pub setup: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command: Command::Sweep,
            seed: 0,
            precision: DEFAULT_PRECISION,
            output: OutputConfig {
                path: None,
                format: Format::Csv,
            },
            system: SystemConfig {
                delta: -1.0,
                g: 1.0,
                kappa: 2.0,
                gamma: 0.1,
            },
            measurement: MeasurementConfig {
                eta1: 0.0,
                eta2: 0.0,
                phi: 0.0,
            },
            grid: GridConfig {
                delta_min: -6.0,
                delta_max: 6.0,
                points: 241,
            },
            sweep: SweepConfig {
                scenario: Scenario::Unconditional,
                objective: Objective::Each,
                efficiencies: vec![[0.0, 0.0]],
            },
            stability: StabilityConfig {
                g_min: 0.0,
                g_max: 3.0,
                g_points: 61,
            },
            decoupled: DecoupledConfig {
                gamma_min: 0.01,
                gamma_max: 1.0,
                gamma_points: 100,
                eta2: vec![0.2, 0.5, 0.8, 1.0],
            },
            trajectory: TrajectoryConfig {
                mode: TrajectoryMode::Moments,
                t_final: 20.0,
                dt: None,
                stride: 100,
                feedback: false,
                trajectories: 100,
                r0: [0.0; 4],
                n_cavity: 0.0,
                n_mech: 0.0,
            },
            experiment: ExperimentSection {
                trap_frequency_hz: 33e3,
                coupling_hz: Some(20e3),
                setup: ExperimentConfig::default(),
            },
        }
    }
}

/// Built-in configurations, one per results figure, in listing order.
pub const PRESETS: [(&str, &str); 8] = [
    (
        "fig1",
        "stability map over detuning and coupling, kappa = 2, Gamma = 0.1",
    ),
    (
        "fig2",
        "unconditional steady state versus detuning, g = 1, kappa = 2, Gamma = 0.1",
    ),
    (
        "fig3",
        "optimised cavity homodyne, eta1 in {0, 0.4, 1}, eta2 = 0",
    ),
    (
        "fig4",
        "position monitoring, eta1 = 0, eta2 in {0.2, 0.5, 0.8, 1}",
    ),
    (
        "fig5",
        "decoupled oscillator versus Gamma, eta2 in {0.2, 0.5, 0.8, 1}",
    ),
    (
        "fig6",
        "cavity homodyne (eta1 = 1) and position, eta2 in {0, 0.5, 0.8, 1}",
    ),
    (
        "fig7",
        "experiment model, eta1 = 1, eta2 in {0, 0.2, 0.5, 1}",
    ),
    ("fig8", "experiment model, eta1 = 0.5, eta2 = 0.2"),
];

pub fn preset(name: &str) -> Option<RunConfig> {
    let base = RunConfig::default();
    let sweep = |command, scenario, efficiencies: Vec<[f64; 2]>| RunConfig {
        command,
        sweep: SweepConfig {
            scenario,
            objective: Objective::Each,
            efficiencies,
        },
        ..base.clone()
    };
    let config = match name {
        "fig1" => RunConfig {
            command: Command::StabilityMap,
            ..base.clone()
        },
        "fig2" => sweep(Command::Sweep, Scenario::Unconditional, vec![[0.0, 0.0]]),
        "fig3" => sweep(
            Command::Sweep,
            Scenario::CavityHomodyne,
            vec![[0.0, 0.0], [0.4, 0.0], [1.0, 0.0]],
        ),
        "fig4" => sweep(
            Command::Sweep,
            Scenario::PositionOnly,
            vec![[0.0, 0.2], [0.0, 0.5], [0.0, 0.8], [0.0, 1.0]],
        ),
        "fig5" => RunConfig {
            command: Command::Decoupled,
            ..base.clone()
        },
        "fig6" => sweep(
            Command::Sweep,
            Scenario::Both,
            vec![[1.0, 0.0], [1.0, 0.5], [1.0, 0.8], [1.0, 1.0]],
        ),
        "fig7" => sweep(
            Command::ExperimentSweep,
            Scenario::Both,
            vec![[1.0, 0.0], [1.0, 0.2], [1.0, 0.5], [1.0, 1.0]],
        ),
        "fig8" => sweep(Command::ExperimentSweep, Scenario::Both, vec![[0.5, 0.2]]),
        _ => return None,
    };
    Some(config)
}

/// Sources of a run, applied in order: preset (or defaults), config file, `--set` overrides.
#[derive(Clone, Debug, Default)]
pub struct Sources {
    pub preset: Option<String>,
    pub config: Option<PathBuf>,
    pub overrides: Vec<String>,
}

pub fn resolve(sources: &Sources) -> Result<RunConfig, CliError> {
    let mut table = match &sources.preset {
        Some(name) => {
            let config = preset(name).ok_or_else(|| {
                let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                CliError::Config(format!(
                    "unknown preset {name:?}; known: {}",
                    known.join(", ")
                ))
            })?;
            to_table(&config)?
        }
        None => {
            let mut t = to_table(&RunConfig::default())?;
            // the command must come from the user when no preset is named
            t.remove("command");
            t
        }
    };
    if let Some(path) = &sources.config {
        let file = load_file(path)?;
        match file.get("schema") {
            Some(Value::Integer(SCHEMA_VERSION)) => {}
            Some(v) => {
                return Err(CliError::Config(format!(
                    "{}: unsupported schema {v}, expected {SCHEMA_VERSION}",
                    path.display()
                )))
            }
            None => {
                return Err(CliError::Config(format!(
                    "{}: missing `schema = {SCHEMA_VERSION}`",
                    path.display()
                )))
            }
        }
        merge(&mut table, file);
    }
    for item in &sources.overrides {
        apply_override(&mut table, item)?;
    }
    if !table.contains_key("command") {
        return Err(CliError::Config(
            "no command given; use --preset, --config or --set command=...".into(),
        ));
    }
    let config: RunConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().trim().to_string()))?;
    if config.schema != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "unsupported schema {}, expected {SCHEMA_VERSION}",
            config.schema
        )));
    }
    Ok(config)
}

fn to_table(config: &RunConfig) -> Result<Table, CliError> {
    Table::try_from(config).map_err(|e| CliError::Config(e.to_string()))
}

/// Reads a TOML config, or the config embedded in an earlier `.csv` / `.json` output.
fn load_file(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let located = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let header: String = text
                .lines()
                .map_while(|l| l.strip_prefix('#'))
                .map(|l| format!("{}\n", l.strip_prefix(' ').unwrap_or(l)))
                .collect();
            header
                .parse::<Table>()
                .map_err(|e| located(e.message().to_string()))
        }
        Some("json") => {
            let doc: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| located(e.to_string()))?;
            let config: RunConfig = serde_json::from_value(doc["config"].clone())
                .map_err(|e| located(format!("embedded config: {e}")))?;
            to_table(&config)
        }
        _ => text
            .parse::<Table>()
            .map_err(|e| located(e.message().trim().to_string())),
    }
}

/// Tables merge key by key; every other value replaces the base.
fn merge(base: &mut Table, over: Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

/// `a.b.c=value`; the value is read as TOML, or as a bare string if that fails.
fn apply_override(table: &mut Table, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {item:?} is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!(
            "override {item:?} has an empty key"
        )));
    }
    let value = format!("v = {}", raw.trim())
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut node = table;
    for p in parents {
        let entry = node
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override {item:?}: {p} is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

/// Canonical TOML text of a resolved config.
pub fn render(config: &RunConfig) -> String {
    toml::to_string(config).expect("run config serialises")
}
