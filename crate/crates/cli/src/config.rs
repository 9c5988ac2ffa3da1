//! Experiment configuration files.
//!
//! Flat `key = value` pairs under bracketed section headers (TOML syntax):
//!
//! ```toml
//! [pb]
//! positions = [[0.0, 0.0]]    # or: square_side_m = 20.0
//! antennas = 4
//! transmit_power_w = 1.0
//!
//! [devices]
//! deployment = "disk"         # or "fixed" with positions = [[x, y], ...]
//! radius_m = 15.0
//! count = 10
//!
//! [run]
//! strategy = "AA_SS"
//! trials = 20000
//! seed = 42
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;
use wetsim_core::montecarlo::{square_layout, DEFAULT_SEED};
use wetsim_core::{
    Deployment, FadingMode, HarvesterModel, HeatmapSpec, PathLossModel, Point2D, PrecoderOptions,
    RicianProfile, Scenario, SignalCorrelation, StrategyKind, WetError,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("{location}`{key}`: {message}")]
    Invalid {
        key: String,
        location: String,
        message: String,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    pb: PbSection,
    #[serde(default)]
    devices: DeviceSection,
    #[serde(default)]
    channel: ChannelSection,
    #[serde(default)]
    harvester: HarvesterSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    precoder: PrecoderSection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    correlation: CorrelationSection,
    #[serde(default)]
    heatmap: HeatmapSection,
    #[serde(default)]
    oracle: OracleSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PbSection {
    positions: Option<Vec<[f64; 2]>>,
    square_side_m: Option<f64>,
    antennas: Option<usize>,
    transmit_power_w: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceSection {
    deployment: Option<String>,
    radius_m: Option<f64>,
    count: Option<usize>,
    positions: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    path_loss_exponent: Option<f64>,
    ref_loss_db: Option<f64>,
    ref_distance_m: Option<f64>,
    k_max: Option<f64>,
    k_cutoff_m: Option<f64>,
    fading: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct HarvesterSection {
    sensitivity_dbm: Option<f64>,
    saturation_dbm: Option<f64>,
    efficiency: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    strategy: Option<String>,
    strategies: Option<Vec<String>>,
    correlation: Option<String>,
    trials: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrecoderSection {
    restarts: Option<usize>,
    tol: Option<f64>,
    max_iterations: Option<usize>,
    activation: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    n_values: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorrelationSection {
    m_values: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeatmapSection {
    x_min: Option<f64>,
    x_max: Option<f64>,
    y_min: Option<f64>,
    y_max: Option<f64>,
    resolution: Option<usize>,
    nx: Option<usize>,
    ny: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleSection {
    instances: Option<usize>,
    n_values: Option<Vec<usize>>,
    grid_resolution: Option<usize>,
    radius_m: Option<f64>,
    max_gap: Option<f64>,
}

/// Parameters of the `oracle` subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub instances: usize,
    pub n_values: Vec<usize>,
    pub grid_resolution: usize,
    pub radius_m: f64,
    pub max_gap: f64,
}

/// Fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Strategies compared by `sweep` and `correlation`.
    pub strategies: Vec<StrategyKind>,
    pub n_values: Vec<usize>,
    pub m_values: Vec<usize>,
    pub heatmap: HeatmapSpec,
    pub oracle: OracleConfig,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        parse_config(&text)
    }
}

/// Line number of `key` inside `[section]`, for diagnostics.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
        } else if current == section {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        let location = locate(self.text, section, key)
            .map(|l| format!("line {l}: "))
            .unwrap_or_default();
        ConfigError::Invalid {
            key: format!("{section}.{key}"),
            location,
            message: message.into(),
        }
    }

    fn wet(&self, section: &str, key: &str, e: WetError) -> ConfigError {
        let message = match e {
            WetError::InvalidParameter { reason, .. } => reason,
            other => other.to_string(),
        };
        self.err(section, key, message)
    }
}

fn points(raw: &[[f64; 2]]) -> Result<Vec<Point2D>, WetError> {
    raw.iter().map(|&[x, y]| Point2D::new(x, y)).collect()
}

fn positive(ctx: &Ctx, section: &str, key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ctx.err(section, key, format!("{key} must be positive")))
    }
}

/// Parses and validates a configuration. Every scenario invariant is checked
/// here so that no experiment starts with an invalid setup.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let ctx = Ctx { text };

    let pb_positions = match (&raw.pb.positions, raw.pb.square_side_m) {
        (Some(_), Some(_)) => {
            return Err(ctx.err(
                "pb",
                "square_side_m",
                "give either positions or square_side_m, not both",
            ))
        }
        (Some(p), None) => {
            if p.is_empty() {
                return Err(ctx.err("pb", "positions", "at least one power beacon is required"));
            }
            points(p).map_err(|e| ctx.wet("pb", "positions", e))?
        }
        (None, Some(side)) => square_layout(positive(&ctx, "pb", "square_side_m", side)?),
        (None, None) => vec![Point2D::origin()],
    };
    let antennas = raw.pb.antennas.unwrap_or(4);
    if antennas == 0 {
        return Err(ctx.err("pb", "antennas", "antennas must be at least 1"));
    }
    let transmit_power_w = positive(
        &ctx,
        "pb",
        "transmit_power_w",
        raw.pb.transmit_power_w.unwrap_or(1.0),
    )?;

    let deployment =
        match raw
            .devices
            .deployment
            .as_deref()
            .unwrap_or(if raw.devices.positions.is_some() {
                "fixed"
            } else {
                "disk"
            }) {
            "disk" => {
                if raw.devices.positions.is_some() {
                    return Err(ctx.err(
                        "devices",
                        "positions",
                        "positions require deployment = \"fixed\"",
                    ));
                }
                let radius = positive(
                    &ctx,
                    "devices",
                    "radius_m",
                    raw.devices.radius_m.unwrap_or(15.0),
                )?;
                let count = raw.devices.count.unwrap_or(10);
                if count == 0 {
                    return Err(ctx.err("devices", "count", "count must be at least 1"));
                }
                Deployment::UniformDisk { radius, count }
            }
            "fixed" => {
                if raw.devices.radius_m.is_some() || raw.devices.count.is_some() {
                    return Err(ctx.err(
                        "devices",
                        "deployment",
                        "fixed deployments take positions only",
                    ));
                }
                let p = raw.devices.positions.as_ref().ok_or_else(|| {
                    ctx.err("devices", "positions", "fixed deployment needs positions")
                })?;
                if p.is_empty() {
                    return Err(ctx.err("devices", "positions", "at least one device is required"));
                }
                Deployment::Fixed(points(p).map_err(|e| ctx.wet("devices", "positions", e))?)
            }
            other => {
                return Err(ctx.err(
                    "devices",
                    "deployment",
                    format!("unknown deployment `{other}` (expected disk or fixed)"),
                ))
            }
        };

    let path_loss = PathLossModel {
        exponent: raw.channel.path_loss_exponent.unwrap_or(3.0),
        ref_loss_db: raw.channel.ref_loss_db.unwrap_or(26.0),
        ref_distance_m: raw.channel.ref_distance_m.unwrap_or(1.0),
    };
    path_loss.validate().map_err(|e| match &e {
        WetError::InvalidParameter { name, .. } | WetError::NonFinite { name, .. } => {
            ctx.wet("channel", name, e.clone())
        }
        _ => ctx.wet("channel", "path_loss_exponent", e.clone()),
    })?;
    let rician = RicianProfile {
        k_max: raw.channel.k_max.unwrap_or(15.0),
        cutoff_m: raw.channel.k_cutoff_m.unwrap_or(10.0),
    };
    rician.validate().map_err(|e| match &e {
        WetError::InvalidParameter { name, .. } => ctx.wet("channel", name, e.clone()),
        _ => ctx.wet("channel", "k_max", e.clone()),
    })?;
    let fading = if raw.channel.fading.unwrap_or(true) {
        FadingMode::Rician
    } else {
        FadingMode::Disabled
    };

    let harvester = HarvesterModel::new(
        raw.harvester.sensitivity_dbm.unwrap_or(-22.0),
        raw.harvester.saturation_dbm.unwrap_or(-8.0),
        raw.harvester.efficiency.unwrap_or(0.35),
    )
    .map_err(|e| {
        let key = match &e {
            WetError::InvalidParameter { name, .. } | WetError::NonFinite { name, .. } => *name,
            _ => "efficiency",
        };
        ctx.wet("harvester", key, e)
    })?;

    let strategy = raw
        .run
        .strategy
        .as_deref()
        .unwrap_or("AA_SS")
        .parse::<StrategyKind>()
        .map_err(|e| ctx.wet("run", "strategy", e))?;
    let correlation = raw
        .run
        .correlation
        .as_deref()
        .unwrap_or("independent")
        .parse::<SignalCorrelation>()
        .map_err(|e| ctx.wet("run", "correlation", e))?;
    let strategies = match &raw.run.strategies {
        Some(list) => {
            if list.is_empty() {
                return Err(ctx.err("run", "strategies", "strategies must not be empty"));
            }
            list.iter()
                .map(|s| s.parse::<StrategyKind>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ctx.wet("run", "strategies", e))?
        }
        None if pb_positions.len() == 1 => StrategyKind::ALL.to_vec(),
        None => StrategyKind::CSI_FREE.to_vec(),
    };
    if pb_positions.len() > 1 {
        if strategy.requires_csi() {
            return Err(ctx.err(
                "run",
                "strategy",
                format!("{strategy} requires exactly one power beacon"),
            ));
        }
        if let Some(s) = strategies.iter().find(|s| s.requires_csi()) {
            return Err(ctx.err(
                "run",
                "strategies",
                format!("{s} requires exactly one power beacon"),
            ));
        }
    }
    let trials = raw.run.trials.unwrap_or(10_000);
    if trials == 0 {
        return Err(ctx.err("run", "trials", "trials must be at least 1"));
    }
    if raw.run.threads == Some(0) {
        return Err(ctx.err("run", "threads", "threads must be at least 1"));
    }

    let defaults = PrecoderOptions::default();
    let precoder = PrecoderOptions {
        restarts: raw.precoder.restarts,
        tol: raw.precoder.tol.unwrap_or(defaults.tol),
        max_iterations: raw
            .precoder
            .max_iterations
            .unwrap_or(defaults.max_iterations),
        activation: raw.precoder.activation.unwrap_or(defaults.activation),
        ..defaults
    };
    precoder.validate().map_err(|e| {
        let key = match &e {
            WetError::InvalidParameter { name, .. } => *name,
            _ => "tol",
        };
        ctx.wet("precoder", key, e)
    })?;

    let n_values = raw
        .sweep
        .n_values
        .clone()
        .unwrap_or_else(|| vec![1, 10, 100]);
    if n_values.is_empty() || n_values.contains(&0) {
        return Err(ctx.err(
            "sweep",
            "n_values",
            "n_values must be non-empty and every N at least 1",
        ));
    }
    let m_values = raw
        .correlation
        .m_values
        .clone()
        .unwrap_or_else(|| vec![2, 4, 8]);
    if m_values.is_empty() || m_values.contains(&0) {
        return Err(ctx.err(
            "correlation",
            "m_values",
            "m_values must be non-empty and every M at least 1",
        ));
    }

    let res = raw.heatmap.resolution.unwrap_or(31);
    let heatmap = HeatmapSpec {
        x_min: raw.heatmap.x_min.unwrap_or(-15.0),
        x_max: raw.heatmap.x_max.unwrap_or(15.0),
        y_min: raw.heatmap.y_min.unwrap_or(-15.0),
        y_max: raw.heatmap.y_max.unwrap_or(15.0),
        nx: raw.heatmap.nx.unwrap_or(res),
        ny: raw.heatmap.ny.unwrap_or(res),
    };
    heatmap.validate().map_err(|e| {
        let key = match &e {
            WetError::InvalidParameter { name, .. } | WetError::NonFinite { name, .. } => *name,
            _ => "resolution",
        };
        ctx.wet("heatmap", key, e)
    })?;

    let oracle = OracleConfig {
        instances: raw.oracle.instances.unwrap_or(20),
        n_values: raw.oracle.n_values.clone().unwrap_or_else(|| vec![1, 2, 3]),
        grid_resolution: raw.oracle.grid_resolution.unwrap_or(256),
        radius_m: positive(
            &ctx,
            "oracle",
            "radius_m",
            raw.oracle.radius_m.unwrap_or(9.0),
        )?,
        max_gap: raw.oracle.max_gap.unwrap_or(0.01),
    };
    if oracle.instances == 0 {
        return Err(ctx.err("oracle", "instances", "instances must be at least 1"));
    }
    if oracle.n_values.is_empty() || oracle.n_values.contains(&0) {
        return Err(ctx.err(
            "oracle",
            "n_values",
            "n_values must be non-empty and every N at least 1",
        ));
    }
    if oracle.grid_resolution < 64 {
        return Err(ctx.err(
            "oracle",
            "grid_resolution",
            "grid_resolution must be at least 64",
        ));
    }
    if !(oracle.max_gap.is_finite() && oracle.max_gap >= 0.0) {
        return Err(ctx.err("oracle", "max_gap", "max_gap must be non-negative"));
    }

    let scenario = Scenario {
        pb_positions,
        antennas,
        deployment,
        strategy,
        correlation,
        transmit_power_w,
        harvester,
        path_loss,
        rician,
        fading,
        precoder,
        trials,
        seed: raw.run.seed.unwrap_or(DEFAULT_SEED),
    };
    scenario
        .validate()
        .map_err(|e| ctx.wet("run", "strategy", e))?;

    Ok(ExperimentConfig {
        scenario,
        strategies,
        n_values,
        m_values,
        heatmap,
        oracle,
        threads: raw.run.threads,
    })
}
