//! Scenario files (`.scn`): TOML with units spelled out in key names.
//!
//! [`ScenarioConfig`] mirrors the file one-to-one. [`Scenario`] is the
//! validated form with every derived domain object built once.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::constellation::{ConstellationSpec, GroundStation, SatId, TimeGrid, DEFAULT_STEP_S};
use crate::error::ConfigError;
use crate::fedsim::{workload_from_model, ComputeConfig, DatasetMeta, ModelConfig, SimOptions, Strategy, WorkloadModel};
use crate::linkbudget::{db_to_linear, dbm_to_watts, IslParams, PathComponent, RainParams, SglParams, SglPowerModel};
use crate::netgraph::{LinkConfig, Topology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationConfig {
    pub total_sats: usize,
    pub planes: usize,
    pub phase_offset_deg: f64,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    #[serde(default = "default_raan_spread")]
    pub raan_spread_deg: f64,
}

fn default_raan_spread() -> f64 {
    180.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub epoch: DateTime<Utc>,
    #[serde(default = "default_step")]
    pub step_s: f64,
    pub steps: usize,
}

fn default_step() -> f64 {
    DEFAULT_STEP_S
}

/// Laser ISL: either a fixed rate or a full link budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IslConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_rate_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<IslBudgetConfig>,
    /// ISLs out of service, as pairs of satellite labels such as `"S1.2"`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<[String; 2]>,
}

impl Default for IslConfig {
    fn default() -> Self {
        Self { fixed_rate_bps: Some(10e9), budget: None, failed: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IslBudgetConfig {
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub wavelength_m: f64,
    pub bandwidth_hz: f64,
    pub noise_variance_w: f64,
    #[serde(default)]
    pub pointing_error_tx_rad: f64,
    #[serde(default)]
    pub pointing_error_rx_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultipathConfig {
    pub reflection: f64,
    pub phase_delta_rad: f64,
    /// Extra length over the direct path.
    pub excess_length_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RainConfig {
    pub k: f64,
    pub alpha: f64,
    pub rate_mm_h: f64,
    pub path_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerModelConfig {
    #[default]
    Physical,
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SglConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_rate_bps: Option<f64>,
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_power_w: f64,
    #[serde(default)]
    pub power_model: PowerModelConfig,
    /// Reflected paths on top of the direct path.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub multipath: Vec<MultipathConfig>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerrestrialConfig {
    /// Station-to-PS rate; absent means never a bottleneck.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gs_ps_rate_bps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Plain means at both levels.
    #[default]
    Uniform,
    /// Weights proportional to local dataset sizes.
    DatasetSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub rounds: usize,
    pub start_s: f64,
    pub consensus_factor: f64,
    pub aggregation: Aggregation,
    /// Strategies run alongside the primary one for comparison.
    pub compare: Vec<Strategy>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { rounds: 3, start_s: 0.0, consensus_factor: 2.0, aggregation: Aggregation::Uniform, compare: Vec::new() }
    }
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    /// Samples per satellite.
    DataVolume,
    /// Fixed SGL rate in bit/s.
    SglRate,
    /// Fixed ISL rate in bit/s.
    IslRate,
    SatsPerPlane,
    Planes,
    Blocks,
}

impl AxisName {
    pub const ALL: [AxisName; 6] = [
        AxisName::DataVolume,
        AxisName::SglRate,
        AxisName::IslRate,
        AxisName::SatsPerPlane,
        AxisName::Planes,
        AxisName::Blocks,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AxisName::DataVolume => "data_volume",
            AxisName::SglRate => "sgl_rate",
            AxisName::IslRate => "isl_rate",
            AxisName::SatsPerPlane => "sats_per_plane",
            AxisName::Planes => "planes",
            AxisName::Blocks => "blocks",
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, AxisName::DataVolume | AxisName::SatsPerPlane | AxisName::Planes | AxisName::Blocks)
    }
}

impl fmt::Display for AxisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxisName {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AxisName::ALL.into_iter().find(|a| a.as_str() == s).ok_or_else(|| {
            let known: Vec<&str> = AxisName::ALL.iter().map(AxisName::as_str).collect();
            ConfigError::invariant("sweep.axis", format!("unknown axis `{s}` (known: {})", known.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: AxisName,
    pub start: f64,
    pub stop: f64,
    #[serde(default = "default_axis_steps")]
    pub steps: usize,
}

fn default_axis_steps() -> usize {
    5
}

impl SweepAxis {
    /// Parses `start:stop[:steps]`.
    pub fn parse(name: &str, range: &str) -> Result<Self, ConfigError> {
        let name: AxisName = name.parse()?;
        let parts: Vec<&str> = range.split(':').collect();
        let num = |s: &str| -> Result<f64, ConfigError> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError::invariant(format!("sweep.{name}"), format!("`{s}` is not a number")))
        };
        let (start, stop, steps) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, default_axis_steps()),
            [a, b, n] => {
                let steps = n
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| ConfigError::invariant(format!("sweep.{name}"), format!("`{n}` is not a step count")))?;
                (num(a)?, num(b)?, steps)
            }
            _ => {
                return Err(ConfigError::invariant(
                    format!("sweep.{name}"),
                    format!("range `{range}` must look like start:stop[:steps]"),
                ))
            }
        };
        let axis = Self { name, start, stop, steps };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let field = format!("sweep.{}", self.name);
        if !self.start.is_finite() || !self.stop.is_finite() || self.start > self.stop {
            return Err(ConfigError::invariant(field, "range must satisfy start <= stop"));
        }
        if self.steps == 0 || (self.steps == 1 && self.start != self.stop) {
            return Err(ConfigError::invariant(field, "need at least two steps for a non-degenerate range"));
        }
        if !(self.start > 0.0) {
            return Err(ConfigError::invariant(field, "values must be positive"));
        }
        Ok(())
    }

    /// Evenly spaced values; integer axes are rounded and deduplicated.
    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = if self.steps == 1 {
            vec![self.start]
        } else {
            (0..self.steps)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.steps - 1) as f64)
                .collect()
        };
        if self.name.is_integer() {
            v.iter_mut().for_each(|x| *x = x.round());
            v.dedup();
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub axes: Vec<SweepAxis>,
}

/// The file, field for field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    pub constellation: ConstellationConfig,
    pub time: TimeConfig,
    pub ground_stations: Vec<GroundStation>,
    #[serde(default)]
    pub isl: IslConfig,
    pub sgl: SglConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rain: Option<RainConfig>,
    #[serde(default)]
    pub terrestrial: TerrestrialConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub compute: ComputeConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub datasets: Vec<DatasetMeta>,
}

fn default_strategy() -> Strategy {
    Strategy::Proposed
}

fn default_output_dir() -> String {
    "out".into()
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub spec: ConstellationSpec,
    pub grid: TimeGrid,
    pub ground_stations: Vec<GroundStation>,
    pub links: LinkConfig,
    pub workload: WorkloadModel,
    pub options: SimOptions,
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(ConfigError::invariant(field, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

fn parse_sat(label: &str, spec: &ConstellationSpec) -> Result<SatId, ConfigError> {
    let bad = || ConfigError::invariant("isl.failed", format!("`{label}` is not a satellite label like S1.2"));
    let rest = label.strip_prefix('S').ok_or_else(bad)?;
    let (p, n) = rest.split_once('.').ok_or_else(bad)?;
    let id = SatId::new(p.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?);
    if !spec.contains(id) {
        return Err(ConfigError::invariant("isl.failed", format!("{label} is not in the constellation")));
    }
    Ok(id)
}

impl IslConfig {
    fn build(&self) -> Result<IslParams, ConfigError> {
        match (&self.fixed_rate_bps, &self.budget) {
            (Some(_), Some(_)) => Err(ConfigError::invariant("isl", "fixed_rate_bps and budget are mutually exclusive")),
            (None, None) => Err(ConfigError::invariant("isl", "either fixed_rate_bps or budget is required")),
            (Some(r), None) => {
                positive("isl.fixed_rate_bps", *r)?;
                // link-budget fields are unused in fixed-rate mode
                Ok(IslParams {
                    tx_power_w: 1.0,
                    tx_gain: 1.0,
                    rx_gain: 1.0,
                    wavelength_m: 1.55e-6,
                    bandwidth_hz: 1.0,
                    noise_variance_w: 1.0,
                    pointing_error_tx_rad: 0.0,
                    pointing_error_rx_rad: 0.0,
                    fixed_rate_bps: Some(*r),
                })
            }
            (None, Some(b)) => {
                positive("isl.budget.wavelength_m", b.wavelength_m)?;
                positive("isl.budget.bandwidth_hz", b.bandwidth_hz)?;
                positive("isl.budget.noise_variance_w", b.noise_variance_w)?;
                if !(b.pointing_error_tx_rad >= 0.0 && b.pointing_error_rx_rad >= 0.0) {
                    return Err(ConfigError::invariant("isl.budget", "pointing errors must be non-negative"));
                }
                Ok(IslParams {
                    tx_power_w: dbm_to_watts(b.tx_power_dbm),
                    tx_gain: db_to_linear(b.tx_gain_dbi),
                    rx_gain: db_to_linear(b.rx_gain_dbi),
                    wavelength_m: b.wavelength_m,
                    bandwidth_hz: b.bandwidth_hz,
                    noise_variance_w: b.noise_variance_w,
                    pointing_error_tx_rad: b.pointing_error_tx_rad,
                    pointing_error_rx_rad: b.pointing_error_rx_rad,
                    fixed_rate_bps: None,
                })
            }
        }
    }
}

/// Nominal direct-path length; [`SglParams::at_range`] moves it to the
/// actual slant range of every link.
const NOMINAL_RANGE_M: f64 = 1.0e6;

impl SglConfig {
    fn build(&self, rain: Option<&RainConfig>) -> Result<SglParams, ConfigError> {
        if let Some(r) = self.fixed_rate_bps {
            positive("sgl.fixed_rate_bps", r)?;
        }
        positive("sgl.carrier_frequency_hz", self.carrier_frequency_hz)?;
        positive("sgl.bandwidth_hz", self.bandwidth_hz)?;
        positive("sgl.noise_power_w", self.noise_power_w)?;
        let mut multipath = vec![PathComponent { reflection: 1.0, phase_delta_rad: 0.0, length_m: NOMINAL_RANGE_M }];
        for (i, p) in self.multipath.iter().enumerate() {
            if !(p.excess_length_m >= 0.0) || !p.reflection.is_finite() || !p.phase_delta_rad.is_finite() {
                return Err(ConfigError::invariant(
                    format!("sgl.multipath[{i}]"),
                    "excess length must be non-negative and values finite",
                ));
            }
            multipath.push(PathComponent {
                reflection: p.reflection,
                phase_delta_rad: p.phase_delta_rad,
                length_m: NOMINAL_RANGE_M + p.excess_length_m,
            });
        }
        let rain = match rain {
            None => RainParams::none(),
            Some(r) => {
                if !(r.k >= 0.0 && r.alpha >= 0.0 && r.rate_mm_h >= 0.0 && r.path_km >= 0.0) {
                    return Err(ConfigError::invariant("rain", "coefficients, rate and path must be non-negative"));
                }
                RainParams { k: r.k, alpha: r.alpha, rate_mm_h: r.rate_mm_h, path_km: r.path_km }
            }
        };
        Ok(SglParams {
            tx_power_w: dbm_to_watts(self.tx_power_dbm),
            tx_gain: db_to_linear(self.tx_gain_dbi),
            rx_gain: db_to_linear(self.rx_gain_dbi),
            carrier_frequency_hz: self.carrier_frequency_hz,
            bandwidth_hz: self.bandwidth_hz,
            rain,
            multipath,
            noise_power_w: self.noise_power_w,
            power_model: match self.power_model {
                PowerModelConfig::Physical => SglPowerModel::Physical,
                PowerModelConfig::Literal => SglPowerModel::Literal,
            },
            fixed_rate_bps: self.fixed_rate_bps,
        })
    }
}

impl Scenario {
    pub fn from_config(config: ScenarioConfig) -> Result<Self, ConfigError> {
        let c = &config.constellation;
        let spec = ConstellationSpec::new(
            c.total_sats,
            c.planes,
            c.phase_offset_deg,
            c.altitude_km,
            c.inclination_deg,
            c.raan_spread_deg,
        )?;
        let grid = TimeGrid::new(config.time.epoch, config.time.step_s, config.time.steps)?;
        if config.ground_stations.is_empty() {
            return Err(ConfigError::invariant("ground_stations", "at least one ground station is required"));
        }
        for gs in &config.ground_stations {
            gs.validate()?;
        }
        let mut ids: Vec<usize> = config.ground_stations.iter().map(|g| g.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::invariant("ground_stations.id", "ids must be unique"));
        }
        let isl = config.isl.build()?;
        let failed_isls = config
            .isl
            .failed
            .iter()
            .map(|[a, b]| Ok((parse_sat(a, &spec)?, parse_sat(b, &spec)?)))
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let sgl = config.sgl.build(config.rain.as_ref())?;
        if let Some(r) = config.terrestrial.gs_ps_rate_bps {
            positive("terrestrial.gs_ps_rate_bps", r)?;
        }
        let links = LinkConfig { isl, sgl, gs_ps_rate_bps: config.terrestrial.gs_ps_rate_bps, failed_isls };
        let workload = workload_from_model(&config.model, &config.compute)?;
        let t = &config.training;
        if t.rounds == 0 {
            return Err(ConfigError::invariant("training.rounds", "at least one round is required"));
        }
        if !(t.consensus_factor >= 1.0) {
            return Err(ConfigError::invariant("training.consensus_factor", "must be at least 1"));
        }
        if !(t.start_s >= 0.0) || t.start_s >= grid.horizon_s() {
            return Err(ConfigError::invariant("training.start_s", "must lie inside the time grid"));
        }
        for axis in &config.sweep.axes {
            axis.validate()?;
        }
        for d in &config.datasets {
            d.validate()?;
        }
        let options = SimOptions { start_s: t.start_s, consensus_factor: t.consensus_factor };
        Ok(Self { spec, grid, ground_stations: config.ground_stations.clone(), links, workload, options, config })
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::from_config(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.config).expect("scenario config is always representable as TOML")
    }

    pub fn strategy(&self) -> Strategy {
        self.config.strategy
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn rounds(&self) -> usize {
        self.config.training.rounds
    }

    /// Topology over the scenario's grid (snapshots built on demand).
    pub fn topology(&self) -> Topology {
        Topology::new(self.spec.clone(), self.ground_stations.clone(), self.grid.clone(), self.links.clone())
    }

    /// Copy of the scenario with one sweep parameter replaced.
    pub fn with_axis(&self, axis: AxisName, value: f64) -> Result<Scenario, ConfigError> {
        let mut c = self.config.clone();
        let count = |v: f64| -> Result<u64, ConfigError> {
            if !(v >= 1.0) || v.fract() != 0.0 {
                return Err(ConfigError::invariant(format!("sweep.{axis}"), format!("{v} is not a positive integer")));
            }
            Ok(v as u64)
        };
        match axis {
            AxisName::DataVolume => c.compute.samples_per_satellite = count(value)?,
            AxisName::SglRate => c.sgl.fixed_rate_bps = Some(value),
            AxisName::IslRate => {
                c.isl.fixed_rate_bps = Some(value);
                c.isl.budget = None;
            }
            AxisName::SatsPerPlane => c.constellation.total_sats = count(value)? as usize * c.constellation.planes,
            AxisName::Planes => {
                let n = c.constellation.total_sats / c.constellation.planes;
                c.constellation.planes = count(value)? as usize;
                c.constellation.total_sats = n * c.constellation.planes;
            }
            AxisName::Blocks => c.model.blocks = count(value)?,
        }
        if matches!(axis, AxisName::SatsPerPlane | AxisName::Planes) {
            c.isl.failed.clear();
        }
        Scenario::from_config(c)
    }
}
