//! Declarative scenario description, in the units people write by hand.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::learning::LearnerConfig;
use crate::protocol::UploadTrigger;

/// Validation failure pinned to a dotted config key.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{key}: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub constellation: ConstellationConfig,
    pub ps: PsConfig,
    pub link: LinkConfig,
    pub learning: LearningConfig,
    pub data: DataConfig,
    pub protocol: ProtocolConfig,
    pub sim: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstellationConfig {
    pub planes: usize,
    pub sats_per_plane: usize,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    /// Walker phasing factor F.
    pub phasing: u32,
    /// Earth rotation angle at t = 0.
    pub earth_angle0_deg: f64,
}

impl Default for ConstellationConfig {
    fn default() -> Self {
        Self {
            planes: 5,
            sats_per_plane: 8,
            altitude_km: 2000.0,
            inclination_deg: 80.0,
            phasing: 1,
            earth_angle0_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsKind {
    Meo,
    Ground,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsConfig {
    pub kind: PsKind,
    pub meo_altitude_km: f64,
    pub meo_inclination_deg: f64,
    pub meo_raan_deg: f64,
    pub meo_phase_deg: f64,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub ground_altitude_km: f64,
    pub min_elevation_deg: f64,
}

impl Default for PsConfig {
    fn default() -> Self {
        Self {
            kind: PsKind::Meo,
            meo_altitude_km: 20000.0,
            meo_inclination_deg: 0.0,
            meo_raan_deg: 0.0,
            meo_phase_deg: 0.0,
            // Bremen
            latitude_deg: 53.08,
            longitude_deg: 8.80,
            ground_altitude_km: 0.0,
            min_elevation_deg: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModelKind {
    Shannon,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub noise_temp_k: f64,
    pub tx_delay_s: f64,
    pub rx_delay_s: f64,
    pub rate_model: RateModelKind,
    pub constant_rate_bps: f64,
    pub bits_per_param: u64,
    pub header_bits: u64,
    pub control_bits: u64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            tx_power_dbm: 40.0,
            tx_gain_dbi: 6.98,
            rx_gain_dbi: 6.98,
            bandwidth_hz: 20e6,
            carrier_hz: 2.4e9,
            noise_temp_k: 354.81,
            tx_delay_s: 0.0,
            rx_delay_s: 0.0,
            rate_model: RateModelKind::Shannon,
            constant_rate_bps: 1e6,
            bits_per_param: 32,
            header_bits: 256,
            control_bits: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Zeros,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningConfig {
    pub learning_rate: f64,
    pub local_iterations: usize,
    pub cycles_per_sample: f64,
    pub cpu_hz: f64,
    pub compute_time_multiplier: f64,
    pub init: InitKind,
    pub init_std: f64,
    /// Skip gradient descent; only timing and traffic are simulated.
    pub timing_only: bool,
}

impl Default for LearningConfig {
    fn default() -> Self {
        let l = LearnerConfig::default();
        Self {
            learning_rate: l.learning_rate,
            local_iterations: l.local_iterations,
            cycles_per_sample: l.cycles_per_sample,
            cpu_hz: l.cpu_hz,
            compute_time_multiplier: l.compute_time_multiplier,
            init: InitKind::Zeros,
            init_std: 0.01,
            timing_only: false,
        }
    }
}

impl LearningConfig {
    pub fn learner(&self) -> LearnerConfig {
        LearnerConfig {
            learning_rate: self.learning_rate,
            local_iterations: self.local_iterations,
            cycles_per_sample: self.cycles_per_sample,
            cpu_hz: self.cpu_hz,
            compute_time_multiplier: self.compute_time_multiplier,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic,
    Idx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    Iid,
    LabelSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub source: DataSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_images: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_labels: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_images: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_labels: Option<PathBuf>,
    /// Use synthetic data when the IDX files cannot be read.
    pub synthetic_fallback: bool,
    pub samples_per_satellite: usize,
    pub test_samples: usize,
    pub num_features: usize,
    pub num_classes: usize,
    pub separation: f64,
    pub noise_std: f64,
    /// Largest over smallest per-feature scale of synthetic data.
    pub scale_spread: f64,
    pub partition: PartitionKind,
    pub label_groups: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            synthetic_fallback: false,
            samples_per_satellite: 150,
            test_samples: 1000,
            num_features: 784,
            num_classes: 10,
            separation: 6.0,
            noise_std: 1.0,
            scale_spread: 30.0,
            partition: PartitionKind::LabelSplit,
            label_groups: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    #[serde(rename = "fedisl")]
    FedIsl,
    #[serde(rename = "fednonisl")]
    FedNonIsl,
}

impl std::str::FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fedisl" => Ok(Self::FedIsl),
            "fednonisl" => Ok(Self::FedNonIsl),
            other => Err(format!("unknown protocol `{other}` (expected fedisl or fednonisl)")),
        }
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::FedIsl => "fedisl",
            Self::FedNonIsl => "fednonisl",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    pub reconnect_wait_s: f64,
    pub grace_hops: f64,
    /// When baseline satellites return their update: `immediate` or `next_contact`.
    pub nonisl_upload: UploadTrigger,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { kind: ProtocolKind::FedIsl, reconnect_wait_s: 10.0, grace_hops: 2.0, nonisl_upload: UploadTrigger::Immediate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Required; there is no implicit seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub max_epochs: u64,
    pub time_limit_h: f64,
    /// Evaluate the global model every this many epochs.
    pub eval_every: u64,
    pub contact_horizon_h: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { seed: None, max_epochs: 20, time_limit_h: 96.0, eval_every: 1, contact_horizon_h: 12.0 }
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("must be a positive number, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("must be a non-negative number, got {v}")))
    }
}

fn finite(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("must be finite, got {v}")))
    }
}

fn within(key: &str, v: f64, lo: f64, hi: f64) -> Result<(), ConfigError> {
    if v.is_finite() && (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("must lie in [{lo}, {hi}], got {v}")))
    }
}

fn at_least(key: &str, v: u64, min: u64) -> Result<(), ConfigError> {
    if v >= min {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("must be at least {min}, got {v}")))
    }
}

impl ScenarioConfig {
    /// Range checks of every field; the first violation is reported.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.constellation;
        at_least("constellation.planes", c.planes as u64, 1)?;
        at_least("constellation.sats_per_plane", c.sats_per_plane as u64, 1)?;
        positive("constellation.altitude_km", c.altitude_km)?;
        within("constellation.inclination_deg", c.inclination_deg, 0.0, 180.0)?;
        finite("constellation.earth_angle0_deg", c.earth_angle0_deg)?;

        let p = &self.ps;
        positive("ps.meo_altitude_km", p.meo_altitude_km)?;
        within("ps.meo_inclination_deg", p.meo_inclination_deg, 0.0, 180.0)?;
        finite("ps.meo_raan_deg", p.meo_raan_deg)?;
        finite("ps.meo_phase_deg", p.meo_phase_deg)?;
        within("ps.latitude_deg", p.latitude_deg, -90.0, 90.0)?;
        finite("ps.longitude_deg", p.longitude_deg)?;
        non_negative("ps.ground_altitude_km", p.ground_altitude_km)?;
        within("ps.min_elevation_deg", p.min_elevation_deg, 0.0, 89.9)?;

        let l = &self.link;
        finite("link.tx_power_dbm", l.tx_power_dbm)?;
        finite("link.tx_gain_dbi", l.tx_gain_dbi)?;
        finite("link.rx_gain_dbi", l.rx_gain_dbi)?;
        positive("link.bandwidth_hz", l.bandwidth_hz)?;
        positive("link.carrier_hz", l.carrier_hz)?;
        positive("link.noise_temp_k", l.noise_temp_k)?;
        non_negative("link.tx_delay_s", l.tx_delay_s)?;
        non_negative("link.rx_delay_s", l.rx_delay_s)?;
        if l.rate_model == RateModelKind::Constant {
            positive("link.constant_rate_bps", l.constant_rate_bps)?;
        }
        at_least("link.bits_per_param", l.bits_per_param, 1)?;
        at_least("link.control_bits", l.control_bits, 1)?;

        let m = &self.learning;
        non_negative("learning.learning_rate", m.learning_rate)?;
        at_least("learning.local_iterations", m.local_iterations as u64, 1)?;
        positive("learning.cycles_per_sample", m.cycles_per_sample)?;
        positive("learning.cpu_hz", m.cpu_hz)?;
        positive("learning.compute_time_multiplier", m.compute_time_multiplier)?;
        non_negative("learning.init_std", m.init_std)?;

        let d = &self.data;
        at_least("data.samples_per_satellite", d.samples_per_satellite as u64, 1)?;
        at_least("data.test_samples", d.test_samples as u64, 1)?;
        at_least("data.num_features", d.num_features as u64, 1)?;
        at_least("data.num_classes", d.num_classes as u64, 2)?;
        positive("data.noise_std", d.noise_std)?;
        non_negative("data.separation", d.separation)?;
        if !(d.scale_spread >= 1.0 && d.scale_spread.is_finite()) {
            return Err(ConfigError::new("data.scale_spread", "must be a finite value >= 1"));
        }
        if d.partition == PartitionKind::LabelSplit {
            at_least("data.label_groups", d.label_groups as u64, 1)?;
            if d.label_groups > d.num_classes {
                return Err(ConfigError::new("data.label_groups", "cannot exceed data.num_classes"));
            }
            if d.label_groups > c.planes * c.sats_per_plane {
                return Err(ConfigError::new("data.label_groups", "cannot exceed the number of satellites"));
            }
        }
        if d.source == DataSource::Idx {
            for (key, v) in [
                ("data.train_images", &d.train_images),
                ("data.train_labels", &d.train_labels),
                ("data.test_images", &d.test_images),
                ("data.test_labels", &d.test_labels),
            ] {
                if v.is_none() {
                    return Err(ConfigError::new(key, "required when data.source = \"idx\""));
                }
            }
        }

        let q = &self.protocol;
        positive("protocol.reconnect_wait_s", q.reconnect_wait_s)?;
        non_negative("protocol.grace_hops", q.grace_hops)?;

        let s = &self.sim;
        if s.seed.is_none() {
            return Err(ConfigError::new("sim.seed", "missing required key"));
        }
        at_least("sim.max_epochs", s.max_epochs, 1)?;
        positive("sim.time_limit_h", s.time_limit_h)?;
        at_least("sim.eval_every", s.eval_every, 1)?;
        positive("sim.contact_horizon_h", s.contact_horizon_h)?;
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.sim.seed.unwrap_or_default()
    }

    /// Default scenario with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        let mut c = Self::default();
        c.sim.seed = Some(seed);
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_once_seeded() {
        assert_eq!(ScenarioConfig::default().validate().unwrap_err().key, "sim.seed");
        ScenarioConfig::with_seed(1).validate().unwrap();
    }

    #[test]
    fn violations_name_the_key() {
        let mut c = ScenarioConfig::with_seed(1);
        c.constellation.altitude_km = -5.0;
        assert_eq!(c.validate().unwrap_err().key, "constellation.altitude_km");
        let mut c = ScenarioConfig::with_seed(1);
        c.data.source = DataSource::Idx;
        assert_eq!(c.validate().unwrap_err().key, "data.train_images");
        let mut c = ScenarioConfig::with_seed(1);
        c.link.rate_model = RateModelKind::Constant;
        c.link.constant_rate_bps = 0.0;
        assert_eq!(c.validate().unwrap_err().key, "link.constant_rate_bps");
    }

    #[test]
    fn protocol_names_parse() {
        assert_eq!("FedNonISL".parse::<ProtocolKind>().unwrap(), ProtocolKind::FedNonIsl);
        assert!("fedavg".parse::<ProtocolKind>().is_err());
        assert_eq!(ProtocolKind::FedIsl.to_string(), "fedisl");
    }
}
