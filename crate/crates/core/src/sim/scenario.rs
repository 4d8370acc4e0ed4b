use crate::learning::idx::load_idx;
use crate::learning::{
    compute_time, model_dimension, partition_dataset, synthetic_pool_with, Dataset, LearnerConfig, ModelParams,
    PartitionScheme, SyntheticSpec,
};
use crate::link::{db_to_linear, dbm_to_watt, LinkParams, PayloadModel, RateModel};
use crate::orbital::{visibility_threshold_km, Constellation, GroundStationSpec, NodeId, OrbitSpec, PsSite};
use crate::protocol::{ProtocolParams, Wire};

use super::config::{
    ConfigError, DataSource, InitKind, PartitionKind, ProtocolKind, PsKind, RateModelKind, ScenarioConfig,
};
use super::SimError;

/// A validated scenario with its geometry, link model and local datasets materialised.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub constellation: Constellation,
    pub link: LinkParams,
    pub payload: PayloadModel,
    pub learner: LearnerConfig,
    pub protocol: ProtocolKind,
    pub protocol_params: ProtocolParams,
    /// Local training set of satellite `k` at index `k - 1`.
    pub local_data: Vec<Dataset>,
    pub test_data: Dataset,
    pub initial_model: ModelParams,
    pub seed: u64,
    pub max_epochs: u64,
    pub time_limit_s: f64,
    pub eval_every: u64,
    pub contact_horizon_s: f64,
}

fn config_err(e: ConfigError) -> SimError {
    SimError::Config(e.to_string())
}

pub fn build_constellation(config: &ScenarioConfig) -> Result<Constellation, SimError> {
    let c = &config.constellation;
    let p = &config.ps;
    let ps = match p.kind {
        PsKind::Meo => PsSite::Satellite(OrbitSpec {
            plane_index: 0,
            altitude_km: p.meo_altitude_km,
            inclination_rad: p.meo_inclination_deg.to_radians(),
            raan_rad: p.meo_raan_deg.to_radians().rem_euclid(std::f64::consts::TAU),
            num_satellites: 1,
            phase_offset_rad: p.meo_phase_deg.to_radians().rem_euclid(std::f64::consts::TAU),
        }),
        PsKind::Ground => PsSite::Ground(GroundStationSpec {
            altitude_km: p.ground_altitude_km,
            ..GroundStationSpec::from_degrees(p.latitude_deg, p.longitude_deg, p.min_elevation_deg)
        }),
    };
    Constellation::walker(
        c.planes,
        c.sats_per_plane,
        c.altitude_km,
        c.inclination_deg.to_radians(),
        c.phasing,
        ps,
        c.earth_angle0_deg.to_radians(),
    )
    .map_err(|e| SimError::Config(e.to_string()))
}

pub fn build_link(config: &ScenarioConfig) -> (LinkParams, PayloadModel) {
    let l = &config.link;
    let link = LinkParams {
        tx_power_w: dbm_to_watt(l.tx_power_dbm),
        tx_gain_linear: db_to_linear(l.tx_gain_dbi),
        rx_gain_linear: db_to_linear(l.rx_gain_dbi),
        bandwidth_hz: l.bandwidth_hz,
        noise_temp_k: l.noise_temp_k,
        carrier_hz: l.carrier_hz,
        tx_proc_delay_s: l.tx_delay_s,
        rx_proc_delay_s: l.rx_delay_s,
        rate_model: match l.rate_model {
            RateModelKind::Shannon => RateModel::Shannon,
            RateModelKind::Constant => RateModel::Constant { bits_per_s: l.constant_rate_bps },
        },
    };
    let payload = PayloadModel { bits_per_param: l.bits_per_param, header_bits: l.header_bits, control_bits: l.control_bits };
    (link, payload)
}

// Training pool (`K · samples_per_satellite` rows) and test set.
fn load_data(config: &ScenarioConfig, num_sats: usize) -> Result<(Dataset, Dataset), SimError> {
    let d = &config.data;
    let train_n = num_sats * d.samples_per_satellite;
    let synthetic = || {
        let mut spec = SyntheticSpec::new(train_n + d.test_samples, d.num_features, d.num_classes, config.seed());
        spec.separation = d.separation;
        spec.noise_std = d.noise_std;
        spec.scale_spread = d.scale_spread;
        let pool = synthetic_pool_with(&spec);
        let idx: Vec<usize> = (0..pool.len()).collect();
        (pool.select(&idx[..train_n]), pool.select(&idx[train_n..]))
    };
    match d.source {
        DataSource::Synthetic => Ok(synthetic()),
        DataSource::Idx => {
            let path = |p: &Option<std::path::PathBuf>| p.clone().expect("validated");
            let loaded = load_idx(path(&d.train_images), path(&d.train_labels))
                .and_then(|train| Ok((train, load_idx(path(&d.test_images), path(&d.test_labels))?)));
            match loaded {
                Ok((train, test)) => {
                    if train.len() < train_n {
                        return Err(SimError::Config(format!(
                            "data.train_images: {} samples, need {train_n} for {num_sats} satellites",
                            train.len()
                        )));
                    }
                    if train.num_features() != d.num_features || train.num_classes() != d.num_classes {
                        return Err(SimError::Config(format!(
                            "data.num_features: IDX files have {} features and {} classes",
                            train.num_features(),
                            train.num_classes()
                        )));
                    }
                    Ok((train.truncated(train_n), test.truncated(d.test_samples)))
                }
                Err(_) if d.synthetic_fallback => Ok(synthetic()),
                Err(e) => Err(SimError::Config(format!("data.train_images: {e}"))),
            }
        }
    }
}

impl Scenario {
    pub fn from_config(config: &ScenarioConfig) -> Result<Self, SimError> {
        config.validate().map_err(config_err)?;
        let constellation = build_constellation(config)?;
        let (link, payload) = build_link(config);
        link.validate().map_err(|e| SimError::Config(format!("link: {e}")))?;
        let learner = config.learning.learner();
        learner.validate().map_err(|e| SimError::Config(format!("learning: {e}")))?;
        let num_sats = constellation.num_satellites();
        let (pool, test_data) = load_data(config, num_sats)?;
        let scheme = match config.data.partition {
            PartitionKind::Iid => PartitionScheme::Iid,
            PartitionKind::LabelSplit => {
                PartitionScheme::contiguous_label_split(pool.num_classes(), num_sats, config.data.label_groups)
            }
        };
        let local_data = partition_dataset(&pool, num_sats, &scheme, config.seed())
            .map_err(|e| SimError::Config(format!("data.partition: {e}")))?;
        let dim = model_dimension(pool.num_features(), pool.num_classes());
        let initial_model = match config.learning.init {
            InitKind::Zeros => ModelParams::zeros(dim),
            InitKind::Random => ModelParams::random(dim, config.learning.init_std, config.seed()),
        };
        let s = &config.sim;
        let scenario = Self {
            config: config.clone(),
            constellation,
            link,
            payload,
            learner,
            protocol: config.protocol.kind,
            protocol_params: ProtocolParams {
                reconnect_wait_s: config.protocol.reconnect_wait_s,
                grace_hops: config.protocol.grace_hops,
                nonisl_upload: config.protocol.nonisl_upload,
            },
            local_data,
            test_data,
            initial_model,
            seed: config.seed(),
            max_epochs: s.max_epochs,
            time_limit_s: s.time_limit_h * 3600.0,
            eval_every: s.eval_every,
            contact_horizon_s: s.contact_horizon_h * 3600.0,
        };
        scenario.check_isl_visibility()?;
        Ok(scenario)
    }

    /// Ring neighbours must stay within line of sight; circular orbits keep
    /// the chord constant, so checking t = 0 suffices.
    pub fn check_isl_visibility(&self) -> Result<(), SimError> {
        for plane in 0..self.constellation.num_planes() {
            let ring = self.constellation.ring(plane);
            if ring.len() < 2 {
                continue;
            }
            let (a, b) = (ring[0], ring[1]);
            let h = self.constellation.orbits()[plane].altitude_km;
            let d = self.constellation.distance_km(a, b, 0.0).map_err(|e| SimError::Runtime(e.to_string()))?;
            if !self.constellation.visible(a, b, 0.0) {
                return Err(SimError::Config(format!(
                    "constellation.sats_per_plane: ring neighbours are {d:.0} km apart, beyond the {:.0} km line of sight",
                    visibility_threshold_km(h, h)
                )));
            }
        }
        Ok(())
    }

    pub fn wire(&self) -> Wire {
        Wire {
            model_bits: self.payload.model_message_bits(self.initial_model.dimension()),
            control_bits: self.payload.control_bits,
        }
    }

    pub fn total_samples(&self) -> usize {
        self.local_data.iter().map(Dataset::len).sum()
    }

    pub fn local(&self, sat: NodeId) -> &Dataset {
        &self.local_data[sat.0 as usize - 1]
    }

    pub fn compute_time(&self, sat: NodeId) -> f64 {
        compute_time(self.local(sat), &self.learner)
    }
}
