//! Free-space link budget and transfer-time model for ISL and PS links.

use std::f64::consts::PI;

use thiserror::Error;

use crate::orbital::constants::SPEED_OF_LIGHT_M_S;

pub const BOLTZMANN_J_K: f64 = 1.380649e-23;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("distance must be positive, got {0} m")]
    InvalidDistance(f64),
    #[error("payload must be positive, got {0} bits")]
    InvalidPayload(f64),
    #[error("link unavailable: nodes are not visible")]
    Unavailable,
    #[error("invalid link parameter `{name}` = {value}")]
    InvalidParam { name: &'static str, value: f64 },
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// How the achievable data rate is derived from the link state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateModel {
    /// `B log2(1 + SNR)`
    Shannon,
    /// Fixed rate whenever the link is visible.
    Constant { bits_per_s: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub tx_power_w: f64,
    pub tx_gain_linear: f64,
    pub rx_gain_linear: f64,
    pub bandwidth_hz: f64,
    pub noise_temp_k: f64,
    pub carrier_hz: f64,
    pub tx_proc_delay_s: f64,
    pub rx_proc_delay_s: f64,
    pub rate_model: RateModel,
}

impl Default for LinkParams {
    /// 40 dBm, 6.98 dBi at both ends, 20 MHz at 2.4 GHz, 354.81 K, no processing delay.
    fn default() -> Self {
        Self {
            tx_power_w: dbm_to_watt(40.0),
            tx_gain_linear: db_to_linear(6.98),
            rx_gain_linear: db_to_linear(6.98),
            bandwidth_hz: 20e6,
            noise_temp_k: 354.81,
            carrier_hz: 2.4e9,
            tx_proc_delay_s: 0.0,
            rx_proc_delay_s: 0.0,
            rate_model: RateModel::Shannon,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<(), LinkError> {
        let positive = [
            ("tx_power_w", self.tx_power_w),
            ("tx_gain_linear", self.tx_gain_linear),
            ("rx_gain_linear", self.rx_gain_linear),
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_temp_k", self.noise_temp_k),
            ("carrier_hz", self.carrier_hz),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(LinkError::InvalidParam { name, value });
            }
        }
        for (name, value) in [("tx_proc_delay_s", self.tx_proc_delay_s), ("rx_proc_delay_s", self.rx_proc_delay_s)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(LinkError::InvalidParam { name, value });
            }
        }
        if let RateModel::Constant { bits_per_s } = self.rate_model {
            if !(bits_per_s.is_finite() && bits_per_s > 0.0) {
                return Err(LinkError::InvalidParam { name: "rate_bps", value: bits_per_s });
            }
        }
        Ok(())
    }

    pub fn noise_power_w(&self) -> f64 {
        BOLTZMANN_J_K * self.noise_temp_k * self.bandwidth_hz
    }
}

/// Free-space path loss `(4π f_c d / c)^2` as a linear factor.
pub fn path_loss(distance_m: f64, carrier_hz: f64) -> Result<f64, LinkError> {
    if !(distance_m > 0.0) {
        return Err(LinkError::InvalidDistance(distance_m));
    }
    Ok((4.0 * PI * carrier_hz * distance_m / SPEED_OF_LIGHT_M_S).powi(2))
}

/// Linear SNR of the link, zero when the endpoints cannot see each other.
pub fn snr(params: &LinkParams, distance_m: f64, visible: bool) -> Result<f64, LinkError> {
    let loss = path_loss(distance_m, params.carrier_hz)?;
    if !visible {
        return Ok(0.0);
    }
    Ok(params.tx_power_w * params.tx_gain_linear * params.rx_gain_linear / (params.noise_power_w() * loss))
}

/// Achievable rate in bit/s under the configured rate model.
pub fn rate(params: &LinkParams, distance_m: f64, visible: bool) -> Result<f64, LinkError> {
    match params.rate_model {
        RateModel::Shannon => {
            let s = snr(params, distance_m, visible)?;
            Ok(params.bandwidth_hz * s.ln_1p() / std::f64::consts::LN_2)
        }
        RateModel::Constant { bits_per_s } => {
            if !(distance_m > 0.0) {
                return Err(LinkError::InvalidDistance(distance_m));
            }
            Ok(if visible { bits_per_s } else { 0.0 })
        }
    }
}

/// Breakdown of a single transfer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferTime {
    /// Time the sender's radio is occupied (`S/r + t_s`).
    pub transmission_s: f64,
    pub propagation_s: f64,
    pub rx_processing_s: f64,
}

impl TransferTime {
    pub fn total(&self) -> f64 {
        self.transmission_s + self.propagation_s + self.rx_processing_s
    }
}

/// Detailed transfer timing; `total()` equals [`transfer_time`].
pub fn transfer_breakdown(
    params: &LinkParams,
    distance_m: f64,
    payload_bits: f64,
    visible: bool,
) -> Result<TransferTime, LinkError> {
    if !(payload_bits > 0.0) {
        return Err(LinkError::InvalidPayload(payload_bits));
    }
    let r = rate(params, distance_m, visible)?;
    if r <= 0.0 {
        return Err(LinkError::Unavailable);
    }
    Ok(TransferTime {
        transmission_s: payload_bits / r + params.tx_proc_delay_s,
        propagation_s: distance_m / SPEED_OF_LIGHT_M_S,
        rx_processing_s: params.rx_proc_delay_s,
    })
}

/// Transmission + propagation + processing delay of one payload.
pub fn transfer_time(params: &LinkParams, distance_m: f64, payload_bits: f64, visible: bool) -> Result<f64, LinkError> {
    transfer_breakdown(params, distance_m, payload_bits, visible).map(|t| t.total())
}

/// Wire sizes of protocol messages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadModel {
    pub bits_per_param: u64,
    /// Routing metadata carried with every model-bearing message.
    pub header_bits: u64,
    pub control_bits: u64,
}

impl Default for PayloadModel {
    fn default() -> Self {
        Self { bits_per_param: 32, header_bits: 256, control_bits: 512 }
    }
}

impl PayloadModel {
    pub fn model_message_bits(&self, dimension: usize) -> u64 {
        dimension as u64 * self.bits_per_param + self.header_bits
    }
}
