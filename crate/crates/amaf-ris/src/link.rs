//! Friis ratio, free-space pathloss, link budget, and the DC power
//! comparison between the feeder-fed architecture (a handful of power
//! amplifiers behind the feeder) and a conventional fully active array (one
//! power amplifier per radiating element).

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// kT at 290 K in dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

/// System-level link parameters. Defaults follow the 100 GHz picocell
/// example: 5 GHz bandwidth, 5 dB receiver noise figure, 40.7 dBm EIRP,
/// 0 dB target SNR at the cell edge.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinkBudget {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub eirp_dbm: f64,
    pub target_snr_db: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            carrier_hz: 100e9,
            bandwidth_hz: 5e9,
            noise_figure_db: 5.0,
            eirp_dbm: 40.7,
            target_snr_db: 0.0,
        }
    }
}

impl LinkBudget {
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Thermal noise power over the bandwidth, dBm.
    pub fn thermal_noise_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_HZ + linear_to_db(self.bandwidth_hz)
    }

    /// Noise floor including the receiver noise figure, dBm. The noise PSD
    /// `N0` of the rate formula carries the noise figure, so this single
    /// number is `W N0` referenced to the receiver input.
    pub fn noise_floor_dbm(&self) -> f64 {
        self.thermal_noise_dbm() + self.noise_figure_db
    }

    /// `W N0` in watts, noise figure included.
    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_floor_dbm())
    }

    /// Feed power needed to reach the EIRP with the given array gain, dBm.
    pub fn required_p_rf_dbm(&self, edge_gain_dbi: f64) -> f64 {
        self.eirp_dbm - edge_gain_dbi
    }

    /// Received SNR for a beam of `gain_dbi` serving a user at slant range
    /// `rho_m`, with feed power `p_rf_dbm`.
    pub fn received_snr_db(&self, p_rf_dbm: f64, gain_dbi: f64, rho_m: f64) -> f64 {
        let pl = freespace_pathloss_db(rho_m, self.wavelength_m());
        p_rf_dbm + gain_dbi - pl - self.noise_floor_dbm()
    }
}

/// Aperture-form Friis power ratio `A_tx A_rx / (d lambda)^2`.
pub fn friis_ratio(a_tx_m2: f64, a_rx_m2: f64, d_m: f64, lambda_m: f64) -> Result<f64, LinkError> {
    if a_tx_m2 <= 0.0 {
        return Err(LinkError::NonPositive("transmit aperture"));
    }
    if a_rx_m2 <= 0.0 {
        return Err(LinkError::NonPositive("receive aperture"));
    }
    if d_m <= 0.0 {
        return Err(LinkError::NonPositive("distance"));
    }
    if lambda_m <= 0.0 {
        return Err(LinkError::NonPositive("wavelength"));
    }
    Ok(a_tx_m2 * a_rx_m2 / (d_m * lambda_m).powi(2))
}

/// Free-space pathloss `-20 log10(lambda / (4 pi rho))` in dB.
pub fn freespace_pathloss_db(rho_m: f64, lambda_m: f64) -> f64 {
    -20.0 * (lambda_m / (4.0 * std::f64::consts::PI * rho_m)).log10()
}

/// Linear free-space pathloss factor `(lambda / (4 pi rho))^2`.
pub fn freespace_pathloss_linear(rho_m: f64, lambda_m: f64) -> f64 {
    (lambda_m / (4.0 * std::f64::consts::PI * rho_m)).powi(2)
}

/// DC power consumption of one architecture option.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PowerReport {
    pub pa_count: usize,
    pub p_pa_max_dbm: f64,
    pub efficiency: f64,
    pub p_dc_watts: f64,
}

fn dc_power(p_rf_dbm: f64, peak_weight_power: f64, pa_count: usize, eta: f64) -> PowerReport {
    // all PAs biased for the largest per-branch RF power
    let p_pa_max_w = peak_weight_power * dbm_to_watts(p_rf_dbm);
    PowerReport {
        pa_count,
        p_pa_max_dbm: watts_to_dbm(p_pa_max_w),
        efficiency: eta,
        p_dc_watts: pa_count as f64 * p_pa_max_w / eta,
    }
}

/// Feeder-fed architecture: one PA per feeder element, branch powers set by
/// the unit-norm feeder weight amplitudes.
pub fn dc_power_arch1(p_rf_dbm: f64, feeder_amplitudes: &[f64], eta: f64) -> PowerReport {
    let peak = feeder_amplitudes.iter().map(|a| a * a).fold(0.0, f64::max);
    dc_power(p_rf_dbm, peak, feeder_amplitudes.len(), eta)
}

/// Fully active array: one PA per radiating element, branch powers set by the
/// unit-norm surface excitation amplitudes.
pub fn dc_power_arch2(p_rf_dbm: f64, excitation_amplitudes: &[f64], eta: f64) -> PowerReport {
    let peak = excitation_amplitudes
        .iter()
        .map(|a| a * a)
        .fold(0.0, f64::max);
    dc_power(p_rf_dbm, peak, excitation_amplitudes.len(), eta)
}
