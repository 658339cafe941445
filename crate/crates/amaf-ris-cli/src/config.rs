//! Flat JSON scenario configuration with explicit units in the field names.
//! Defaults reproduce the reference 100 GHz picocell design.

use amaf_ris::geometry::mean_downtilt;
use amaf_ris::{Illumination, LinkBudget, ScenarioGeometry, SimConfig, StackingAxis};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    // scenario geometry
    pub mast_height_m: f64,
    /// `null` selects the arithmetic-mean downtilt rule.
    pub downtilt_deg: Option<f64>,
    pub r_min_m: f64,
    pub r_max_m: f64,
    /// Half-width of the served azimuth sector.
    pub azimuth_span_deg: f64,

    // arrays
    pub ris_n_x: usize,
    pub ris_n_z: usize,
    pub amaf_n_h: usize,
    pub amaf_n_v: usize,
    pub focal_distance_halfwavelengths: f64,
    pub illumination: Illumination,

    // module stack
    pub num_modules_k: usize,
    pub module_separation_halfwavelengths: f64,
    pub stacking_axis: StackingAxis,

    // link budget
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub eirp_dbm: f64,
    pub target_snr_db: f64,
    /// `null` derives the feed power from the computed cell-edge gain.
    pub p_rf_dbm: Option<f64>,

    // simulation
    pub num_drops: usize,
    pub num_users: usize,
    pub min_azimuth_sep_deg: f64,
    pub pointing_error_std_deg: f64,
    pub quant_bits: u32,
    pub rng_seed: u64,

    // output resolutions
    pub pattern_resolution_deg: f64,
    pub footprint_resolution_m: f64,
    pub pa_efficiency: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            mast_height_m: 20.0,
            downtilt_deg: None,
            r_min_m: 10.0,
            r_max_m: 100.0,
            azimuth_span_deg: 60.0,
            ris_n_x: 16,
            ris_n_z: 16,
            amaf_n_h: 2,
            amaf_n_v: 2,
            focal_distance_halfwavelengths: 6.0,
            illumination: Illumination::Front,
            num_modules_k: 4,
            module_separation_halfwavelengths: 1.0,
            stacking_axis: StackingAxis::X,
            carrier_hz: 100e9,
            bandwidth_hz: 5e9,
            noise_figure_db: 5.0,
            eirp_dbm: 40.7,
            target_snr_db: 0.0,
            p_rf_dbm: Some(20.0),
            num_drops: 2000,
            num_users: 4,
            min_azimuth_sep_deg: 15.0,
            pointing_error_std_deg: 0.0,
            quant_bits: 0,
            rng_seed: 1,
            pattern_resolution_deg: 0.25,
            footprint_resolution_m: 1.0,
            pa_efficiency: 0.3,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.mast_height_m <= 0.0 {
            return Err("mast_height_m must be positive".into());
        }
        if self.r_min_m <= 0.0 || self.r_max_m <= self.r_min_m {
            return Err("require 0 < r_min_m < r_max_m".into());
        }
        if let Some(tilt) = self.downtilt_deg {
            if !(0.0..90.0).contains(&tilt) || tilt == 0.0 {
                return Err("downtilt_deg must lie in (0, 90)".into());
            }
        }
        if self.ris_n_x == 0 || self.ris_n_z == 0 || self.amaf_n_h == 0 || self.amaf_n_v == 0 {
            return Err("array dimensions must be positive".into());
        }
        if self.focal_distance_halfwavelengths <= 0.0 {
            return Err("focal_distance_halfwavelengths must be positive".into());
        }
        if self.num_modules_k == 0 {
            return Err("num_modules_k must be at least 1".into());
        }
        if self.num_users == 0 || self.num_users > self.num_modules_k {
            return Err("require 1 <= num_users <= num_modules_k".into());
        }
        if self.num_drops == 0 {
            return Err("num_drops must be at least 1".into());
        }
        if self.carrier_hz <= 0.0 || self.bandwidth_hz <= 0.0 {
            return Err("carrier_hz and bandwidth_hz must be positive".into());
        }
        if !(0.0 < self.pa_efficiency && self.pa_efficiency <= 1.0) {
            return Err("pa_efficiency must lie in (0, 1]".into());
        }
        if self.pattern_resolution_deg <= 0.0 || self.footprint_resolution_m <= 0.0 {
            return Err("resolutions must be positive".into());
        }
        Ok(())
    }

    pub fn geometry(&self) -> ScenarioGeometry {
        let mut g = ScenarioGeometry {
            mast_height_m: self.mast_height_m,
            downtilt_rad: 0.0,
            r_min_m: self.r_min_m,
            r_max_m: self.r_max_m,
            azimuth_span_rad: self.azimuth_span_deg.to_radians(),
            wavelength_m: amaf_ris::link::SPEED_OF_LIGHT / self.carrier_hz,
        };
        g.downtilt_rad = match self.downtilt_deg {
            Some(deg) => deg.to_radians(),
            None => mean_downtilt(&g),
        };
        g
    }

    pub fn link_budget(&self) -> LinkBudget {
        LinkBudget {
            carrier_hz: self.carrier_hz,
            bandwidth_hz: self.bandwidth_hz,
            noise_figure_db: self.noise_figure_db,
            eirp_dbm: self.eirp_dbm,
            target_snr_db: self.target_snr_db,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            num_drops: self.num_drops,
            num_users: self.num_users,
            min_azimuth_sep_deg: self.min_azimuth_sep_deg,
            pointing_error_std_deg: self.pointing_error_std_deg,
            quant_bits: self.quant_bits,
            rng_seed: self.rng_seed,
        }
    }
}
