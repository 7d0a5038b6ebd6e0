//! Laser ISL and Ka-band SGL link budgets.
//!
//! ISL received power is `P_T G_T G_R L_ps L_pt`, with pointing loss
//! `exp(-G_T θ_T² - G_R θ_R²)` and free-space loss `(λ / 4πl)²`. SGL power
//! is a coherent phasor sum over propagation paths, reduced by rain
//! attenuation `K R^α l_r` in dB. Rates use Shannon capacity.

use std::f64::consts::PI;

use crate::error::SimError;

/// Speed of light used for wavelengths and propagation delays.
pub const SPEED_OF_LIGHT_M_S: f64 = 3.0e8;
/// Received power reported for total destructive interference.
pub const POWER_FLOOR_DBM: f64 = -400.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) / 1000.0
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w * 1000.0)
}

pub fn wavelength_m(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT_M_S / frequency_hz
}

/// `exp(-G_T θ_T² - G_R θ_R²)` with linear gains and angles in radians.
pub fn pointing_loss(tx_gain: f64, rx_gain: f64, theta_tx: f64, theta_rx: f64) -> f64 {
    (-tx_gain * theta_tx * theta_tx - rx_gain * theta_rx * theta_rx).exp()
}

/// `(λ / 4πl)²`.
pub fn free_space_path_loss(wavelength_m: f64, distance_m: f64) -> Result<f64, SimError> {
    if !(distance_m > 0.0) {
        return Err(SimError::InvalidInput(format!("path length must be positive, got {distance_m}")));
    }
    Ok((wavelength_m / (4.0 * PI * distance_m)).powi(2))
}

pub fn shannon_rate(bandwidth_hz: f64, snr: f64) -> f64 {
    bandwidth_hz * (1.0 + snr.max(0.0)).log2()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IslParams {
    pub tx_power_w: f64,
    /// Linear gains.
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub wavelength_m: f64,
    pub bandwidth_hz: f64,
    pub noise_variance_w: f64,
    pub pointing_error_tx_rad: f64,
    pub pointing_error_rx_rad: f64,
    pub fixed_rate_bps: Option<f64>,
}

impl IslParams {
    pub fn received_power_w(&self, distance_m: f64) -> Result<f64, SimError> {
        let lps = pointing_loss(self.tx_gain, self.rx_gain, self.pointing_error_tx_rad, self.pointing_error_rx_rad);
        let lpt = free_space_path_loss(self.wavelength_m, distance_m)?;
        Ok(self.tx_power_w * self.tx_gain * self.rx_gain * lps * lpt)
    }
}

/// Achievable ISL rate at `distance_m`; a fixed-rate override is returned as is.
pub fn isl_rate(params: &IslParams, distance_m: f64) -> Result<f64, SimError> {
    if let Some(rate) = params.fixed_rate_bps {
        return Ok(rate);
    }
    let pr = params.received_power_w(distance_m)?;
    Ok(shannon_rate(params.bandwidth_hz, pr / params.noise_variance_w))
}

/// `K R^α l_r` in dB.
pub fn rain_attenuation_db(k: f64, alpha: f64, rain_rate_mm_h: f64, rain_path_km: f64) -> f64 {
    if rain_rate_mm_h == 0.0 || rain_path_km == 0.0 {
        return 0.0;
    }
    k * rain_rate_mm_h.powf(alpha) * rain_path_km
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RainParams {
    pub k: f64,
    pub alpha: f64,
    pub rate_mm_h: f64,
    pub path_km: f64,
}

impl RainParams {
    pub fn none() -> Self {
        Self { k: 0.0751, alpha: 0.083, rate_mm_h: 0.0, path_km: 0.0 }
    }

    pub fn attenuation_db(&self) -> f64 {
        rain_attenuation_db(self.k, self.alpha, self.rate_mm_h, self.path_km)
    }
}

/// One propagation path; the first path of a profile is the direct path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub reflection: f64,
    pub phase_delta_rad: f64,
    pub length_m: f64,
}

/// How rain and free-space loss are combined with the multipath power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SglPowerModel {
    /// The phasor sum already carries `1/l`; free-space loss is applied once.
    #[default]
    Physical,
    /// Subtract free-space loss in dB again on top of the multipath power.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SglParams {
    pub tx_power_w: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub rain: RainParams,
    pub multipath: Vec<PathComponent>,
    pub noise_power_w: f64,
    pub power_model: SglPowerModel,
    pub fixed_rate_bps: Option<f64>,
}

impl SglParams {
    pub fn wavelength_m(&self) -> f64 {
        wavelength_m(self.carrier_frequency_hz)
    }

    /// Same profile with the direct path stretched to `slant_range_m`;
    /// reflected paths keep their excess length over the direct path.
    pub fn at_range(&self, slant_range_m: f64) -> SglParams {
        let mut out = self.clone();
        match out.multipath.first().map(|p| p.length_m) {
            Some(direct) => {
                let shift = slant_range_m - direct;
                for p in &mut out.multipath {
                    p.length_m += shift;
                }
            }
            None => out.multipath.push(PathComponent { reflection: 1.0, phase_delta_rad: 0.0, length_m: slant_range_m }),
        }
        out
    }
}

/// `10 log10[P_t (λ/4π)² |Σ r_i e^{-jΔφ_i} / l_i|²]` in dBm, floored at
/// [`POWER_FLOOR_DBM`].
pub fn sgl_multipath_power_dbm(params: &SglParams) -> Result<f64, SimError> {
    let (direct, rest) = params
        .multipath
        .split_first()
        .ok_or_else(|| SimError::InvalidInput("multipath profile needs the direct path".into()))?;
    if direct.length_m <= 0.0 {
        return Err(SimError::InvalidInput("direct path length must be positive".into()));
    }
    let mut re = direct.reflection * direct.phase_delta_rad.cos() / direct.length_m;
    let mut im = -direct.reflection * direct.phase_delta_rad.sin() / direct.length_m;
    for p in rest {
        if p.length_m <= 0.0 {
            return Err(SimError::InvalidInput("path lengths must be positive".into()));
        }
        re += p.reflection * p.phase_delta_rad.cos() / p.length_m;
        im -= p.reflection * p.phase_delta_rad.sin() / p.length_m;
    }
    let mag2 = re * re + im * im;
    let watts = params.tx_power_w * (params.wavelength_m() / (4.0 * PI)).powi(2) * mag2;
    // relative threshold: anything below 1e-12 of the direct-path term is cancellation noise
    let direct_mag2 = (direct.reflection / direct.length_m).powi(2);
    if mag2 <= direct_mag2 * 1e-24 || watts <= 0.0 {
        return Ok(POWER_FLOOR_DBM);
    }
    Ok(watts_to_dbm(watts).max(POWER_FLOOR_DBM))
}

/// Received SGL power in dBm at the given slant range.
pub fn sgl_received_power_dbm(params: &SglParams, slant_range_m: f64) -> Result<f64, SimError> {
    let p = params.at_range(slant_range_m);
    let mp = sgl_multipath_power_dbm(&p)?;
    if mp <= POWER_FLOOR_DBM {
        return Ok(POWER_FLOOR_DBM);
    }
    let gains_db = linear_to_db(p.tx_gain) + linear_to_db(p.rx_gain);
    let mut rx = mp + gains_db - p.rain.attenuation_db();
    if p.power_model == SglPowerModel::Literal {
        let fspl = free_space_path_loss(p.wavelength_m(), slant_range_m)?;
        rx += linear_to_db(fspl);
    }
    Ok(rx.max(POWER_FLOOR_DBM))
}

/// Achievable SGL rate at `slant_range_m`; a fixed-rate override is returned as is.
pub fn sgl_rate(params: &SglParams, slant_range_m: f64) -> Result<f64, SimError> {
    if let Some(rate) = params.fixed_rate_bps {
        return Ok(rate);
    }
    let rx_dbm = sgl_received_power_dbm(params, slant_range_m)?;
    if rx_dbm <= POWER_FLOOR_DBM {
        return Ok(0.0);
    }
    Ok(shannon_rate(params.bandwidth_hz, dbm_to_watts(rx_dbm) / params.noise_power_w))
}

/// Slant range from a ground station to a satellite at `altitude_m` seen at
/// `elevation_deg`, spherical Earth.
pub fn slant_range_m(altitude_m: f64, elevation_deg: f64) -> f64 {
    let re = crate::constellation::EARTH_RADIUS_M;
    let r = re + altitude_m;
    let el = elevation_deg.to_radians();
    (r * r - (re * el.cos()).powi(2)).sqrt() - re * el.sin()
}
