//! Static atmosphere models: transmissivity vs. zenith angle, photon degree
//! of polarization vs. elevation, and night-sky background counts with the
//! resulting signal fraction.
//!
//! All three are parametric profiles anchored to published mission-study
//! constants rather than radiative-transfer output. Conversions that are not
//! physically well defined at the operating wavelength (sky brightness in
//! cd/m^2 to spectral radiance) are explicit calibration constants,
//! back-solved once at model construction and recorded on the model.

use crate::beam::ReceiverConfig;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Zenith angle beyond which secant-family airmass models are clamped.
pub const SECANT_CAP_RAD: f64 = 85.0 * std::f64::consts::PI / 180.0;

fn capped_secant(zenith_rad: f64) -> f64 {
    1.0 / zenith_rad.clamp(0.0, SECANT_CAP_RAD).cos()
}

/// Interpolation rule for the degree-of-polarization profile.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum DopInterpolation {
    /// Linear in sec(zenith) between the zenith and horizon endpoints; path
    /// length through the scattering layers scales with the secant.
    #[default]
    LinearInSecant,
    /// Piecewise-linear table of (elevation_rad, dop) points.
    Table { points: Vec<(f64, f64)> },
}

/// Static atmospheric transmissivity and depolarization profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtmosphereModel {
    /// Optical transmissivity at zenith.
    pub tau_zenith: f64,
    /// Degree of polarization at zenith.
    pub dop_zenith: f64,
    /// Degree of polarization at the horizon.
    pub dop_horizon: f64,
    pub dop_interpolation: DopInterpolation,
}

impl Default for AtmosphereModel {
    fn default() -> Self {
        AtmosphereModel {
            tau_zenith: 0.851,
            dop_zenith: 0.968,
            dop_horizon: 0.961,
            dop_interpolation: DopInterpolation::default(),
        }
    }
}

impl AtmosphereModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("atmosphere.tau_zenith", self.tau_zenith),
            ("atmosphere.dop_zenith", self.dop_zenith),
            ("atmosphere.dop_horizon", self.dop_horizon),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(name, "must be in (0, 1]"));
            }
        }
        if let DopInterpolation::Table { points } = &self.dop_interpolation {
            if points.len() < 2 {
                return Err(Error::config("atmosphere.dop_interpolation", "table needs >= 2 points"));
            }
        }
        Ok(())
    }
}

/// Atmospheric transmissivity `tau_zen^sec(zenith)`, secant capped at 85 deg.
pub fn transmissivity(zenith_rad: f64, m: &AtmosphereModel) -> f64 {
    m.tau_zenith.powf(capped_secant(zenith_rad))
}

/// Atmospheric loss entry in dB at the given zenith angle.
pub fn atmospheric_loss_db(zenith_rad: f64, m: &AtmosphereModel) -> f64 {
    -10.0 * transmissivity(zenith_rad, m).log10()
}

/// Degree of polarization at the given elevation.
pub fn dop(elevation_rad: f64, m: &AtmosphereModel) -> f64 {
    match &m.dop_interpolation {
        DopInterpolation::LinearInSecant => {
            let s = capped_secant(FRAC_PI_2 - elevation_rad);
            let s_max = 1.0 / SECANT_CAP_RAD.cos();
            m.dop_zenith + (m.dop_horizon - m.dop_zenith) * (s - 1.0) / (s_max - 1.0)
        }
        DopInterpolation::Table { points } => {
            let e = elevation_rad;
            if e <= points[0].0 {
                return points[0].1;
            }
            for w in points.windows(2) {
                if e <= w[1].0 {
                    let f = (e - w[0].0) / (w[1].0 - w[0].0);
                    return w[0].1 + f * (w[1].1 - w[0].1);
                }
            }
            points[points.len() - 1].1
        }
    }
}

/// Loss in dB of a fraction under a configurable power: `-10 e log10(f)`.
///
/// Both amplitude-fraction channels (depolarization, background SNR) use
/// the default exponent 2, the only power reproducing the reference budget
/// rows from their published fractions.
pub fn fraction_loss_db(fraction: f64, exponent: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::domain(
            "fraction_loss_db",
            format!("fraction {fraction} outside (0, 1]"),
        ));
    }
    Ok(-10.0 * exponent * fraction.log10())
}

/// Depolarization loss `-20 log10(dop)` in dB.
pub fn depolarization_loss_db(dop: f64) -> Result<f64> {
    fraction_loss_db(dop, 2.0).map_err(|_| {
        Error::domain("depolarization_loss_db", format!("dop {dop} outside (0, 1]"))
    })
}

/// Airmass rule used to scale counts away from zenith.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AirmassModel {
    /// sec(zenith), clamped at 85 deg.
    Secant,
    /// Kasten-Young empirical airmass, clamped at 85 deg.
    KastenYoung,
}

impl AirmassModel {
    fn evaluate(self, zenith_rad: f64) -> f64 {
        let z = zenith_rad.clamp(0.0, SECANT_CAP_RAD);
        match self {
            AirmassModel::Secant => 1.0 / z.cos(),
            AirmassModel::KastenYoung => {
                let z_deg = z.to_degrees();
                1.0 / (z.cos() + 0.50572 * (96.07995 - z_deg).powf(-1.6364))
            }
        }
    }
}

/// Calibration anchors for the background/signal profiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackgroundCalibration {
    /// Time-gated background counts at zenith, cps.
    pub zenith_counts_cps: f64,
    /// Time-gated background counts at 80 deg zenith angle, cps.
    pub counts_at_80deg_cps: f64,
    /// Signal fraction S/(S+B) at zenith.
    pub zenith_signal_fraction: f64,
    /// Signal fraction at 80 deg zenith angle.
    pub signal_fraction_at_80deg: f64,
}

impl Default for BackgroundCalibration {
    fn default() -> Self {
        BackgroundCalibration {
            zenith_counts_cps: 1.1e5,
            counts_at_80deg_cps: 0.3e5,
            zenith_signal_fraction: 0.798,
            signal_fraction_at_80deg: 0.102,
        }
    }
}

/// Night-sky background and signal-reference model.
///
/// Counts at zenith evaluate
/// `N = (H_nat + H_art) k pi FoV^2 q_eff (pi/4) D_R^2 gating / E_photon`;
/// the radiance conversion `k` is back-solved so the default configuration
/// reproduces the calibrated zenith count rate. Counts and the signal
/// reference fall off as a power of the airmass, with exponents back-solved
/// from the 80-degree anchors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackgroundModel {
    /// Natural night-sky brightness, cd/m^2.
    pub natural_brightness: f64,
    /// Artificial night-sky brightness, cd/m^2.
    pub artificial_brightness: f64,
    /// Brightness-to-radiance conversion, (W m^-2 sr^-1) per (cd m^-2).
    pub radiance_conversion: f64,
    /// Time-gating suppression factor.
    pub gating_factor: f64,
    pub airmass_model: AirmassModel,
    /// Photon energy at the operating wavelength, J.
    pub photon_energy_j: f64,
    /// Power-law exponent of counts vs airmass (back-solved).
    pub counts_airmass_exponent: f64,
    /// Signal reference at zenith, cps (back-solved).
    pub signal_zenith_cps: f64,
    /// Power-law exponent of the signal reference vs airmass (back-solved).
    pub signal_airmass_exponent: f64,
}

impl BackgroundModel {
    /// Build the model, back-solving the radiance conversion and the two
    /// airmass exponents from the calibration anchors.
    pub fn calibrated(
        natural_brightness: f64,
        artificial_brightness: f64,
        gating_factor: f64,
        airmass_model: AirmassModel,
        photon_energy_j: f64,
        rx: &ReceiverConfig,
        cal: &BackgroundCalibration,
    ) -> Result<Self> {
        if !(natural_brightness >= 0.0 && artificial_brightness >= 0.0) {
            return Err(Error::config("background.brightness", "must be >= 0"));
        }
        if !(gating_factor > 0.0 && gating_factor <= 1.0) {
            return Err(Error::config("background.gating_factor", "must be in (0, 1]"));
        }
        if !(photon_energy_j > 0.0) {
            return Err(Error::config("background.photon_energy_j", "must be > 0"));
        }
        for (name, v) in [
            ("background.calibration.zenith_counts_cps", cal.zenith_counts_cps),
            ("background.calibration.counts_at_80deg_cps", cal.counts_at_80deg_cps),
        ] {
            if !(v > 0.0) {
                return Err(Error::config(name, "must be > 0"));
            }
        }
        for (name, v) in [
            ("background.calibration.zenith_signal_fraction", cal.zenith_signal_fraction),
            ("background.calibration.signal_fraction_at_80deg", cal.signal_fraction_at_80deg),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(name, "must be in (0, 1)"));
            }
        }

        let h_total = natural_brightness + artificial_brightness;
        let geometry = std::f64::consts::PI
            * rx.field_of_view_rad.powi(2)
            * rx.quantum_efficiency
            * std::f64::consts::FRAC_PI_4
            * rx.aperture_diameter_m.powi(2);
        let radiance_conversion = if h_total > 0.0 {
            cal.zenith_counts_cps * photon_energy_j / (h_total * geometry * gating_factor)
        } else {
            0.0
        };

        let airmass_80 = airmass_model.evaluate(80f64.to_radians());
        let counts_airmass_exponent =
            (cal.zenith_counts_cps / cal.counts_at_80deg_cps).ln() / airmass_80.ln();

        let b0 = cal.zenith_counts_cps;
        let b80 = cal.counts_at_80deg_cps;
        let s0 = b0 * cal.zenith_signal_fraction / (1.0 - cal.zenith_signal_fraction);
        let s80 = b80 * cal.signal_fraction_at_80deg / (1.0 - cal.signal_fraction_at_80deg);
        let signal_airmass_exponent = (s0 / s80).ln() / airmass_80.ln();

        Ok(BackgroundModel {
            natural_brightness,
            artificial_brightness,
            radiance_conversion,
            gating_factor,
            airmass_model,
            photon_energy_j,
            counts_airmass_exponent,
            signal_zenith_cps: s0,
            signal_airmass_exponent,
        })
    }

    /// Default model for the given receiver: default brightnesses, 0.1
    /// gating, secant airmass, 850 nm photons, default anchors.
    pub fn default_for(rx: &ReceiverConfig) -> Result<Self> {
        BackgroundModel::calibrated(
            1.71e-4,
            5.1e-5,
            0.1,
            AirmassModel::Secant,
            crate::beam::photon_energy(850e-9),
            rx,
            &BackgroundCalibration::default(),
        )
    }
}

/// Time-gated background counts at zenith, cps.
pub fn background_counts_zenith(b: &BackgroundModel, rx: &ReceiverConfig) -> f64 {
    let radiance = (b.natural_brightness + b.artificial_brightness) * b.radiance_conversion;
    let geometry = std::f64::consts::PI
        * rx.field_of_view_rad.powi(2)
        * rx.quantum_efficiency
        * std::f64::consts::FRAC_PI_4
        * rx.aperture_diameter_m.powi(2);
    radiance * geometry * b.gating_factor / b.photon_energy_j
}

/// Time-gated background counts at the given elevation, cps.
///
/// Below the airmass validity floor the profile is clamped (the capped
/// secant) and a warning is logged.
pub fn background_counts(elevation_rad: f64, b: &BackgroundModel, rx: &ReceiverConfig) -> f64 {
    if elevation_rad < 5f64.to_radians() {
        log::warn!(
            "background_counts: elevation {:.2} deg below airmass validity floor; clamping",
            elevation_rad.to_degrees()
        );
    }
    let airmass = b.airmass_model.evaluate(FRAC_PI_2 - elevation_rad);
    background_counts_zenith(b, rx) * airmass.powf(-b.counts_airmass_exponent)
}

/// Calibrated signal reference at the given elevation, cps.
pub fn signal_cps(elevation_rad: f64, b: &BackgroundModel) -> f64 {
    let airmass = b.airmass_model.evaluate(FRAC_PI_2 - elevation_rad);
    b.signal_zenith_cps * airmass.powf(-b.signal_airmass_exponent)
}

/// Signal fraction `S / (S + B)`.
pub fn signal_fraction(signal_cps: f64, background_cps: f64) -> Result<f64> {
    if signal_cps < 0.0 || background_cps < 0.0 {
        return Err(Error::domain("signal_fraction", "rates must be >= 0"));
    }
    let total = signal_cps + background_cps;
    if total == 0.0 {
        return Err(Error::domain("signal_fraction", "0/0: both rates are zero"));
    }
    Ok(signal_cps / total)
}

/// Signal fraction of the calibrated default pipeline at an elevation.
pub fn signal_fraction_at(
    elevation_rad: f64,
    b: &BackgroundModel,
    rx: &ReceiverConfig,
) -> Result<f64> {
    signal_fraction(signal_cps(elevation_rad, b), background_counts(elevation_rad, b, rx))
}

/// Background signal-to-noise loss `-20 log10(S_F)` in dB.
pub fn snr_loss_db(signal_fraction: f64) -> Result<f64> {
    fraction_loss_db(signal_fraction, 2.0).map_err(|_| {
        Error::domain(
            "snr_loss_db",
            format!("signal fraction {signal_fraction} outside (0, 1]"),
        )
    })
}
