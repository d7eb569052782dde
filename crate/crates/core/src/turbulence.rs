//! Turbulence statistics and pointing: Hufnagel-Valley C_n^2 profile,
//! Rytov scintillation index with log-normal intensity statistics, beam
//! wander, Rayleigh-distributed pointing deflection, and the probability
//! distribution of the transmission coefficient (PDTC) with its derived
//! loss entries.
//!
//! The PDTC follows the canonical circular-aperture forms: the maximal
//! transmittance `T0`, shape `lambda`, and scale `R1` are functions of the
//! aperture-to-beam ratio through exponentially scaled modified Bessel
//! functions, and the density of `T` is the push-forward of the Rayleigh
//! deflection density through the transmission curve. That push-forward
//! identity is the module's central cross-check and is enforced by test.

use crate::error::{Error, Result};
use crate::math::{adaptive_simpson, bessel_i0e, bessel_i1e, normal_cdf, normal_quantile};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

const DB_PER_LN: f64 = 10.0 / std::f64::consts::LN_10;
/// Rytov-variance coefficient for a plane-wave downlink.
const RYTOV_COEFF: f64 = 2.25;
/// Beam-wander variance coefficient (weak turbulence, collimated beam,
/// Kolmogorov spectrum with infinite outer scale).
const WANDER_COEFF: f64 = 1.919;

/// Hufnagel-Valley turbulence profile and pointing parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurbulenceProfile {
    /// Ground-level C_n^2 strength A, m^-2/3.
    pub hv_ground_cn2: f64,
    /// High-altitude wind speed, m/s.
    pub hv_wind_speed: f64,
    /// Ground-station height above the profile origin, m.
    pub ground_height_m: f64,
    /// Top of the turbulent atmosphere, m.
    pub atmosphere_top_m: f64,
    /// Operating wavelength, m.
    pub wavelength_m: f64,
    /// Spacecraft pointing error, rad.
    pub pointing_error_rad: f64,
}

impl Default for TurbulenceProfile {
    fn default() -> Self {
        TurbulenceProfile {
            hv_ground_cn2: 1.7e-14,
            hv_wind_speed: 21.0,
            ground_height_m: 0.0,
            atmosphere_top_m: 20_000.0,
            wavelength_m: 850e-9,
            pointing_error_rad: 1.0e-6,
        }
    }
}

impl TurbulenceProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("turbulence.hv_ground_cn2", self.hv_ground_cn2),
            ("turbulence.hv_wind_speed", self.hv_wind_speed),
            ("turbulence.wavelength_m", self.wavelength_m),
            ("turbulence.pointing_error_rad", self.pointing_error_rad),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, "must be > 0"));
            }
        }
        if self.ground_height_m < 0.0 {
            return Err(Error::config("turbulence.ground_height_m", "must be >= 0"));
        }
        if self.atmosphere_top_m <= self.ground_height_m {
            return Err(Error::config("turbulence.atmosphere_top_m", "must exceed ground height"));
        }
        Ok(())
    }

    /// Optical wavenumber 2 pi / lambda.
    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength_m
    }

    /// Integral of C_n^2(h) h^(5/6) over the profile, the downlink Rytov
    /// moment.
    pub fn cn2_moment_integral(&self) -> Result<f64> {
        adaptive_simpson(
            &|h| cn2(h, self) * h.max(0.0).powf(5.0 / 6.0),
            self.ground_height_m,
            self.atmosphere_top_m,
            1e-16,
        )
    }

    /// Path-averaged C_n^2 over the profile.
    pub fn cn2_path_average(&self) -> Result<f64> {
        let span = self.atmosphere_top_m - self.ground_height_m;
        Ok(adaptive_simpson(&|h| cn2(h, self), self.ground_height_m, self.atmosphere_top_m, 1e-18)?
            / span)
    }
}

/// Hufnagel-Valley refractive-index structure constant at height `h`.
pub fn cn2(height_m: f64, p: &TurbulenceProfile) -> f64 {
    let h = height_m.max(0.0);
    0.00594 * (p.hv_wind_speed / 27.0).powi(2) * (1e-5 * h).powi(10) * (-h / 1000.0).exp()
        + 2.7e-16 * (-h / 1500.0).exp()
        + p.hv_ground_cn2 * (-h / 100.0).exp()
}

fn capped_secant(zenith_rad: f64) -> f64 {
    1.0 / zenith_rad.clamp(0.0, crate::atmosphere::SECANT_CAP_RAD).cos()
}

/// Weak-fluctuation (Rytov) scintillation index for the downlink:
/// `2.25 k^(7/6) sec^(11/6)(zenith) Int C_n^2(h) h^(5/6) dh`,
/// secant capped at 85 deg.
pub fn scintillation_index(zenith_rad: f64, p: &TurbulenceProfile) -> Result<f64> {
    let moment = p.cn2_moment_integral()?;
    Ok(RYTOV_COEFF
        * p.wavenumber().powf(7.0 / 6.0)
        * capped_secant(zenith_rad).powf(11.0 / 6.0)
        * moment)
}

/// Log-normal density of the normalized received intensity with
/// scintillation index `sigma2` and mean `mean_intensity`.
pub fn lognormal_intensity_pdf(intensity: f64, sigma2: f64, mean_intensity: f64) -> Result<f64> {
    if !(sigma2 > 0.0 && mean_intensity > 0.0) {
        return Err(Error::domain(
            "lognormal_intensity_pdf",
            "sigma2 and mean intensity must be > 0",
        ));
    }
    if intensity <= 0.0 {
        return Ok(0.0);
    }
    let sigma = sigma2.sqrt();
    let z = ((intensity / mean_intensity).ln() + 0.5 * sigma2) / sigma;
    Ok((-0.5 * z * z).exp() / (intensity * sigma * (2.0 * std::f64::consts::PI).sqrt()))
}

/// Quantile of the scintillation fade depth in dB, clamped at 0 on the gain
/// side. `percentile = 0` is the fade floor; `percentile` must be < 1.
pub fn scintillation_loss_quantile_db(sigma2: f64, percentile: f64) -> Result<f64> {
    if sigma2 < 0.0 {
        return Err(Error::domain("scintillation_loss_quantile_db", "sigma2 must be >= 0"));
    }
    if !(0.0..1.0).contains(&percentile) {
        return Err(Error::domain(
            "scintillation_loss_quantile_db",
            format!("percentile {percentile} outside [0, 1)"),
        ));
    }
    if sigma2 == 0.0 || percentile == 0.0 {
        return Ok(0.0);
    }
    let z = normal_quantile(percentile)?;
    Ok((DB_PER_LN * (0.5 * sigma2 + sigma2.sqrt() * z)).max(0.0))
}

/// Percentile at which the fade-depth quantile reaches `table_max_db` for
/// the given scintillation index (the budget's table-maximum percentile).
pub fn scintillation_table_max_percentile(sigma2: f64, table_max_db: f64) -> f64 {
    let sigma = sigma2.sqrt();
    normal_cdf((table_max_db / DB_PER_LN - 0.5 * sigma2) / sigma)
}

/// Draw one fade depth in dB from the log-normal intensity statistics,
/// clamped at 0 on the gain side.
pub fn sample_scintillation_loss_db<R: Rng + ?Sized>(sigma2: f64, rng: &mut R) -> f64 {
    if sigma2 <= 0.0 {
        return 0.0;
    }
    let g: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
    (DB_PER_LN * (0.5 * sigma2 - sigma2.sqrt() * g)).max(0.0)
}

/// Beam-wander variance `1.919 C_n^2 z^3 (2 w0)^(-1/3)` in m^2, with the
/// path-averaged C_n^2 of the profile.
pub fn beam_wander_variance(z_m: f64, w0_m: f64, p: &TurbulenceProfile) -> Result<f64> {
    if !(z_m > 0.0 && w0_m > 0.0) {
        return Err(Error::domain("beam_wander_variance", "z and w0 must be > 0"));
    }
    Ok(WANDER_COEFF * p.cn2_path_average()? * z_m.powi(3) * (2.0 * w0_m).powf(-1.0 / 3.0))
}

/// Pointing-deflection scale `sigma_r = sqrt((theta_p L)^2 + sigma_w^2)`.
pub fn pointing_sigma(slant_range_m: f64, sigma_w_m: f64, p: &TurbulenceProfile) -> Result<f64> {
    if !(slant_range_m > 0.0) {
        return Err(Error::domain("pointing_sigma", "slant range must be > 0"));
    }
    let jitter = p.pointing_error_rad * slant_range_m;
    Ok((jitter * jitter + sigma_w_m * sigma_w_m).sqrt())
}

/// Rayleigh density of the beam-center deflection distance:
/// `(r / sigma_r^2) exp(-r^2 / (2 sigma_r^2))`.
pub fn weibull_pointing_pdf(r_m: f64, sigma_r_m: f64) -> f64 {
    if r_m < 0.0 || sigma_r_m <= 0.0 {
        return 0.0;
    }
    r_m / (sigma_r_m * sigma_r_m) * (-r_m * r_m / (2.0 * sigma_r_m * sigma_r_m)).exp()
}

/// Draw one deflection distance from the Rayleigh pointing density.
pub fn sample_deflection<R: Rng + ?Sized>(sigma_r_m: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen::<f64>();
    sigma_r_m * (-2.0 * (1.0 - u).max(f64::MIN_POSITIVE).ln()).sqrt()
}

/// PDTC parameters for one geometry / pointing state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PdtcParams {
    /// Maximal transmission coefficient for the beam size.
    pub t0: f64,
    /// Shape parameter of the transmission curve.
    pub lambda: f64,
    /// Scale parameter of the transmission curve, m.
    pub r1: f64,
    /// Rayleigh deflection scale, m.
    pub sigma_r: f64,
    /// Receiver aperture radius, m.
    pub aperture_radius: f64,
    /// Beam radius at the aperture plane, m.
    pub beam_width: f64,
}

/// Canonical PDTC parameters for aperture radius `a`, beam radius `w`, and
/// deflection scale `sigma_r`:
///
/// `T0^2 = 1 - exp(-2 a^2 / W^2)`, and shape/scale from the scaled Bessel
/// ratio forms. Evaluated with exponentially scaled `I0`, `I1` so large
/// `a/W` cannot overflow.
pub fn pdtc_params(a_m: f64, w_m: f64, sigma_r_m: f64) -> Result<PdtcParams> {
    if !(a_m > 0.0 && w_m > 0.0 && sigma_r_m > 0.0) {
        return Err(Error::domain("pdtc_params", "a, W, sigma_r must be > 0"));
    }
    let ratio2 = a_m * a_m / (w_m * w_m);
    let x = 4.0 * ratio2;
    let t0_sq = -(-2.0 * ratio2).exp_m1();
    let i0e = bessel_i0e(x);
    let i1e = bessel_i1e(x);
    let denom = 1.0 - i0e;
    if denom <= 0.0 {
        return Err(Error::numeric("pdtc_params", format!("degenerate denominator at x = {x}")));
    }
    let ln_term = (2.0 * t0_sq / denom).ln();
    if !(ln_term > 0.0) {
        return Err(Error::numeric("pdtc_params", format!("non-positive log term at x = {x}")));
    }
    let lambda = 8.0 * ratio2 * (i1e / denom) / ln_term;
    let r1 = a_m * ln_term.powf(-1.0 / lambda);
    if !(lambda.is_finite() && r1.is_finite() && lambda > 0.0 && r1 > 0.0) {
        return Err(Error::numeric("pdtc_params", "non-finite shape/scale".to_string()));
    }
    Ok(PdtcParams {
        t0: t0_sq.sqrt(),
        lambda,
        r1,
        sigma_r: sigma_r_m,
        aperture_radius: a_m,
        beam_width: w_m,
    })
}

/// Transmission coefficient at deflection `r`:
/// `T(r) = T0 exp(-(r/R1)^lambda / 2)`.
pub fn transmission(r_m: f64, params: &PdtcParams) -> f64 {
    if r_m < 0.0 {
        return params.t0;
    }
    params.t0 * (-0.5 * (r_m / params.r1).powf(params.lambda)).exp()
}

/// Density of the transmission coefficient: the push-forward of the
/// Rayleigh deflection density through `transmission`. Zero outside
/// `(0, T0)`.
pub fn pdtc_pdf(t: f64, params: &PdtcParams) -> f64 {
    if t <= 0.0 || t >= params.t0 {
        return 0.0;
    }
    let s = 2.0 * (params.t0 / t).ln();
    let r2 = params.r1 * params.r1;
    let sig2 = params.sigma_r * params.sigma_r;
    2.0 * r2 / (sig2 * params.lambda * t)
        * s.powf(2.0 / params.lambda - 1.0)
        * (-0.5 * r2 / sig2 * s.powf(2.0 / params.lambda)).exp()
}

/// CDF of the transmission coefficient, `P(T <= t) = exp(-r(t)^2 / 2 sigma_r^2)`.
pub fn pdtc_cdf(t: f64, params: &PdtcParams) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= params.t0 {
        return 1.0;
    }
    let s = 2.0 * (params.t0 / t).ln();
    let r = params.r1 * s.powf(1.0 / params.lambda);
    (-r * r / (2.0 * params.sigma_r * params.sigma_r)).exp()
}

/// Mean deflection distance, the numerical expectation of `r` over the
/// normalized Rayleigh deflection density.
pub fn mean_deflection(params: &PdtcParams) -> Result<f64> {
    let sigma = params.sigma_r;
    adaptive_simpson(&|r| r * weibull_pointing_pdf(r, sigma), 0.0, 12.0 * sigma, 1e-10 * sigma)
}

/// Mean off-pointing loss `-10 log10(T^2(E[r]) / T0^2)` in dB.
pub fn offpointing_loss_db(params: &PdtcParams) -> Result<f64> {
    let er = mean_deflection(params)?;
    Ok(DB_PER_LN * (er / params.r1).powf(params.lambda))
}
