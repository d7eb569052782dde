//! Pass geometry for a circular orbit over a ground station.
//!
//! A non-rotating spherical Earth and a circular orbit are enough to produce
//! the elevation / zenith-angle / slant-range time series every loss channel
//! consumes. The default pass culminates at zenith; lowering
//! `max_pass_elevation` shifts the ground track laterally to emulate
//! off-track passes.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Circular-orbit and visibility parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitConfig {
    /// Orbit altitude above the surface, m.
    pub altitude_m: f64,
    /// Earth radius, m.
    pub earth_radius_m: f64,
    /// Gravitational parameter mu, m^3/s^2.
    pub gravitational_parameter: f64,
    /// Ground-station visibility mask, rad.
    pub min_elevation_rad: f64,
    /// Culmination elevation of the pass, rad.
    pub max_pass_elevation_rad: f64,
    /// Sampling interval, s.
    pub time_step_s: f64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            altitude_m: 750e3,
            earth_radius_m: 6_371_000.0,
            gravitational_parameter: 3.986004418e14,
            min_elevation_rad: 10f64.to_radians(),
            max_pass_elevation_rad: FRAC_PI_2,
            time_step_s: 10.0,
        }
    }
}

impl OrbitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.altitude_m.is_finite() && self.altitude_m > 0.0) {
            return Err(Error::config("orbit.altitude_m", "must be > 0"));
        }
        if self.earth_radius_m <= 0.0 {
            return Err(Error::config("orbit.earth_radius_m", "must be > 0"));
        }
        if self.gravitational_parameter <= 0.0 {
            return Err(Error::config("orbit.gravitational_parameter", "must be > 0"));
        }
        if !(self.min_elevation_rad > 0.0 && self.min_elevation_rad < self.max_pass_elevation_rad) {
            return Err(Error::config(
                "orbit.min_elevation_rad",
                "need 0 < min_elevation < max_pass_elevation",
            ));
        }
        if self.max_pass_elevation_rad > FRAC_PI_2 + 1e-12 {
            return Err(Error::config("orbit.max_pass_elevation_rad", "must be <= pi/2"));
        }
        if !(self.time_step_s > 0.0) {
            return Err(Error::config("orbit.time_step_s", "must be > 0"));
        }
        Ok(())
    }

    /// Orbit radius (semi-major axis of the circular orbit), m.
    pub fn orbit_radius_m(&self) -> f64 {
        self.earth_radius_m + self.altitude_m
    }

    /// Orbital angular rate omega = sqrt(mu / a^3), rad/s.
    pub fn angular_rate(&self) -> f64 {
        (self.gravitational_parameter / self.orbit_radius_m().powi(3)).sqrt()
    }
}

/// One time step of a pass. `t_s` is zero at culmination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassSample {
    pub t_s: f64,
    pub elevation_rad: f64,
    pub zenith_rad: f64,
    pub slant_range_m: f64,
}

/// Slant range from ground station to spacecraft at the given elevation.
///
/// Spherical-Earth law of cosines:
/// `L = sqrt(Re^2 sin^2 e + 2 Re h + h^2) - Re sin e`.
pub fn slant_range(elevation_rad: f64, cfg: &OrbitConfig) -> Result<f64> {
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&elevation_rad) {
        return Err(Error::domain(
            "slant_range",
            format!("elevation {elevation_rad} rad outside [0, pi/2]"),
        ));
    }
    let re = cfg.earth_radius_m;
    let h = cfg.altitude_m;
    let s = elevation_rad.sin();
    Ok((re * re * s * s + 2.0 * re * h + h * h).sqrt() - re * s)
}

/// Earth-central angle between ground station and sub-satellite point when
/// the spacecraft is seen at `elevation`.
fn central_angle_at_elevation(elevation_rad: f64, cfg: &OrbitConfig) -> f64 {
    let ratio = cfg.earth_radius_m / cfg.orbit_radius_m();
    FRAC_PI_2 - elevation_rad - (ratio * elevation_rad.cos()).asin()
}

/// Elevation of the spacecraft at Earth-central angle `psi` from the station.
fn elevation_at_central_angle(psi: f64, cfg: &OrbitConfig) -> f64 {
    let a = cfg.orbit_radius_m();
    let re = cfg.earth_radius_m;
    let range = (a * a + re * re - 2.0 * a * re * psi.cos()).sqrt();
    ((a * psi.cos() - re) / range).asin()
}

/// Sample the pass at the configured time step, time-symmetric about
/// culmination, clipped to `elevation >= min_elevation`.
pub fn generate_pass(cfg: &OrbitConfig) -> Result<Vec<PassSample>> {
    cfg.validate()?;
    let omega = cfg.angular_rate();
    // Cross-track offset realizing the requested culmination elevation.
    let beta = central_angle_at_elevation(cfg.max_pass_elevation_rad, cfg);
    let cos_beta = beta.cos();

    let elevation_at = |t_abs: f64| -> f64 {
        let cos_psi = (omega * t_abs).cos() * cos_beta;
        elevation_at_central_angle(cos_psi.clamp(-1.0, 1.0).acos(), cfg)
    };

    let mut half = Vec::new();
    let mut k = 1u64;
    loop {
        let t = k as f64 * cfg.time_step_s;
        let e = elevation_at(t);
        if e < cfg.min_elevation_rad {
            break;
        }
        half.push((t, e));
        k += 1;
        if omega * t > std::f64::consts::PI {
            break; // past the far side of the orbit; nothing more visible
        }
    }

    let make = |t: f64, e: f64| -> Result<PassSample> {
        Ok(PassSample {
            t_s: t,
            elevation_rad: e,
            zenith_rad: FRAC_PI_2 - e,
            slant_range_m: slant_range(e, cfg)?,
        })
    };

    let mut samples = Vec::with_capacity(2 * half.len() + 1);
    for &(t, e) in half.iter().rev() {
        samples.push(make(-t, e)?);
    }
    samples.push(make(0.0, elevation_at(0.0))?);
    for &(t, e) in half.iter() {
        samples.push(make(t, e)?);
    }
    Ok(samples)
}

/// Duration of the contiguous window around culmination with
/// `elevation >= threshold`, computed from the continuous geometry.
///
/// Returns 0 when the threshold exceeds the culmination elevation.
pub fn pass_duration_above(cfg: &OrbitConfig, threshold_rad: f64) -> Result<f64> {
    cfg.validate()?;
    if !(threshold_rad >= cfg.min_elevation_rad && threshold_rad < FRAC_PI_2) {
        return Err(Error::domain(
            "pass_duration_above",
            format!("threshold {threshold_rad} rad outside [min_elevation, pi/2)"),
        ));
    }
    let beta = central_angle_at_elevation(cfg.max_pass_elevation_rad, cfg);
    let need = central_angle_at_elevation(threshold_rad, cfg).cos() / beta.cos();
    if need > 1.0 {
        return Ok(0.0);
    }
    Ok(2.0 * need.clamp(-1.0, 1.0).acos() / cfg.angular_rate())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> OrbitConfig {
        OrbitConfig::default()
    }

    #[test]
    fn zenith_slant_range_equals_altitude() {
        let l = slant_range(FRAC_PI_2, &cfg()).unwrap();
        assert!((l - 750e3).abs() < 1e-6, "{l}");
    }

    #[test]
    fn horizon_slant_range_matches_tangent_oracle() {
        // Independent oracle: sqrt((Re+h)^2 - Re^2) at zero elevation.
        let c = cfg();
        let oracle = ((c.earth_radius_m + c.altitude_m).powi(2) - c.earth_radius_m.powi(2)).sqrt();
        let l = slant_range(0.0, &c).unwrap();
        assert!((l - oracle).abs() < 1e-6);
        assert!((l - 3.181e6).abs() < 1e3, "{l}");
    }

    #[test]
    fn ten_degree_slant_range() {
        // Closed form evaluated independently: 2261.7 km.
        let l = slant_range(10f64.to_radians(), &cfg()).unwrap();
        assert!((l - 2.2617e6).abs() < 500.0, "{l}");
    }

    #[test]
    fn slant_range_rejects_out_of_domain() {
        assert!(slant_range(-0.01, &cfg()).is_err());
        assert!(slant_range(2.0, &cfg()).is_err());
    }

    #[test]
    fn slant_range_strictly_decreasing() {
        let c = cfg();
        let mut prev = slant_range(0.0, &c).unwrap();
        for k in 1..=90 {
            let l = slant_range((k as f64).to_radians(), &c).unwrap();
            assert!(l < prev, "not decreasing at {k} deg");
            prev = l;
        }
    }

    #[test]
    fn overhead_pass_culminates_at_zenith() {
        let pass = generate_pass(&cfg()).unwrap();
        let mid = &pass[pass.len() / 2];
        assert_eq!(mid.t_s, 0.0);
        assert!((mid.elevation_rad - FRAC_PI_2).abs() < 1e-12);
        assert!((mid.slant_range_m - 750e3).abs() < 1e-6);
    }

    #[test]
    fn zenith_range_ratio_between_altitudes() {
        let c400 = OrbitConfig { altitude_m: 400e3, ..cfg() };
        let l400 = slant_range(FRAC_PI_2, &c400).unwrap();
        let l750 = slant_range(FRAC_PI_2, &cfg()).unwrap();
        assert!((l400 / l750 - 400.0 / 750.0).abs() < 1e-12);
    }

    #[test]
    fn pass_is_time_symmetric() {
        let pass = generate_pass(&cfg()).unwrap();
        let n = pass.len();
        for i in 0..n / 2 {
            let a = &pass[i];
            let b = &pass[n - 1 - i];
            assert_eq!(a.elevation_rad, b.elevation_rad, "asymmetry at {i}");
            assert_eq!(a.slant_range_m, b.slant_range_m);
            assert_eq!(a.t_s, -b.t_s);
        }
    }

    #[test]
    fn zenith_angle_complements_elevation() {
        for s in generate_pass(&cfg()).unwrap() {
            assert!((s.zenith_rad + s.elevation_rad - FRAC_PI_2).abs() <= f64::EPSILON);
        }
    }

    #[test]
    fn sample_ranges_consistent_with_slant_range() {
        let c = cfg();
        for s in generate_pass(&c).unwrap() {
            let l = slant_range(s.elevation_rad, &c).unwrap();
            assert!((l - s.slant_range_m).abs() < 1e-9 * l.max(1.0));
        }
    }

    #[test]
    fn halving_rate_doubles_sample_count_within_one() {
        let c = cfg();
        let n1 = generate_pass(&c).unwrap().len() as i64;
        let c2 = OrbitConfig { time_step_s: 20.0, ..c };
        let n2 = generate_pass(&c2).unwrap().len() as i64;
        // doubling dt halves the count to within +-1 (pairs of half-samples)
        assert!((n1 / 2 - n2).abs() <= 1, "n1={n1} n2={n2}");
    }

    #[test]
    fn pass_duration_matches_arc_time_oracle() {
        // Independent arc-time oracle:
        //   2/omega * (pi/2 - e - asin(Re cos e / (Re+h)))
        let c = cfg();
        let e = c.min_elevation_rad;
        let a = c.orbit_radius_m();
        let psi = FRAC_PI_2 - e - (c.earth_radius_m * e.cos() / a).asin();
        let oracle = 2.0 * psi / c.angular_rate();
        let d = pass_duration_above(&c, e).unwrap();
        assert!((d - oracle).abs() < 1e-9);
        assert!((500.0..=650.0).contains(&d), "{d}");
    }

    #[test]
    fn duration_monotone_in_threshold() {
        let c = cfg();
        let d10 = pass_duration_above(&c, 10f64.to_radians()).unwrap();
        let d20 = pass_duration_above(&c, 20f64.to_radians()).unwrap();
        assert!(d20 < d10);
    }

    #[test]
    fn duration_zero_at_culmination_threshold() {
        let c = OrbitConfig { max_pass_elevation_rad: 60f64.to_radians(), ..cfg() };
        let just_below = 60f64.to_radians() - 1e-9;
        assert!(pass_duration_above(&c, just_below).unwrap() <= c.time_step_s);
        // threshold above the culmination elevation is not an error
        assert_eq!(pass_duration_above(&c, 70f64.to_radians()).unwrap(), 0.0);
    }

    #[test]
    fn off_track_pass_culminates_at_requested_elevation() {
        let c = OrbitConfig { max_pass_elevation_rad: 40f64.to_radians(), ..cfg() };
        let pass = generate_pass(&c).unwrap();
        let mid = &pass[pass.len() / 2];
        assert!((mid.elevation_rad - 40f64.to_radians()).abs() < 1e-9);
        for s in &pass {
            assert!(s.elevation_rad <= mid.elevation_rad + 1e-12);
        }
    }

    #[test]
    fn invalid_config_is_named() {
        let c = OrbitConfig { altitude_m: -1.0, ..cfg() };
        let err = generate_pass(&c).unwrap_err().to_string();
        assert!(err.contains("orbit.altitude"), "{err}");
    }
}
