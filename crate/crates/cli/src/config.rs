//! Scenario configuration: a single self-describing TOML document whose
//! sections mirror the model parameters, with every field optional and
//! defaulted. Unknown keys are rejected. The resolved configuration is
//! echoed next to the outputs for provenance.

use anyhow::{bail, Context};
use leoqkd::atmosphere::{
    AirmassModel, AtmosphereModel, BackgroundCalibration, BackgroundModel, DopInterpolation,
};
use leoqkd::bb84::{Bb84Config, BudgetTuning, KernelMode, LinkModels};
use leoqkd::beam::{photon_energy, DivergenceMode, ReceiverConfig, TransmitterConfig};
use leoqkd::e91::{ChshAngles, E91NoiseModel};
use leoqkd::orbit::OrbitConfig;
use leoqkd::turbulence::TurbulenceProfile;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Budget,
    Bb84,
    E91,
    Sweep,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub output_dir: String,
    pub orbit: OrbitSection,
    pub transmitter: TransmitterSection,
    pub receiver: ReceiverSection,
    pub atmosphere: AtmosphereSection,
    pub background: BackgroundSection,
    pub turbulence: TurbulenceSection,
    pub protocol: ProtocolSection,
    pub sweep: SweepSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: Scenario::Budget,
            seed: 42,
            output_dir: "out".to_string(),
            orbit: OrbitSection::default(),
            transmitter: TransmitterSection::default(),
            receiver: ReceiverSection::default(),
            atmosphere: AtmosphereSection::default(),
            background: BackgroundSection::default(),
            turbulence: TurbulenceSection::default(),
            protocol: ProtocolSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitSection {
    pub altitude_m: f64,
    pub earth_radius_m: f64,
    pub gravitational_parameter_m3_s2: f64,
    pub min_elevation_deg: f64,
    pub max_pass_elevation_deg: f64,
    pub time_step_s: f64,
}

impl Default for OrbitSection {
    fn default() -> Self {
        let o = OrbitConfig::default();
        OrbitSection {
            altitude_m: o.altitude_m,
            earth_radius_m: o.earth_radius_m,
            gravitational_parameter_m3_s2: o.gravitational_parameter,
            min_elevation_deg: o.min_elevation_rad.to_degrees(),
            max_pass_elevation_deg: o.max_pass_elevation_rad.to_degrees(),
            time_step_s: o.time_step_s,
        }
    }
}

impl OrbitSection {
    pub fn to_core(&self) -> OrbitConfig {
        OrbitConfig {
            altitude_m: self.altitude_m,
            earth_radius_m: self.earth_radius_m,
            gravitational_parameter: self.gravitational_parameter_m3_s2,
            min_elevation_rad: self.min_elevation_deg.to_radians(),
            max_pass_elevation_rad: self.max_pass_elevation_deg.to_radians(),
            time_step_s: self.time_step_s,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransmitterSection {
    pub aperture_diameter_m: f64,
    pub wavelength_m: f64,
    pub pulse_rate_hz: f64,
    pub mean_photon_number: f64,
    pub optical_efficiency: f64,
    /// "fixed_half_angle" or "diffraction_limited".
    pub divergence_mode: String,
    pub divergence_half_angle_rad: f64,
}

impl Default for TransmitterSection {
    fn default() -> Self {
        let t = TransmitterConfig::default();
        TransmitterSection {
            aperture_diameter_m: t.aperture_diameter_m,
            wavelength_m: t.wavelength_m,
            pulse_rate_hz: t.pulse_rate_hz,
            mean_photon_number: t.mean_photon_number,
            optical_efficiency: t.optical_efficiency,
            divergence_mode: "fixed_half_angle".to_string(),
            divergence_half_angle_rad: 48.5e-6,
        }
    }
}

impl TransmitterSection {
    pub fn to_core(&self) -> anyhow::Result<TransmitterConfig> {
        let divergence = match self.divergence_mode.as_str() {
            "fixed_half_angle" => {
                DivergenceMode::FixedHalfAngle { half_angle_rad: self.divergence_half_angle_rad }
            }
            "diffraction_limited" => DivergenceMode::DiffractionLimited,
            other => bail!(
                "invalid config: transmitter.divergence_mode: unknown mode {other:?} \
                 (expected fixed_half_angle or diffraction_limited)"
            ),
        };
        Ok(TransmitterConfig {
            aperture_diameter_m: self.aperture_diameter_m,
            wavelength_m: self.wavelength_m,
            pulse_rate_hz: self.pulse_rate_hz,
            mean_photon_number: self.mean_photon_number,
            optical_efficiency: self.optical_efficiency,
            divergence,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverSection {
    pub aperture_diameter_m: f64,
    pub field_of_view_rad: f64,
    pub quantum_efficiency: f64,
    pub dark_count_probability: f64,
    pub basis_misalignment: f64,
}

impl Default for ReceiverSection {
    fn default() -> Self {
        let r = ReceiverConfig::default();
        ReceiverSection {
            aperture_diameter_m: r.aperture_diameter_m,
            field_of_view_rad: r.field_of_view_rad,
            quantum_efficiency: r.quantum_efficiency,
            dark_count_probability: r.dark_count_probability,
            basis_misalignment: r.basis_misalignment,
        }
    }
}

impl ReceiverSection {
    pub fn to_core(&self) -> ReceiverConfig {
        ReceiverConfig {
            aperture_diameter_m: self.aperture_diameter_m,
            field_of_view_rad: self.field_of_view_rad,
            quantum_efficiency: self.quantum_efficiency,
            dark_count_probability: self.dark_count_probability,
            basis_misalignment: self.basis_misalignment,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtmosphereSection {
    pub tau_zenith: f64,
    pub dop_zenith: f64,
    pub dop_horizon: f64,
    /// "linear-in-secant" or "table".
    pub dop_interpolation: String,
    /// (elevation_deg, dop) pairs when `dop_interpolation = "table"`.
    pub dop_table: Vec<(f64, f64)>,
}

impl Default for AtmosphereSection {
    fn default() -> Self {
        let a = AtmosphereModel::default();
        AtmosphereSection {
            tau_zenith: a.tau_zenith,
            dop_zenith: a.dop_zenith,
            dop_horizon: a.dop_horizon,
            dop_interpolation: "linear-in-secant".to_string(),
            dop_table: Vec::new(),
        }
    }
}

impl AtmosphereSection {
    pub fn to_core(&self) -> anyhow::Result<AtmosphereModel> {
        let dop_interpolation = match self.dop_interpolation.as_str() {
            "linear-in-secant" => DopInterpolation::LinearInSecant,
            "table" => DopInterpolation::Table {
                points: self
                    .dop_table
                    .iter()
                    .map(|(deg, d)| (deg.to_radians(), *d))
                    .collect(),
            },
            other => bail!(
                "invalid config: atmosphere.dop_interpolation: unknown rule {other:?} \
                 (expected linear-in-secant or table)"
            ),
        };
        Ok(AtmosphereModel {
            tau_zenith: self.tau_zenith,
            dop_zenith: self.dop_zenith,
            dop_horizon: self.dop_horizon,
            dop_interpolation,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackgroundSection {
    pub natural_brightness_cd_m2: f64,
    pub artificial_brightness_cd_m2: f64,
    pub gating_factor: f64,
    /// "secant" or "kasten-young".
    pub airmass_model: String,
    pub zenith_counts_cps: f64,
    pub counts_at_80deg_cps: f64,
    pub zenith_signal_fraction: f64,
    pub signal_fraction_at_80deg: f64,
}

impl Default for BackgroundSection {
    fn default() -> Self {
        let c = BackgroundCalibration::default();
        BackgroundSection {
            natural_brightness_cd_m2: 1.71e-4,
            artificial_brightness_cd_m2: 5.1e-5,
            gating_factor: 0.1,
            airmass_model: "secant".to_string(),
            zenith_counts_cps: c.zenith_counts_cps,
            counts_at_80deg_cps: c.counts_at_80deg_cps,
            zenith_signal_fraction: c.zenith_signal_fraction,
            signal_fraction_at_80deg: c.signal_fraction_at_80deg,
        }
    }
}

impl BackgroundSection {
    pub fn to_core(
        &self,
        rx: &ReceiverConfig,
        wavelength_m: f64,
    ) -> anyhow::Result<BackgroundModel> {
        let airmass = match self.airmass_model.as_str() {
            "secant" => AirmassModel::Secant,
            "kasten-young" => AirmassModel::KastenYoung,
            other => bail!(
                "invalid config: background.airmass_model: unknown model {other:?} \
                 (expected secant or kasten-young)"
            ),
        };
        let cal = BackgroundCalibration {
            zenith_counts_cps: self.zenith_counts_cps,
            counts_at_80deg_cps: self.counts_at_80deg_cps,
            zenith_signal_fraction: self.zenith_signal_fraction,
            signal_fraction_at_80deg: self.signal_fraction_at_80deg,
        };
        Ok(BackgroundModel::calibrated(
            self.natural_brightness_cd_m2,
            self.artificial_brightness_cd_m2,
            self.gating_factor,
            airmass,
            photon_energy(wavelength_m),
            rx,
            &cal,
        )?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TurbulenceSection {
    pub hv_ground_cn2: f64,
    pub hv_wind_speed_m_s: f64,
    pub ground_height_m: f64,
    pub atmosphere_top_m: f64,
    pub pointing_error_rad: f64,
}

impl Default for TurbulenceSection {
    fn default() -> Self {
        let t = TurbulenceProfile::default();
        TurbulenceSection {
            hv_ground_cn2: t.hv_ground_cn2,
            hv_wind_speed_m_s: t.hv_wind_speed,
            ground_height_m: t.ground_height_m,
            atmosphere_top_m: t.atmosphere_top_m,
            pointing_error_rad: t.pointing_error_rad,
        }
    }
}

impl TurbulenceSection {
    pub fn to_core(&self, wavelength_m: f64) -> TurbulenceProfile {
        TurbulenceProfile {
            hv_ground_cn2: self.hv_ground_cn2,
            hv_wind_speed: self.hv_wind_speed_m_s,
            ground_height_m: self.ground_height_m,
            atmosphere_top_m: self.atmosphere_top_m,
            wavelength_m,
            pointing_error_rad: self.pointing_error_rad,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    // budget rows and tuning
    pub basis_rotation_shift_db: f64,
    pub wavefront_aberration_db: f64,
    pub beam_wandering_db: f64,
    pub scintillation_percentile: f64,
    pub pointing_beam_width_m: f64,
    pub turbulent_scale_zenith: f64,
    pub depolarization_exponent: f64,
    pub snr_exponent: f64,
    // key-rate Monte Carlo
    pub sigma_noise: f64,
    pub n_trials: u64,
    /// "literal" or "normalized".
    pub kernel: String,
    pub qber_threshold: f64,
    // entangled protocol
    pub n_pairs_per_step: u64,
    pub chsh_angles_deg: [f64; 4],
    pub e91_s_best: f64,
    pub e91_s_worst: f64,
    pub e91_worst_zenith_deg: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let t = BudgetTuning::default();
        let b = Bb84Config::default();
        ProtocolSection {
            basis_rotation_shift_db: t.basis_rotation_shift_db,
            wavefront_aberration_db: t.wavefront_aberration_db,
            beam_wandering_db: t.beam_wandering_db,
            scintillation_percentile: t.scintillation_percentile,
            pointing_beam_width_m: t.pointing_beam_width_m,
            turbulent_scale_zenith: t.turbulent_scale_zenith,
            depolarization_exponent: t.depolarization_exponent,
            snr_exponent: t.snr_exponent,
            sigma_noise: b.sigma_noise,
            n_trials: b.n_trials,
            kernel: "literal".to_string(),
            qber_threshold: b.qber_threshold,
            n_pairs_per_step: 10_000,
            chsh_angles_deg: [0.0, 45.0, 22.5, 67.5],
            e91_s_best: 2.63,
            e91_s_worst: 1.91,
            e91_worst_zenith_deg: 80.0,
        }
    }
}

impl ProtocolSection {
    pub fn tuning(&self) -> BudgetTuning {
        BudgetTuning {
            basis_rotation_shift_db: self.basis_rotation_shift_db,
            wavefront_aberration_db: self.wavefront_aberration_db,
            beam_wandering_db: self.beam_wandering_db,
            scintillation_percentile: self.scintillation_percentile,
            pointing_beam_width_m: self.pointing_beam_width_m,
            turbulent_scale_zenith: self.turbulent_scale_zenith,
            depolarization_exponent: self.depolarization_exponent,
            snr_exponent: self.snr_exponent,
        }
    }

    pub fn bb84(&self) -> anyhow::Result<Bb84Config> {
        let kernel = match self.kernel.as_str() {
            "literal" => KernelMode::Literal,
            "normalized" => KernelMode::Normalized,
            other => bail!(
                "invalid config: protocol.kernel: unknown mode {other:?} \
                 (expected literal or normalized)"
            ),
        };
        Ok(Bb84Config {
            sigma_noise: self.sigma_noise,
            n_trials: self.n_trials,
            kernel,
            qber_threshold: self.qber_threshold,
        })
    }

    pub fn chsh_angles(&self) -> ChshAngles {
        let [a1, a3, b1, b3] = self.chsh_angles_deg;
        ChshAngles {
            a1: a1.to_radians(),
            a3: a3.to_radians(),
            b1: b1.to_radians(),
            b3: b3.to_radians(),
        }
    }

    pub fn e91_noise(&self, atmosphere: &AtmosphereModel) -> anyhow::Result<E91NoiseModel> {
        Ok(E91NoiseModel::calibrated(
            atmosphere,
            self.e91_s_best,
            self.e91_s_worst,
            self.e91_worst_zenith_deg.to_radians(),
        )?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub altitudes_m: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { altitudes_m: vec![400e3, 500e3, 600e3, 750e3] }
    }
}

impl ScenarioConfig {
    /// Build the wired core models from the resolved configuration.
    pub fn link_models(&self) -> anyhow::Result<LinkModels> {
        let orbit = self.orbit.to_core();
        let tx = self.transmitter.to_core()?;
        let rx = self.receiver.to_core();
        let atm = self.atmosphere.to_core()?;
        let bg = self.background.to_core(&rx, tx.wavelength_m)?;
        let turb = self.turbulence.to_core(tx.wavelength_m);
        Ok(LinkModels::new(orbit, tx, rx, atm, bg, turb, self.protocol.tuning())?)
    }
}

/// Load a configuration file; missing keys fall back to defaults, unknown
/// keys are rejected with the offending name.
pub fn load_config(path: &Path) -> anyhow::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg: ScenarioConfig = toml::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    Ok(cfg)
}
