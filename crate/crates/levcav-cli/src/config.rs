//! Run configuration: a single TOML file with units spelled out in the key
//! names. Unknown keys are rejected so typos cannot silently change a run.

use std::f64::consts::PI;
use std::path::Path;

use levcav::dynamics::BackactionModel;
use levcav::gas::GasSpec;
use levcav::params::{self, CavitySpec, ParticleSpec};
use levcav::trap::{self, DriveConfig, TrapState};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub particle: ParticleSection,
    pub cavity: CavitySection,
    pub gas: GasSection,
    pub drive: DriveSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSection {
    pub radius_nm: f64,
    pub density_kg_m3: f64,
    pub dielectric_const: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub length_mm: f64,
    pub finesse: f64,
    pub wavelength_nm: f64,
    pub waist_center_um: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSection {
    pub pressure_mbar: f64,
    #[serde(default = "default_viscosity")]
    pub viscosity_pa_s: f64,
    #[serde(default = "default_temperature")]
    pub temperature_k: f64,
    #[serde(default = "default_molecule_diameter")]
    pub molecule_diameter_nm: f64,
}

fn default_viscosity() -> f64 {
    levcav::gas::AIR_VISCOSITY
}
fn default_temperature() -> f64 {
    293.0
}
fn default_molecule_diameter() -> f64 {
    levcav::gas::AIR_MOLECULE_DIAMETER * 1e9
}

/// Trap strength may be pinned by the photon number, the intracavity power,
/// or the measured bare trap frequency; exactly one of the three.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub mu: f64,
    pub detuning_khz: f64,
    /// Particle position from the cavity center (mm, signed).
    pub x0_mm: f64,
    pub trap_photons: Option<f64>,
    pub trap_power_w: Option<f64>,
    pub bare_frequency_khz: Option<f64>,
    /// Override of the mechanical damping; defaults to the gas model, whose
    /// absolute scale is known to sit below the measured rates.
    pub gamma_m_hz: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub duration_s: f64,
    /// Integrator step (us); defaults to 1/(50 f_max).
    pub dt_us: Option<f64>,
    pub seeds: Vec<u64>,
    pub decimation: usize,
    pub bath_temperature_k: Option<f64>,
    pub detection_noise: f64,
    pub segment_length: usize,
    pub overlap: f64,
    pub window: WindowChoice,
    /// Time-series CSVs grow large on long sweeps; spectra alone often do.
    pub write_timeseries: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            duration_s: 0.2,
            dt_us: None,
            seeds: vec![1],
            decimation: 4,
            bath_temperature_k: None,
            detection_noise: 0.0,
            segment_length: 4096,
            overlap: 0.5,
            window: WindowChoice::Hann,
            write_timeseries: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum WindowChoice {
    Hann,
    Rect,
}

impl From<WindowChoice> for levcav::welch::Window {
    fn from(w: WindowChoice) -> Self {
        match w {
            WindowChoice::Hann => levcav::welch::Window::Hann,
            WindowChoice::Rect => levcav::welch::Window::Rectangular,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Explicit detuning list (kHz); wins over the range fields.
    pub detuning_khz: Vec<f64>,
    pub detuning_start_khz: Option<f64>,
    pub detuning_stop_khz: Option<f64>,
    pub detuning_step_khz: Option<f64>,
    /// Power ratios; defaults to the drive section's mu.
    pub mu_values: Vec<f64>,
    /// Theory-spectrum grid (kHz) and point count for sweep outputs.
    pub grid_khz: [f64; 2],
    pub grid_points: usize,
    /// Gas-curve pressure range (mbar) and point count.
    pub pressure_range_mbar: [f64; 2],
    pub pressure_points: usize,
    /// Damping targets for inverse pressure lookups (Hz, as gamma_0/2pi).
    pub lookup_gamma0_hz: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            detuning_khz: Vec::new(),
            detuning_start_khz: None,
            detuning_stop_khz: None,
            detuning_step_khz: None,
            mu_values: Vec::new(),
            grid_khz: [20.0, 420.0],
            grid_points: 2000,
            pressure_range_mbar: [1e-2, 1e3],
            pressure_points: 200,
            lookup_gamma0_hz: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Detuning window for the temperature average (kHz).
    pub window_khz: [f64; 2],
    /// Oscillator-fit band (kHz).
    pub fit_band_khz: [f64; 2],
    pub weighting: WeightingChoice,
    /// Temperature assigned to the near-resonant reference (K).
    pub reference_temperature_k: f64,
    /// Detuning of the reference run (kHz); must stay within kappa/100.
    pub reference_detuning_khz: f64,
    /// Run theory spectra through the cavity transfer and back during the
    /// sweep fit (an exact no-op on the values).
    pub transfer_roundtrip: bool,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            window_khz: [100.0, 150.0],
            fit_band_khz: [40.0, 420.0],
            weighting: WeightingChoice::Uniform,
            reference_temperature_k: 293.0,
            reference_detuning_khz: 1.0,
            transfer_roundtrip: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum WeightingChoice {
    Uniform,
    Variance,
}

impl From<WeightingChoice> for levcav::analysis::Weighting {
    fn from(w: WeightingChoice) -> Self {
        match w {
            WeightingChoice::Uniform => levcav::analysis::Weighting::Uniform,
            WeightingChoice::Variance => levcav::analysis::Weighting::RelativeValue,
        }
    }
}

/// Config resolved into core types plus everything derived from it once.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub particle: ParticleSpec,
    pub cavity: CavitySpec,
    pub gas: GasSpec,
    pub x0: f64,
    pub x0_prime: f64,
    pub trap_photons: f64,
    pub gamma_m: f64,
    pub bath_temp: f64,
}

impl Resolved {
    pub fn detuning(&self) -> f64 {
        2.0 * PI * self.config.drive.detuning_khz * 1e3
    }

    pub fn drive(&self, mu: f64, detuning: f64) -> CliResult<DriveConfig> {
        DriveConfig::new(mu, detuning, self.trap_photons)
            .map_err(|e| CliError::config(format!("drive: {e}")))
    }

    pub fn trap_state(&self, mu: f64, detuning: f64) -> CliResult<TrapState> {
        let drive = self.drive(mu, detuning)?;
        trap::trap_state(&self.particle, &self.cavity, self.x0_prime, &drive)
            .map_err(CliError::numerical)
    }

    /// Linearized model at the given operating point.
    pub fn backaction_model(&self, mu: f64, detuning: f64) -> CliResult<BackactionModel> {
        let state = self.trap_state(mu, detuning)?;
        BackactionModel::new(
            state.omega0_mu,
            self.gamma_m,
            state.kappa,
            detuning,
            state.coupling(),
            self.bath_temp,
            state.mass,
        )
        .map_err(CliError::numerical)
    }

    /// Detuning list in rad/s from the sweep section.
    pub fn sweep_detunings(&self) -> CliResult<Vec<f64>> {
        let s = &self.config.sweep;
        let khz: Vec<f64> = if !s.detuning_khz.is_empty() {
            s.detuning_khz.clone()
        } else if let (Some(start), Some(stop), Some(step)) =
            (s.detuning_start_khz, s.detuning_stop_khz, s.detuning_step_khz)
        {
            if step <= 0.0 || stop < start {
                return Err(CliError::config(
                    "sweep: detuning range needs step > 0 and stop >= start".to_string(),
                ));
            }
            let n = ((stop - start) / step).round() as usize;
            (0..=n).map(|i| start + step * i as f64).collect()
        } else {
            Vec::new()
        };
        Ok(khz.into_iter().map(|k| 2.0 * PI * k * 1e3).collect())
    }

    pub fn sweep_mus(&self) -> Vec<f64> {
        if self.config.sweep.mu_values.is_empty() {
            vec![self.config.drive.mu]
        } else {
            self.config.sweep.mu_values.clone()
        }
    }
}

const MBAR: f64 = 100.0; // Pa per mbar

pub fn load(path: &Path) -> CliResult<Resolved> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let config: RunConfig =
        toml::from_str(&text).map_err(|e| CliError::config(format!("config schema: {e}")))?;
    resolve(config)
}

pub fn resolve(config: RunConfig) -> CliResult<Resolved> {
    let p = &config.particle;
    let particle = ParticleSpec::new(p.radius_nm * 1e-9, p.density_kg_m3, p.dielectric_const)
        .map_err(|e| CliError::config(format!("particle: {e}")))?;
    let c = &config.cavity;
    let cavity = CavitySpec::new(
        c.length_mm * 1e-3,
        c.finesse,
        c.wavelength_nm * 1e-9,
        c.waist_center_um * 1e-6,
    )
    .map_err(|e| CliError::config(format!("cavity: {e}")))?;
    let g = &config.gas;
    let gas = GasSpec::new(
        g.viscosity_pa_s,
        g.temperature_k,
        g.molecule_diameter_nm * 1e-9,
        g.pressure_mbar * MBAR,
    )
    .map_err(|e| CliError::config(format!("gas: {e}")))?;

    let x0 = config.drive.x0_mm * 1e-3;
    let x0_prime = x0 + cavity.length / 2.0;
    if !(0.0..=cavity.length).contains(&x0_prime) {
        return Err(CliError::config(format!(
            "drive.x0_mm: position {} mm lies outside the cavity",
            config.drive.x0_mm
        )));
    }

    let dc = params::derive_cavity(&cavity);
    let u0 = params::u0_at(&particle, &cavity, x0);
    let pinned: Vec<&str> = [
        config.drive.trap_photons.map(|_| "trap_photons"),
        config.drive.trap_power_w.map(|_| "trap_power_w"),
        config.drive.bare_frequency_khz.map(|_| "bare_frequency_khz"),
    ]
    .into_iter()
    .flatten()
    .collect();
    if pinned.len() != 1 {
        return Err(CliError::config(format!(
            "drive: exactly one of trap_photons, trap_power_w, bare_frequency_khz must be set (got {})",
            if pinned.is_empty() { "none".to_string() } else { pinned.join(" and ") }
        )));
    }
    let trap_photons = if let Some(n) = config.drive.trap_photons {
        n
    } else if let Some(p_w) = config.drive.trap_power_w {
        trap::photons_from_power(p_w, cavity.length, cavity.wavelength)
    } else {
        let omega0 = 2.0 * PI * config.drive.bare_frequency_khz.unwrap() * 1e3;
        trap::photons_for_bare_frequency(&particle, &dc, u0, omega0)
    };
    if !(trap_photons > 0.0) {
        return Err(CliError::config("drive: trap photon number must be positive".to_string()));
    }

    let gamma_m = match config.drive.gamma_m_hz {
        Some(hz) => 2.0 * PI * hz,
        None => levcav::gas::gas_damping(&gas, &particle),
    };
    if !(gamma_m > 0.0) {
        return Err(CliError::config(
            "drive: mechanical damping is zero; set gas.pressure_mbar or drive.gamma_m_hz"
                .to_string(),
        ));
    }
    let bath_temp = config.sim.bath_temperature_k.unwrap_or(config.gas.temperature_k);

    Ok(Resolved { config, particle, cavity, gas, x0, x0_prime, trap_photons, gamma_m, bath_temp })
}
