//! `levcav derive`: every static and steady-state quantity the config
//! implies, as one JSON report. Frequencies are reported as nu = omega/2pi
//! in Hz.

use std::f64::consts::PI;

use levcav::dynamics::{max_linewidth_broadening, sideband_rates};
use levcav::gas;
use levcav::params;
use serde::Serialize;

use crate::error::CliResult;
use crate::manifest::OutputWriter;
use crate::CommonArgs;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Serialize)]
struct DeriveReport {
    config_sha256: String,
    toolkit_version: &'static str,
    particle: ParticleReport,
    cavity: CavityReport,
    trap: TrapReport,
    mu_zero: MuZeroReport,
    gas: GasReport,
    backaction: BackactionReport,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct ParticleReport {
    mass_kg: f64,
    polarizability_f_m2: f64,
    radius_nm: f64,
}

#[derive(Serialize)]
struct CavityReport {
    fsr_hz: f64,
    kappa_hz: f64,
    wavenumber_rad_per_m: f64,
    rayleigh_length_mm: f64,
    mode_volume_m3: f64,
    waist_center_um: f64,
    waist_at_x0_um: f64,
}

#[derive(Serialize)]
struct TrapReport {
    x0_mm: f64,
    x0_prime_mm: f64,
    u0_hz: f64,
    phi_rad: f64,
    mu: f64,
    xbar_nm: f64,
    trap_photons: f64,
    control_photons: f64,
    omega0_bare_hz: f64,
    omega0_mu_hz: f64,
    ground_state_extension_m: f64,
    g0_c_hz: f64,
    g0_t_hz: f64,
    coupling_hz: f64,
}

/// Reference values in the weak-control-beam limit, where the single-photon
/// coupling is usually quoted.
#[derive(Serialize)]
struct MuZeroReport {
    xbar_nm: f64,
    g0_hz: f64,
}

#[derive(Serialize)]
struct GasReport {
    pressure_mbar: f64,
    knudsen: f64,
    gamma0_gas_hz: f64,
    gamma_m_hz: f64,
}

#[derive(Serialize)]
struct BackactionReport {
    detuning_hz: f64,
    gamma_eff_hz: f64,
    omega_eff_hz: f64,
    a_plus_hz: f64,
    a_minus_hz: f64,
    net_sideband_hz: f64,
    max_broadening_hz: f64,
    max_broadening_detuning_hz: f64,
    teff_k: f64,
}

pub fn run(common: &CommonArgs) -> CliResult<()> {
    let (resolved, hash) = super::load_config(&common.config)?;
    let cfg = &resolved.config;
    let dc = params::derive_cavity(&resolved.cavity);
    let mass = params::particle_mass(&resolved.particle);
    let u0 = params::u0_at(&resolved.particle, &resolved.cavity, resolved.x0);
    let waist_x0 = params::waist_at(&dc, resolved.cavity.waist_center, resolved.x0)
        .map_err(crate::error::CliError::numerical)?;

    let mut warnings = Vec::new();
    if !resolved.particle.in_rayleigh_regime(dc.wavenumber) {
        warnings.push(format!(
            "k r = {:.2} exceeds 1: the Rayleigh-scattering model is stretched",
            dc.wavenumber * resolved.particle.radius
        ));
    }

    let detuning = resolved.detuning();
    let state = resolved.trap_state(cfg.drive.mu, detuning)?;
    let mu_zero_state = resolved.trap_state(1e-12, detuning)?;
    let model = resolved.backaction_model(cfg.drive.mu, detuning)?;
    let (gamma_eff, omega_eff) =
        model.backaction(model.omega0).map_err(crate::error::CliError::numerical)?;
    if model.is_parametrically_unstable(model.omega0) {
        warnings.push("gamma_eff < 0 at the configured detuning: parametric instability".into());
    }
    let (a_plus, a_minus, net) =
        sideband_rates(model.coupling, model.kappa, model.detuning, model.omega0);
    let (d_star, broadening) = max_linewidth_broadening(&model, 0.0, 3.0 * model.omega0);
    let teff = model.effective_temperature().map_err(crate::error::CliError::numerical)?;

    let report = DeriveReport {
        config_sha256: hash.clone(),
        toolkit_version: env!("CARGO_PKG_VERSION"),
        particle: ParticleReport {
            mass_kg: mass,
            polarizability_f_m2: params::polarizability(&resolved.particle),
            radius_nm: resolved.particle.radius * 1e9,
        },
        cavity: CavityReport {
            fsr_hz: dc.fsr,
            kappa_hz: dc.kappa / TWO_PI,
            wavenumber_rad_per_m: dc.wavenumber,
            rayleigh_length_mm: dc.rayleigh_length * 1e3,
            mode_volume_m3: params::mode_volume(&resolved.cavity),
            waist_center_um: resolved.cavity.waist_center * 1e6,
            waist_at_x0_um: waist_x0 * 1e6,
        },
        trap: TrapReport {
            x0_mm: resolved.x0 * 1e3,
            x0_prime_mm: resolved.x0_prime * 1e3,
            u0_hz: u0 / TWO_PI,
            phi_rad: state.phi,
            mu: cfg.drive.mu,
            xbar_nm: state.xbar * 1e9,
            trap_photons: state.trap_photons,
            control_photons: state.control_photons,
            omega0_bare_hz: state.omega0_bare / TWO_PI,
            omega0_mu_hz: state.omega0_mu / TWO_PI,
            ground_state_extension_m: state.xgs,
            g0_c_hz: state.g0_c / TWO_PI,
            g0_t_hz: state.g0_t / TWO_PI,
            coupling_hz: state.coupling() / TWO_PI,
        },
        mu_zero: MuZeroReport {
            xbar_nm: mu_zero_state.xbar * 1e9,
            g0_hz: mu_zero_state.g0_c.abs() / TWO_PI,
        },
        gas: GasReport {
            pressure_mbar: cfg.gas.pressure_mbar,
            knudsen: gas::knudsen_number(&resolved.gas, &resolved.particle),
            gamma0_gas_hz: gas::gas_damping(&resolved.gas, &resolved.particle) / TWO_PI,
            gamma_m_hz: resolved.gamma_m / TWO_PI,
        },
        backaction: BackactionReport {
            detuning_hz: detuning / TWO_PI,
            gamma_eff_hz: gamma_eff / TWO_PI,
            omega_eff_hz: omega_eff / TWO_PI,
            a_plus_hz: a_plus / TWO_PI,
            a_minus_hz: a_minus / TWO_PI,
            net_sideband_hz: net / TWO_PI,
            max_broadening_hz: broadening / TWO_PI,
            max_broadening_detuning_hz: d_star / TWO_PI,
            teff_k: teff,
        },
        warnings,
    };

    let json = serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
    let mut writer = OutputWriter::new(&common.out, "derive", hash, Vec::new(), common.overwrite)?;
    let path = writer.write("derive.json", &json)?;
    writer.finish()?;
    println!(
        "derive: U0/2pi = {:.1} kHz, kappa/2pi = {:.1} kHz, g0 sqrt(n_c)/2pi = {:.2} kHz -> {}",
        report.trap.u0_hz / 1e3,
        report.cavity.kappa_hz / 1e3,
        report.trap.coupling_hz / 1e3,
        path.display()
    );
    Ok(())
}
