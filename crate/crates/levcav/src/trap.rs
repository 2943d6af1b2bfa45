//! Two-mode standing-wave trap steady state.
//!
//! The trapping beam and the control beam occupy adjacent longitudinal modes,
//! so their standing waves are shifted by a position-dependent phase
//! phi = pi x0'/L. The particle settles where the combined potential
//!
//! ```text
//! V(x) = -hbar U0 [ n_t sin^2(k x + phi) + n_c sin^2(k x) ]
//! ```
//!
//! has a stable minimum. Displacements `x` here are measured from a node of
//! the control field; one period of the potential spans lambda/2. The
//! equilibrium offset xbar makes the control-field intensity gradient finite
//! at the particle, which is what produces linear dispersive coupling.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::constants::{C, HBAR};
use crate::params::{self, CavitySpec, DerivedCavity, ParticleSpec};
use crate::{Error, Result};

/// Drive settings for the two intracavity fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    /// Intracavity power ratio mu = P_c / P_t = |alpha_c|^2 / |alpha_t|^2.
    pub mu: f64,
    /// Control-beam detuning from the particle-shifted cavity resonance (rad/s).
    pub detuning: f64,
    /// Trapping-field photon number |alpha_t|^2.
    pub trap_photons: f64,
}

impl DriveConfig {
    pub fn new(mu: f64, detuning: f64, trap_photons: f64) -> Result<Self> {
        if !(mu >= 0.0) {
            return Err(Error::invalid(format!("power ratio mu must be >= 0, got {mu}")));
        }
        if !(trap_photons > 0.0) {
            return Err(Error::invalid(format!(
                "trap photon number must be > 0, got {trap_photons}"
            )));
        }
        Ok(Self { mu, detuning, trap_photons })
    }
}

/// Steady state of the two-mode trap at one particle position.
#[derive(Debug, Clone)]
pub struct TrapState {
    /// Particle position measured from the cavity mirror (m).
    pub x0_prime: f64,
    /// Relative standing-wave phase phi = pi x0'/L (rad).
    pub phi: f64,
    /// Equilibrium displacement from the control-field node (m).
    pub xbar: f64,
    /// Trap frequency without the control beam, Omega_0(0) (rad/s).
    pub omega0_bare: f64,
    /// Trap frequency at the configured power ratio, Omega_0(mu) (rad/s).
    pub omega0_mu: f64,
    /// Ground-state extension sqrt(hbar / (m Omega_0(mu))) (m).
    pub xgs: f64,
    /// Single-photon coupling to the control field (rad/s).
    pub g0_c: f64,
    /// Single-photon coupling to the trapping field (rad/s).
    pub g0_t: f64,
    /// Steady-state trapping-field amplitude (sqrt photons).
    pub alpha_t: Complex64,
    /// Steady-state control-field amplitude (sqrt photons).
    pub alpha_c: Complex64,
    /// Cavity frequency shift U0(x0) at the particle position (rad/s).
    pub u0: f64,
    /// Particle mass (kg).
    pub mass: f64,
    /// Optical wavenumber (rad/m).
    pub wavenumber: f64,
    /// Cavity FWHM linewidth (rad/s).
    pub kappa: f64,
    /// Control-beam detuning (rad/s).
    pub detuning: f64,
    /// Trapping-field photon number.
    pub trap_photons: f64,
    /// Control-field photon number.
    pub control_photons: f64,
}

impl TrapState {
    /// Effective optomechanical coupling g = |g0_c| sqrt(n_c) (rad/s).
    pub fn coupling(&self) -> f64 {
        self.g0_c.abs() * self.control_photons.sqrt()
    }

    /// Control-field coupling per meter, zeta_c = g0_c / X_gs (rad/s/m).
    pub fn zeta_c(&self) -> f64 {
        self.g0_c / self.xgs
    }
}

/// Standing-wave phase shift phi = (pi/L) x0' between the two modes.
pub fn phase_shift(x0_prime: f64, length: f64) -> Result<f64> {
    if !(0.0..=length).contains(&x0_prime) {
        return Err(Error::OutOfCavity { position_m: x0_prime, bound_m: length });
    }
    Ok(PI / length * x0_prime)
}

/// Stable root of tan(2 k xbar) = -sin(2 phi) / (mu + cos(2 phi)),
/// returned as psi = 2 k xbar in (-pi, pi].
///
/// Of the two roots per period, the one with positive potential curvature is
/// atan2(-sin 2phi, mu + cos 2phi) + pi when xbar is measured from a
/// control-field node.
fn stable_phase(mu: f64, phi: f64) -> f64 {
    let s = (2.0 * phi).sin();
    let c = (2.0 * phi).cos();
    let mut psi = (-s).atan2(mu + c) + PI;
    if psi > PI {
        psi -= 2.0 * PI;
    }
    psi
}

/// Equilibrium displacement xbar (m) of the particle from the control-field
/// node, on the branch where the total potential has a stable minimum.
pub fn equilibrium_displacement(mu: f64, phi: f64, wavenumber: f64) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::invalid(format!("mu must be >= 0, got {mu}")));
    }
    if !(wavenumber > 0.0) {
        return Err(Error::invalid("wavenumber must be > 0".to_string()));
    }
    Ok(stable_phase(mu, phi) / (2.0 * wavenumber))
}

/// Trap frequency with both beams, Omega_0(mu) (rad/s):
/// Omega_0^2(mu) = Omega_0^2(0) sqrt(1 + mu^2 + 2 mu cos 2 phi).
pub fn trap_frequency(mu: f64, phi: f64, omega0_bare: f64) -> Result<f64> {
    let radicand = 1.0 + mu * mu + 2.0 * mu * (2.0 * phi).cos();
    if radicand <= 1e-12 {
        return Err(Error::UnstableTrap(format!(
            "1 + mu^2 + 2 mu cos(2 phi) = {radicand} at mu = {mu}, phi = {phi}; \
             the two standing waves cancel and the trap closes"
        )));
    }
    Ok(omega0_bare * radicand.powf(0.25))
}

/// Trap frequency of the trapping beam alone:
/// Omega_0(0) = sqrt(2 hbar U0 k^2 n_t / m) (rad/s).
pub fn bare_frequency(p: &ParticleSpec, dc: &DerivedCavity, u0: f64, trap_photons: f64) -> f64 {
    let m = params::particle_mass(p);
    (2.0 * HBAR * u0 * dc.wavenumber.powi(2) * trap_photons / m).sqrt()
}

/// Trapping-field photon number that produces a given bare frequency
/// (inverse of [`bare_frequency`]).
pub fn photons_for_bare_frequency(
    p: &ParticleSpec,
    dc: &DerivedCavity,
    u0: f64,
    omega0_bare: f64,
) -> f64 {
    let m = params::particle_mass(p);
    m * omega0_bare.powi(2) / (2.0 * HBAR * u0 * dc.wavenumber.powi(2))
}

/// Intracavity photon number for a given intracavity power (W), using the
/// round-trip-time convention n = P (2L/c) / (hbar omega_laser).
pub fn photons_from_power(power: f64, length: f64, wavelength: f64) -> f64 {
    let omega_laser = 2.0 * PI * C / wavelength;
    power * (2.0 * length / C) / (HBAR * omega_laser)
}

/// Trap frequency from the trapping power and the local waist,
/// Omega_0 = sqrt(12 k^2/(c pi) (1/rho)(eps-1)/(eps+2)) sqrt(P_t / (pi W^2)).
///
/// The waist enters squared (an intensity), which makes the expression
/// dimensionally consistent.
pub fn trap_frequency_from_power(
    p: &ParticleSpec,
    wavelength: f64,
    power: f64,
    waist: f64,
) -> f64 {
    let k = 2.0 * PI / wavelength;
    let material = 12.0 * k * k / (C * PI) * (p.dielectric_const - 1.0)
        / ((p.dielectric_const + 2.0) * p.density);
    (material * power / (PI * waist * waist)).sqrt()
}

/// Single-photon coupling rates (g0_c, g0_t) (rad/s):
/// g0_c = U0 k X_gs sin(2 k xbar), g0_t = U0 k X_gs sin(2 (k xbar + phi)),
/// with xbar measured from the control-field node.
pub fn coupling_rates(u0: f64, wavenumber: f64, xgs: f64, xbar: f64, phi: f64) -> (f64, f64) {
    let psi = 2.0 * wavenumber * xbar;
    let scale = u0 * wavenumber * xgs;
    (scale * psi.sin(), scale * (psi + 2.0 * phi).sin())
}

/// Steady-state intracavity amplitudes for drive strengths (E_t, E_c).
///
/// The trapping beam is locked on resonance (its detuning compensates the
/// particle shift), so alpha_t = E_t / (kappa/2). The control beam sits at
/// detuning Delta from the shifted resonance: alpha_c = E_c / (kappa/2 + i Delta).
pub fn steady_state_amplitudes(
    drive_t: f64,
    drive_c: f64,
    kappa: f64,
    detuning: f64,
) -> (Complex64, Complex64) {
    let alpha_t = Complex64::new(drive_t / (kappa / 2.0), 0.0);
    let alpha_c = Complex64::new(drive_c, 0.0) / Complex64::new(kappa / 2.0, detuning);
    (alpha_t, alpha_c)
}

/// Power ratio mu produced by drive strengths (E_t, E_c) at a given detuning:
/// mu = |E_c/E_t|^2 (kappa/2)^2 / ((kappa/2)^2 + Delta^2).
pub fn mu_from_drives(drive_t: f64, drive_c: f64, kappa: f64, detuning: f64) -> f64 {
    let half = kappa / 2.0;
    (drive_c / drive_t).powi(2) * half * half / (half * half + detuning * detuning)
}

/// Drive-strength ratio |E_c/E_t|^2 required to reach a target mu.
pub fn drive_ratio_for_mu(mu: f64, kappa: f64, detuning: f64) -> f64 {
    let half = kappa / 2.0;
    mu * (half * half + detuning * detuning) / (half * half)
}

/// Solve the full trap steady state for a particle at `x0_prime` (distance
/// from the cavity mirror) under the given drive.
pub fn trap_state(
    p: &ParticleSpec,
    c: &CavitySpec,
    x0_prime: f64,
    drive: &DriveConfig,
) -> Result<TrapState> {
    let dc = params::derive_cavity(c);
    let phi = phase_shift(x0_prime, c.length)?;
    let x0 = x0_prime - c.length / 2.0;
    let u0 = params::u0_at(p, c, x0);
    let mass = params::particle_mass(p);

    let xbar = equilibrium_displacement(drive.mu, phi, dc.wavenumber)?;
    let omega0_bare = bare_frequency(p, &dc, u0, drive.trap_photons);
    let omega0_mu = trap_frequency(drive.mu, phi, omega0_bare)?;
    let xgs = (HBAR / (mass * omega0_mu)).sqrt();
    let (g0_c, g0_t) = coupling_rates(u0, dc.wavenumber, xgs, xbar, phi);

    let control_photons = drive.mu * drive.trap_photons;
    let alpha_t = Complex64::new(drive.trap_photons.sqrt(), 0.0);
    // Control amplitude carries the phase of 1/(kappa/2 + i Delta).
    let lorentz = Complex64::new(dc.kappa / 2.0, drive.detuning);
    let alpha_c = control_photons.sqrt() * lorentz.conj() / lorentz.norm();

    Ok(TrapState {
        x0_prime,
        phi,
        xbar,
        omega0_bare,
        omega0_mu,
        xgs,
        g0_c,
        g0_t,
        alpha_t,
        alpha_c,
        u0,
        mass,
        wavenumber: dc.wavenumber,
        kappa: dc.kappa,
        detuning: drive.detuning,
        trap_photons: drive.trap_photons,
        control_photons,
    })
}
