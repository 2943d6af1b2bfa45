//! Particle and cavity specifications and the static quantities derived from
//! them: mass, polarizability, free spectral range, linewidth, wavenumber,
//! Rayleigh length, local beam waist, and the per-particle cavity frequency
//! shift U0(x0).

use std::f64::consts::PI;

use crate::constants::{C, EPS0};
use crate::{Error, Result};

/// Dielectric nanosphere, assumed small against the optical wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleSpec {
    /// Radius (m).
    pub radius: f64,
    /// Material density (kg/m^3).
    pub density: f64,
    /// Relative dielectric constant epsilon (dimensionless, > 1).
    pub dielectric_const: f64,
}

impl ParticleSpec {
    pub fn new(radius: f64, density: f64, dielectric_const: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("particle radius must be > 0, got {radius}")));
        }
        if !(density > 0.0) {
            return Err(Error::invalid(format!("particle density must be > 0, got {density}")));
        }
        if !(dielectric_const > 1.0) {
            return Err(Error::invalid(format!(
                "dielectric constant must exceed 1 for a trappable particle, got {dielectric_const}"
            )));
        }
        Ok(Self { radius, density, dielectric_const })
    }

    /// Rayleigh-regime sanity check: k * r should stay below 1.
    /// Callers are expected to warn (not fail) when this returns false.
    pub fn in_rayleigh_regime(&self, wavenumber: f64) -> bool {
        wavenumber * self.radius <= 1.0
    }
}

/// Fabry-Perot cavity geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySpec {
    /// Mirror separation (m).
    pub length: f64,
    /// Finesse (dimensionless).
    pub finesse: f64,
    /// Laser wavelength (m).
    pub wavelength: f64,
    /// Beam waist at the cavity center, W0 (m).
    pub waist_center: f64,
}

impl CavitySpec {
    pub fn new(length: f64, finesse: f64, wavelength: f64, waist_center: f64) -> Result<Self> {
        if !(length > 0.0 && wavelength > 0.0 && waist_center > 0.0) {
            return Err(Error::invalid(
                "cavity length, wavelength and waist must all be > 0".to_string(),
            ));
        }
        if !(finesse >= 1.0) {
            return Err(Error::invalid(format!("finesse must be >= 1, got {finesse}")));
        }
        if waist_center >= length {
            return Err(Error::invalid(format!(
                "waist {waist_center} m must be smaller than the cavity length {length} m"
            )));
        }
        Ok(Self { length, finesse, wavelength, waist_center })
    }
}

/// Static quantities derived from a [`CavitySpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCavity {
    /// Free spectral range c/2L (Hz).
    pub fsr: f64,
    /// FWHM linewidth kappa = 2 pi FSR / F (rad/s).
    pub kappa: f64,
    /// Wavenumber k = 2 pi / lambda (rad/m).
    pub wavenumber: f64,
    /// Rayleigh length x_R = pi W0^2 / lambda (m).
    pub rayleigh_length: f64,
}

impl DerivedCavity {
    /// Cavity length recovered from the FSR.
    pub fn length(&self) -> f64 {
        C / (2.0 * self.fsr)
    }
}

/// Nanosphere mass m = (4/3) pi r^3 rho (kg).
pub fn particle_mass(p: &ParticleSpec) -> f64 {
    4.0 / 3.0 * PI * p.radius.powi(3) * p.density
}

/// Polarizability xi = 4 pi r^3 eps0 (eps - 1)/(eps + 2) (F m^2).
pub fn polarizability(p: &ParticleSpec) -> f64 {
    let eps = p.dielectric_const;
    4.0 * PI * p.radius.powi(3) * EPS0 * (eps - 1.0) / (eps + 2.0)
}

/// FSR, linewidth, wavenumber and Rayleigh length for a cavity.
pub fn derive_cavity(c: &CavitySpec) -> DerivedCavity {
    let fsr = C / (2.0 * c.length);
    DerivedCavity {
        fsr,
        kappa: 2.0 * PI * fsr / c.finesse,
        wavenumber: 2.0 * PI / c.wavelength,
        rayleigh_length: PI * c.waist_center.powi(2) / c.wavelength,
    }
}

/// Gaussian-beam waist W(x0) = W0 sqrt(1 + x0^2/x_R^2) at distance `x0` from
/// the cavity center. Errors when the position lies outside the mirrors.
pub fn waist_at(dc: &DerivedCavity, waist_center: f64, x0: f64) -> Result<f64> {
    let half_length = dc.length() / 2.0;
    if x0.abs() > half_length {
        return Err(Error::OutOfCavity { position_m: x0, bound_m: half_length });
    }
    Ok(waist_center * (1.0 + (x0 / dc.rayleigh_length).powi(2)).sqrt())
}

/// Mode volume of the standing-wave Gaussian mode, V_c = (pi/4) W0^2 L.
pub fn mode_volume(c: &CavitySpec) -> f64 {
    PI / 4.0 * c.waist_center.powi(2) * c.length
}

/// Cavity frequency shift per particle at an antinode,
/// U0(x0) = omega_cav xi / (2 eps0 V_c) * (1 + x0^2/x_R^2)^-1 (rad/s).
///
/// The inverse position factor follows the local standing-wave intensity,
/// which drops as the mode expands away from the waist.
pub fn u0_at(p: &ParticleSpec, c: &CavitySpec, x0: f64) -> f64 {
    let dc = derive_cavity(c);
    let omega_cav = 2.0 * PI * C / c.wavelength;
    let envelope = 1.0 / (1.0 + (x0 / dc.rayleigh_length).powi(2));
    omega_cav * polarizability(p) / (2.0 * EPS0 * mode_volume(c)) * envelope
}
