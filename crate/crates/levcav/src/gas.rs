//! Kinetic-gas-theory damping of the particle's center-of-mass motion.
//!
//! gamma_0 = (6 pi eta r / m) * 0.619 / (0.619 + Kn) * (1 + c_k) with the
//! Knudsen number Kn = lambda_fp / r and the high-pressure correction
//! c_k = 0.31 Kn / (0.785 + 1.152 Kn + Kn^2). The mean free path follows the
//! hard-sphere model lambda_fp = k_B T / (sqrt(2) pi d^2 P).

use std::f64::consts::PI;

use crate::constants::K_B;
use crate::params::{particle_mass, ParticleSpec};
use crate::{Error, Result};

/// Air viscosity at 293 K (Pa s).
pub const AIR_VISCOSITY: f64 = 1.81e-5;
/// Effective hard-sphere diameter of an air molecule (m).
pub const AIR_MOLECULE_DIAMETER: f64 = 0.372e-9;

/// Background-gas properties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasSpec {
    /// Dynamic viscosity (Pa s).
    pub viscosity: f64,
    /// Gas temperature (K).
    pub temperature: f64,
    /// Hard-sphere molecule diameter (m).
    pub molecule_diameter: f64,
    /// Pressure (Pa).
    pub pressure: f64,
}

impl GasSpec {
    pub fn new(viscosity: f64, temperature: f64, molecule_diameter: f64, pressure: f64) -> Result<Self> {
        if !(viscosity > 0.0 && temperature > 0.0 && molecule_diameter > 0.0) {
            return Err(Error::invalid(
                "gas viscosity, temperature and molecule diameter must be positive".to_string(),
            ));
        }
        if !(pressure >= 0.0) {
            return Err(Error::invalid(format!("pressure must be >= 0, got {pressure}")));
        }
        Ok(Self { viscosity, temperature, molecule_diameter, pressure })
    }

    /// Air at room temperature and the given pressure.
    pub fn air(pressure: f64) -> Result<Self> {
        Self::new(AIR_VISCOSITY, 293.0, AIR_MOLECULE_DIAMETER, pressure)
    }

    /// Hard-sphere mean free path at this pressure (m).
    pub fn mean_free_path(&self) -> f64 {
        K_B * self.temperature
            / (2f64.sqrt() * PI * self.molecule_diameter.powi(2) * self.pressure)
    }

    pub fn with_pressure(&self, pressure: f64) -> Self {
        Self { pressure, ..*self }
    }
}

/// Knudsen number lambda_fp / r.
pub fn knudsen_number(g: &GasSpec, p: &ParticleSpec) -> f64 {
    g.mean_free_path() / p.radius
}

fn slip_correction(kn: f64) -> f64 {
    0.31 * kn / (0.785 + 1.152 * kn + kn * kn)
}

/// Stokes-drag ceiling 6 pi eta r / m (rad/s); gamma_0 approaches this from
/// below as the pressure grows.
pub fn stokes_damping(g: &GasSpec, p: &ParticleSpec) -> f64 {
    6.0 * PI * g.viscosity * p.radius / particle_mass(p)
}

/// Pressure-dependent damping rate gamma_0 (rad/s). Zero pressure returns 0
/// (free-molecular limit), not an error.
pub fn gas_damping(g: &GasSpec, p: &ParticleSpec) -> f64 {
    if g.pressure == 0.0 {
        return 0.0;
    }
    let kn = knudsen_number(g, p);
    stokes_damping(g, p) * 0.619 / (0.619 + kn) * (1.0 + slip_correction(kn))
}

/// Pressure (Pa) at which the damping equals `gamma_target`, inverting
/// [`gas_damping`] by bisection on the strictly monotone forward map.
pub fn pressure_from_damping(g: &GasSpec, p: &ParticleSpec, gamma_target: f64) -> Result<f64> {
    if !(gamma_target >= 0.0) {
        return Err(Error::invalid(format!("damping target must be >= 0, got {gamma_target}")));
    }
    if gamma_target == 0.0 {
        return Ok(0.0);
    }
    let ceiling = stokes_damping(g, p);
    if gamma_target >= ceiling {
        return Err(Error::NoSolution(format!(
            "damping target {gamma_target} rad/s is at or above the continuum ceiling {ceiling} rad/s"
        )));
    }
    // Bracket the target between a deep free-molecular pressure and above.
    let mut lo = 1e-12;
    while gas_damping(&g.with_pressure(lo), p) > gamma_target {
        lo *= 1e-3;
        if lo < 1e-300 {
            return Ok(0.0);
        }
    }
    let mut hi = lo.max(1.0);
    while gas_damping(&g.with_pressure(hi), p) < gamma_target {
        hi *= 10.0;
        if hi > 1e15 {
            return Err(Error::NoSolution(format!(
                "could not bracket pressure for damping target {gamma_target} rad/s"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gas_damping(&g.with_pressure(mid), p) < gamma_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fit the particle radius to (pressure, gamma_0) data at fixed gas
/// properties and material density. Used for pressure-sweep damping fits.
pub fn fit_radius(
    points: &[(f64, f64)],
    gas: &GasSpec,
    density: f64,
    dielectric_const: f64,
    radius_guess: f64,
) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("radius fit needs at least two (P, gamma) points".to_string()));
    }
    let residuals = |params: &[f64]| -> Vec<f64> {
        let r = params[0].abs();
        match ParticleSpec::new(r, density, dielectric_const) {
            Ok(p) => points
                .iter()
                .map(|&(pressure, gamma)| {
                    gas_damping(&gas.with_pressure(pressure), &p) / gamma - 1.0
                })
                .collect(),
            Err(_) => vec![f64::MAX; points.len()],
        }
    };
    let fit = crate::fitting::fit_least_squares(
        &[radius_guess],
        &residuals,
        None,
        &crate::fitting::FitOptions::default(),
    )?;
    Ok(fit.params[0].abs())
}
