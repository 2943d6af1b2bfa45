//! Camera-pixel-to-position calibration.
//!
//! The axial trap frequency falls off with distance from the cavity waist as
//! Omega_0(x0) = Omega_c / sqrt(1 + (x0/x_R)^2), so frequency measurements at
//! several camera coordinates calibrate the pixel to a physical position
//! along the cavity axis. The Rayleigh length is fixed from the beam optics,
//! not fitted.

use crate::fitting::{fit_least_squares, FitOptions};
use crate::{Error, Result};

/// One calibration measurement: camera coordinate and trap frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibPoint {
    /// Camera coordinate (pixels).
    pub zeta: f64,
    /// Measured trap frequency (rad/s).
    pub omega0: f64,
    /// Frequency uncertainty (rad/s); 0 means unweighted.
    pub sigma_omega: f64,
}

impl CalibPoint {
    pub fn new(zeta: f64, omega0: f64, sigma_omega: f64) -> Result<Self> {
        if !(omega0 > 0.0) {
            return Err(Error::invalid(format!("trap frequency must be > 0, got {omega0}")));
        }
        if !(sigma_omega >= 0.0) {
            return Err(Error::invalid("frequency uncertainty must be >= 0".to_string()));
        }
        Ok(Self { zeta, omega0, sigma_omega })
    }
}

/// Fitted camera calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraScale {
    /// Pixel coordinate of the cavity center.
    pub zeta_c: f64,
    /// Conversion factor (m per pixel). Its sign is a camera-orientation
    /// convention that frequencies alone cannot resolve.
    pub scale: f64,
    /// Trap frequency at the cavity center (rad/s).
    pub omega_c: f64,
    /// Rayleigh length used in the model (m).
    pub rayleigh_length: f64,
    /// Covariance over (zeta_c, scale, omega_c).
    pub covariance: [[f64; 3]; 3],
    /// Residual norm of the fit.
    pub residual_norm: f64,
}

fn model(zeta: f64, zeta_c: f64, scale: f64, omega_c: f64, x_r: f64) -> f64 {
    omega_c / (1.0 + ((zeta - zeta_c) * scale / x_r).powi(2)).sqrt()
}

/// Fit (zeta_c, scale, omega_c) to frequency-vs-pixel calibration points.
pub fn fit_camera_scale(points: &[CalibPoint], rayleigh_length: f64) -> Result<CameraScale> {
    if points.len() < 4 {
        return Err(Error::invalid(format!(
            "camera calibration needs at least 4 points, got {}",
            points.len()
        )));
    }
    let zeta_min = points.iter().map(|p| p.zeta).fold(f64::INFINITY, f64::min);
    let zeta_max = points.iter().map(|p| p.zeta).fold(f64::NEG_INFINITY, f64::max);
    if zeta_max - zeta_min <= 0.0 {
        return Err(Error::invalid("calibration points all share one pixel".to_string()));
    }
    if !(rayleigh_length > 0.0) {
        return Err(Error::invalid("Rayleigh length must be positive".to_string()));
    }

    let omega_max = points.iter().map(|p| p.omega0).fold(0.0f64, f64::max);
    let omega_min = points.iter().map(|p| p.omega0).fold(f64::INFINITY, f64::min);
    let zeta_peak =
        points.iter().max_by(|a, b| a.omega0.partial_cmp(&b.omega0).unwrap()).unwrap().zeta;
    let span = zeta_max - zeta_min;
    // Scale guess from the lowest-frequency point.
    let drop = (omega_max / omega_min).powi(2) - 1.0;
    let scale_guess = (drop.max(1e-4)).sqrt() * rayleigh_length / span;

    let weights: Vec<f64> = points
        .iter()
        .map(|p| if p.sigma_omega > 0.0 { omega_max / p.sigma_omega } else { 1.0 })
        .collect();
    // Dimensionless parameters: pixel offset in spans, scale in x_R/span,
    // frequency in omega_max.
    let residuals = |p: &[f64]| -> Vec<f64> {
        let zeta_c = zeta_peak + p[0] * span;
        let scale = p[1] * rayleigh_length / span;
        let omega_c = p[2] * omega_max;
        points
            .iter()
            .zip(&weights)
            .map(|(pt, w)| {
                w * (model(pt.zeta, zeta_c, scale, omega_c, rayleigh_length) - pt.omega0)
                    / omega_max
            })
            .collect()
    };
    let init = [0.0, scale_guess * span / rayleigh_length, 1.0];
    let fit = fit_least_squares(&init, &residuals, None, &FitOptions::default())?;
    if !fit.condition.is_finite() || fit.condition > 1e10 {
        return Err(Error::IllConditioned {
            condition: fit.condition,
            detail: "calibration geometry does not constrain the pixel scale; \
                     spread the points across the cavity center or further from it"
                .to_string(),
        });
    }

    let zeta_c = zeta_peak + fit.params[0] * span;
    let scale = fit.params[1] * rayleigh_length / span;
    let omega_c = fit.params[2] * omega_max;
    // The center frequency caps the model, so it must cover every observed
    // frequency up to the measurement scatter.
    let scatter = fit.residual_norm / (points.len() as f64).sqrt() * omega_max;
    if omega_c < omega_max - 3.0 * scatter.max(1e-9 * omega_max) {
        return Err(Error::invalid(format!(
            "fitted center frequency {omega_c:.3e} rad/s sits below observed maxima \
             {omega_max:.3e} rad/s beyond the scatter; calibration data are inconsistent"
        )));
    }
    let scales = [span, rayleigh_length / span, omega_max];
    let mut covariance = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            covariance[i][j] = fit.covariance[i][j] * scales[i] * scales[j];
        }
    }
    Ok(CameraScale {
        zeta_c,
        scale,
        omega_c,
        rayleigh_length,
        covariance,
        residual_norm: fit.residual_norm,
    })
}

/// A calibrated position lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionEstimate {
    /// Signed distance from the cavity center (m).
    pub x0: f64,
    /// Distance from the cavity mirror, x0' = x0 + L/2 (m).
    pub x0_prime: f64,
    /// One-sigma uncertainty on x0 propagated from the fit covariance (m).
    pub sigma_x0: f64,
}

/// Convert a camera coordinate to a position along the cavity axis.
pub fn position_from_pixel(
    s: &CameraScale,
    zeta: f64,
    cavity_length: f64,
) -> Result<PositionEstimate> {
    let offset = zeta - s.zeta_c;
    let x0 = offset * s.scale;
    if x0.abs() > cavity_length / 2.0 {
        return Err(Error::OutOfCavity { position_m: x0, bound_m: cavity_length / 2.0 });
    }
    // x0 = (zeta - zeta_c) * scale: linear error propagation in (zeta_c, scale).
    let var = s.scale.powi(2) * s.covariance[0][0] + offset.powi(2) * s.covariance[1][1]
        - 2.0 * s.scale * offset * s.covariance[0][1];
    Ok(PositionEstimate {
        x0,
        x0_prime: x0 + cavity_length / 2.0,
        sigma_x0: var.max(0.0).sqrt(),
    })
}
