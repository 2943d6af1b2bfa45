//! `levcav calibrate-position`: fit the camera scale from frequency-vs-pixel
//! points and optionally look up a pixel's position along the cavity axis.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use levcav::params;
use levcav::position::{fit_camera_scale, position_from_pixel};
use serde::Serialize;

use crate::csvio;
use crate::error::{CliError, CliResult};
use crate::manifest::OutputWriter;
use crate::CommonArgs;

#[derive(Serialize)]
struct CameraScaleReport {
    config_sha256: String,
    points_file: String,
    n_points: usize,
    zeta_c_px: f64,
    scale_mm_per_px: f64,
    omega_c_hz: f64,
    rayleigh_length_mm: f64,
    residual_norm: f64,
    /// Covariance over (zeta_c in px, scale in m/px, omega_c in rad/s).
    covariance: [[f64; 3]; 3],
    position: Option<PositionReport>,
}

#[derive(Serialize)]
struct PositionReport {
    pixel: f64,
    x0_mm: f64,
    x0_prime_mm: f64,
    sigma_x0_mm: f64,
}

pub fn run(common: &CommonArgs, points_path: &Path, pixel: Option<f64>) -> CliResult<()> {
    let (resolved, hash) = super::load_config(&common.config)?;
    let points = csvio::calib_points_from_csv(points_path)?;
    let dc = params::derive_cavity(&resolved.cavity);

    let scale = fit_camera_scale(&points, dc.rayleigh_length).map_err(CliError::numerical)?;

    let position = match pixel {
        Some(zeta) => {
            let est = position_from_pixel(&scale, zeta, resolved.cavity.length)
                .map_err(CliError::numerical)?;
            Some(PositionReport {
                pixel: zeta,
                x0_mm: est.x0 * 1e3,
                x0_prime_mm: est.x0_prime * 1e3,
                sigma_x0_mm: est.sigma_x0 * 1e3,
            })
        }
        None => None,
    };

    let report = CameraScaleReport {
        config_sha256: hash.clone(),
        points_file: points_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        n_points: points.len(),
        zeta_c_px: scale.zeta_c,
        scale_mm_per_px: scale.scale * 1e3,
        omega_c_hz: scale.omega_c / (2.0 * PI),
        rayleigh_length_mm: scale.rayleigh_length * 1e3,
        residual_norm: scale.residual_norm,
        covariance: scale.covariance,
        position,
    };

    // Residual table for plotting.
    let mut residuals = String::new();
    let _ = writeln!(residuals, "# levcav camera calibration residuals");
    let _ = writeln!(residuals, "# config_sha256={hash}");
    let _ = writeln!(residuals, "zeta_px,omega0_hz,model_hz,residual_hz");
    for p in &points {
        let model = scale.omega_c
            / (1.0 + ((p.zeta - scale.zeta_c) * scale.scale / scale.rayleigh_length).powi(2))
                .sqrt();
        let _ = writeln!(
            residuals,
            "{},{},{},{}",
            csvio::format_value(p.zeta),
            csvio::format_value(p.omega0 / (2.0 * PI)),
            csvio::format_value(model / (2.0 * PI)),
            csvio::format_value((p.omega0 - model) / (2.0 * PI))
        );
    }

    let mut writer = OutputWriter::new(
        &common.out,
        "calibrate-position",
        hash,
        Vec::new(),
        common.overwrite,
    )?;
    let json = serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
    writer.write("camera_scale.json", &json)?;
    writer.write("camera_residuals.csv", &residuals)?;
    writer.finish()?;
    println!(
        "calibrate-position: zeta_c = {:.2} px, scale = {:.4} mm/px, Omega_c/2pi = {:.1} kHz -> {}",
        report.zeta_c_px,
        report.scale_mm_per_px.abs(),
        report.omega_c_hz / 1e3,
        common.out.display()
    );
    Ok(())
}
