//! `levcav analyze`: the measurement pipeline over a directory of NPS files.
//! Per power ratio: background subtraction, cavity deconvolution, oscillator
//! fits calibrated against the near-resonant reference, temperature by fit
//! and by integration, the optical-spring sweep fit, and windowed
//! temperature averages.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use levcav::analysis::{
    self, Calibration, MeasuredSpectrum, OscFit, OscFitOptions, SweepContext,
};
use serde::Serialize;

use crate::csvio;
use crate::error::{CliError, CliResult};
use crate::manifest::OutputWriter;
use crate::CommonArgs;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Serialize)]
struct AnalysisReport {
    config_sha256: String,
    toolkit_version: &'static str,
    background_subtracted: bool,
    groups: Vec<MuGroup>,
}

#[derive(Serialize)]
struct MuGroup {
    mu: f64,
    reference_label: String,
    calibration: CalibrationReport,
    spectra: Vec<SpectrumFit>,
    sweep_fit: Option<SweepFitReport>,
    sweep_fit_note: Option<String>,
    window_lo_hz: f64,
    window_hi_hz: f64,
    teff_window_mean_k: Option<f64>,
    teff_window_std_k: Option<f64>,
}

#[derive(Serialize)]
struct CalibrationReport {
    per_kelvin_fit: f64,
    area_constant: f64,
    t_ref_k: f64,
}

#[derive(Serialize)]
struct SpectrumFit {
    label: String,
    delta_hz: f64,
    omega_eff_hz: f64,
    gamma_eff_hz: f64,
    teff_star_k: f64,
    teff_int_k: f64,
    converged: bool,
    iterations: usize,
    residual_norm: f64,
    clipped_bins: usize,
    truncation_warning: Option<String>,
    covariance: [[f64; 4]; 4],
}

#[derive(Serialize)]
struct SweepFitReport {
    g0nc_hz: f64,
    omega0_hz: f64,
    delta_offset_hz: f64,
    residual_norm: f64,
    condition: f64,
    identifiable: bool,
    covariance: [[f64; 3]; 3],
}

pub fn run(common: &CommonArgs, data: Option<&Path>) -> CliResult<()> {
    let (resolved, hash) = super::load_config(&common.config)?;
    let data_dir = data.unwrap_or(&common.out);
    let (spectra, background) = load_spectra(data_dir)?;
    if spectra.is_empty() {
        return Err(CliError::config(format!(
            "no nps_*.csv spectra found in {}",
            data_dir.display()
        )));
    }

    let opts = OscFitOptions {
        band_hz: Some((
            resolved.config.analysis.fit_band_khz[0] * 1e3,
            resolved.config.analysis.fit_band_khz[1] * 1e3,
        )),
        weighting: resolved.config.analysis.weighting.into(),
        init: None,
    };
    let window = (
        TWO_PI * resolved.config.analysis.window_khz[0] * 1e3,
        TWO_PI * resolved.config.analysis.window_khz[1] * 1e3,
    );

    // Group by power ratio.
    let mut mus: Vec<f64> = spectra.iter().map(|s| s.meta.mu).collect();
    mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    mus.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let mut groups = Vec::new();
    for mu in mus {
        let members: Vec<&MeasuredSpectrum> = spectra
            .iter()
            .filter(|s| (s.meta.mu - mu).abs() < 1e-9)
            .collect();
        groups.push(analyze_group(&resolved, mu, &members, background.as_ref(), &opts, window)?);
    }

    let report = AnalysisReport {
        config_sha256: hash.clone(),
        toolkit_version: env!("CARGO_PKG_VERSION"),
        background_subtracted: background.is_some(),
        groups,
    };

    let mut writer =
        OutputWriter::new(&common.out, "analyze", hash.clone(), Vec::new(), common.overwrite)?;
    let json = serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
    writer.write("analysis.json", &json)?;

    // Per-spectrum table.
    let mut table = String::new();
    let _ = writeln!(table, "# levcav analysis per-spectrum results");
    let _ = writeln!(table, "# config_sha256={hash}");
    let _ = writeln!(
        table,
        "mu,label,delta_hz,omega_eff_hz,gamma_eff_hz,teff_star_k,teff_int_k,converged"
    );
    for g in &report.groups {
        for s in &g.spectra {
            let _ = writeln!(
                table,
                "{},{},{},{},{},{},{},{}",
                csvio::format_value(g.mu),
                s.label.replace(',', ";"),
                csvio::format_value(s.delta_hz),
                csvio::format_value(s.omega_eff_hz),
                csvio::format_value(s.gamma_eff_hz),
                csvio::format_value(s.teff_star_k),
                csvio::format_value(s.teff_int_k),
                s.converged
            );
        }
    }
    writer.write("analysis_spectra.csv", &table)?;

    // Per-mu summary.
    let mut summary = String::new();
    let _ = writeln!(summary, "# levcav analysis per-mu summary");
    let _ = writeln!(summary, "# config_sha256={hash}");
    let _ = writeln!(
        summary,
        "mu,points,g0nc_hz,omega0_hz,delta_offset_hz,identifiable,teff_window_mean_k,teff_window_std_k"
    );
    for g in &report.groups {
        let (g0, om, off, ident) = match &g.sweep_fit {
            Some(f) => (
                csvio::format_value(f.g0nc_hz),
                csvio::format_value(f.omega0_hz),
                csvio::format_value(f.delta_offset_hz),
                f.identifiable.to_string(),
            ),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{}",
            csvio::format_value(g.mu),
            g.spectra.len(),
            g0,
            om,
            off,
            ident,
            g.teff_window_mean_k.map(csvio::format_value).unwrap_or_default(),
            g.teff_window_std_k.map(csvio::format_value).unwrap_or_default()
        );
    }
    writer.write("analysis_summary.csv", &summary)?;
    writer.finish()?;
    println!(
        "analyze: {} spectra in {} group(s) -> {}",
        report.groups.iter().map(|g| g.spectra.len()).sum::<usize>(),
        report.groups.len(),
        common.out.display()
    );
    Ok(())
}

fn load_spectra(dir: &Path) -> CliResult<(Vec<MeasuredSpectrum>, Option<MeasuredSpectrum>)> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(&format!("reading data directory {}", dir.display()), e))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.starts_with("nps_") && n.ends_with(".csv"))
        .collect();
    names.sort();
    let mut spectra = Vec::new();
    for name in &names {
        let text = std::fs::read_to_string(dir.join(name))
            .map_err(|e| CliError::io(&format!("reading {name}"), e))?;
        let spec = csvio::spectrum_from_csv(&text, name)?;
        if !(spec.meta.detuning.is_finite()
            && spec.meta.kappa.is_finite()
            && spec.meta.mu.is_finite())
        {
            return Err(CliError::config(format!(
                "{name}: missing detuning_hz, kappa_hz or mu metadata; \
                 cannot deconvolve or group this spectrum"
            )));
        }
        spectra.push(spec);
    }
    let background_path = dir.join("background_nps.csv");
    let background = if background_path.exists() {
        let text = std::fs::read_to_string(&background_path)
            .map_err(|e| CliError::io("reading background_nps.csv", e))?;
        Some(csvio::spectrum_from_csv(&text, "background")?)
    } else {
        None
    };
    Ok((spectra, background))
}

fn analyze_group(
    resolved: &crate::config::Resolved,
    mu: f64,
    members: &[&MeasuredSpectrum],
    background: Option<&MeasuredSpectrum>,
    opts: &OscFitOptions,
    window: (f64, f64),
) -> CliResult<MuGroup> {
    // Background subtraction and deconvolution for every spectrum.
    let mut prepared: Vec<(MeasuredSpectrum, usize)> = Vec::new();
    for spec in members {
        let (subtracted, clipped) = match background {
            // A grid mismatch is an input problem, not a numerical one.
            Some(bg) => analysis::background_subtract(spec, bg, true)
                .map_err(|e| CliError::config(e.to_string()))?,
            None => ((*spec).clone(), 0),
        };
        let displacement = analysis::deconvolve(&subtracted).map_err(CliError::numerical)?;
        prepared.push((displacement, clipped));
    }

    // Reference: smallest |detuning| within kappa/100.
    let kappa = prepared[0].0.meta.kappa;
    let reference_idx = prepared
        .iter()
        .enumerate()
        .filter(|(_, (s, _))| s.meta.detuning.abs() <= kappa / 100.0)
        .min_by(|a, b| {
            let da = a.1 .0.meta.detuning.abs();
            let db = b.1 .0.meta.detuning.abs();
            da.partial_cmp(&db).unwrap().then(a.1 .0.meta.label.cmp(&b.1 .0.meta.label))
        })
        .map(|(i, _)| i)
        .ok_or_else(|| {
            CliError::config(format!(
                "mu = {mu}: no reference spectrum within kappa/100 of zero detuning; \
                 cannot calibrate the temperature scale"
            ))
        })?;

    let t_ref = resolved.config.analysis.reference_temperature_k;
    let (calibration, _) =
        analysis::calibrate(&prepared[reference_idx].0, t_ref, opts).map_err(CliError::numerical)?;

    let mut fits: Vec<(f64, OscFit)> = Vec::new();
    let mut rows = Vec::new();
    let mut window_points = Vec::new();
    for (spec, clipped) in &prepared {
        let row = fit_one(spec, *clipped, opts, &calibration)?;
        if row.converged {
            fits.push((
                spec.meta.detuning,
                reconstruct_fit(&row),
            ));
            window_points.push((spec.meta.detuning, row.teff_int_k));
        }
        rows.push(row);
    }

    // Optical-spring sweep fit when the detunings support it.
    let ctx = SweepContext {
        kappa,
        gamma_m: resolved.gamma_m,
        bath_temp: resolved.bath_temp,
        mass: levcav::params::particle_mass(&resolved.particle),
        transfer_roundtrip: resolved.config.analysis.transfer_roundtrip,
    };
    let (sweep_fit, sweep_fit_note) = match analysis::fit_detuning_sweep(&fits, &ctx) {
        Ok(f) => (
            Some(SweepFitReport {
                g0nc_hz: f.g0_hat / TWO_PI,
                omega0_hz: f.omega0_hat / TWO_PI,
                delta_offset_hz: f.delta_offset / TWO_PI,
                residual_norm: f.residual_norm,
                condition: f.condition,
                identifiable: f.identifiable,
                covariance: f.covariance,
            }),
            None,
        ),
        Err(e) => (None, Some(e.to_string())),
    };

    let (mean, std) = match analysis::window_average_temperature(&window_points, window) {
        Ok((m, s)) => (Some(m), Some(s)),
        Err(_) => (None, None),
    };

    Ok(MuGroup {
        mu,
        reference_label: prepared[reference_idx].0.meta.label.clone(),
        calibration: CalibrationReport {
            per_kelvin_fit: calibration.per_kelvin_fit,
            area_constant: calibration.area_constant,
            t_ref_k: calibration.t_ref,
        },
        spectra: rows,
        sweep_fit,
        sweep_fit_note,
        window_lo_hz: window.0 / TWO_PI,
        window_hi_hz: window.1 / TWO_PI,
        teff_window_mean_k: mean,
        teff_window_std_k: std,
    })
}

fn fit_one(
    spec: &MeasuredSpectrum,
    clipped: usize,
    opts: &OscFitOptions,
    calibration: &Calibration,
) -> CliResult<SpectrumFit> {
    let mut fit = analysis::fit_oscillator(spec, opts).map_err(CliError::numerical)?;
    analysis::apply_calibration(&mut fit, calibration);
    let integral =
        analysis::integrate_temperature(spec, &fit, calibration).map_err(CliError::numerical)?;
    Ok(SpectrumFit {
        label: spec.meta.label.clone(),
        delta_hz: spec.meta.detuning / TWO_PI,
        omega_eff_hz: fit.omega_eff / TWO_PI,
        gamma_eff_hz: fit.gamma_eff / TWO_PI,
        teff_star_k: fit.teff_star.unwrap_or(f64::NAN),
        teff_int_k: integral.kelvin,
        converged: fit.converged,
        iterations: fit.iterations,
        residual_norm: fit.residual_norm,
        clipped_bins: clipped,
        truncation_warning: integral.truncation_warning,
        covariance: fit.covariance,
    })
}

/// The sweep fit consumes OscFit values; rebuild the minimal fields from a
/// report row (frequencies back in rad/s).
fn reconstruct_fit(row: &SpectrumFit) -> OscFit {
    OscFit {
        omega_eff: row.omega_eff_hz * TWO_PI,
        gamma_eff: row.gamma_eff_hz * TWO_PI,
        amplitude: f64::NAN,
        teff_star: Some(row.teff_star_k),
        residual_norm: row.residual_norm,
        converged: row.converged,
        iterations: row.iterations,
        covariance: row.covariance,
    }
}
