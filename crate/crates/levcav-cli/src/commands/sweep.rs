//! `levcav sweep`: frequency-domain theory over the configured detunings:
//! one displacement-spectrum CSV per point plus a backaction summary table.

use std::f64::consts::PI;
use std::fmt::Write as _;

use levcav::analysis::{MeasuredSpectrum, SpectrumMeta};
use rayon::prelude::*;

use crate::csvio;
use crate::error::{CliError, CliResult};
use crate::manifest::OutputWriter;
use crate::CommonArgs;

const TWO_PI: f64 = 2.0 * PI;

struct PointResult {
    mu: f64,
    detuning: f64,
    outcome: Result<PointData, String>,
}

struct PointData {
    file: String,
    csv: String,
    omega_eff: f64,
    gamma_eff: f64,
    teff: f64,
    parametric_warning: bool,
}

pub fn run(common: &CommonArgs) -> CliResult<()> {
    let (resolved, hash) = super::load_config(&common.config)?;
    let detunings = resolved.sweep_detunings()?;
    if detunings.is_empty() {
        return Err(CliError::config(
            "sweep: no detunings configured (set sweep.detuning_khz or the range fields)"
                .to_string(),
        ));
    }
    let mus = resolved.sweep_mus();
    let sweep = &resolved.config.sweep;
    let grid_hz: Vec<f64> = {
        let [lo, hi] = sweep.grid_khz;
        let n = sweep.grid_points.max(16);
        (0..=n).map(|i| (lo + (hi - lo) * i as f64 / n as f64) * 1e3).collect()
    };

    let mut points: Vec<(f64, f64)> = Vec::new();
    for &mu in &mus {
        for &delta in &detunings {
            points.push((mu, delta));
        }
    }

    let results: Vec<PointResult> = points
        .par_iter()
        .map(|&(mu, delta)| PointResult {
            mu,
            detuning: delta,
            outcome: compute_point(&resolved, &hash, &grid_hz, mu, delta),
        })
        .collect();

    let mut writer = OutputWriter::new(&common.out, "sweep", hash.clone(), Vec::new(), common.overwrite)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "# levcav sweep summary");
    let _ = writeln!(summary, "# config_sha256={hash}");
    let _ = writeln!(
        summary,
        "# units=mu:1,delta_hz:Hz,omega_eff_hz:Hz,gamma_eff_hz:Hz,broadening_hz:Hz,teff_k:K"
    );
    let _ = writeln!(summary, "mu,delta_hz,omega_eff_hz,gamma_eff_hz,broadening_hz,teff_k,stable,note");
    let mut failures = 0usize;
    for r in &results {
        let delta_hz = r.detuning / TWO_PI;
        match &r.outcome {
            Ok(data) => {
                writer.write(&data.file, &data.csv)?;
                let note = if data.parametric_warning { "parametric-instability" } else { "" };
                let _ = writeln!(
                    summary,
                    "{},{},{},{},{},{},true,{}",
                    csvio::format_value(r.mu),
                    csvio::format_value(delta_hz),
                    csvio::format_value(data.omega_eff / TWO_PI),
                    csvio::format_value(data.gamma_eff / TWO_PI),
                    csvio::format_value((data.gamma_eff - resolved.gamma_m) / TWO_PI),
                    csvio::format_value(data.teff),
                    note
                );
            }
            Err(msg) => {
                failures += 1;
                let _ = writeln!(
                    summary,
                    "{},{},,,,,false,{}",
                    csvio::format_value(r.mu),
                    csvio::format_value(delta_hz),
                    msg.replace(',', ";")
                );
            }
        }
    }
    writer.write("sweep_summary.csv", &summary)?;
    writer.finish()?;
    println!(
        "sweep: {} points ({} unstable flagged) -> {}",
        results.len(),
        failures,
        common.out.display()
    );
    Ok(())
}

fn compute_point(
    resolved: &crate::config::Resolved,
    hash: &str,
    grid_hz: &[f64],
    mu: f64,
    delta: f64,
) -> Result<PointData, String> {
    let model = resolved.backaction_model(mu, delta).map_err(|e| e.to_string())?;
    let (gamma_eff, omega_eff) = {
        // Self-consistent oscillation frequency.
        let mut w = model.omega0;
        for _ in 0..50 {
            let sq = model.omega_eff_sq(w);
            if sq <= 0.0 {
                return Err(format!("anti-restoring spring at omega = {w} rad/s"));
            }
            w = sq.sqrt();
        }
        (model.gamma_eff(w), w)
    };
    let teff = model.effective_temperature().map_err(|e| e.to_string())?;
    let nps: Vec<f64> = grid_hz.iter().map(|&f| model.thermal_psd(TWO_PI * f)).collect();
    let meta = SpectrumMeta {
        detuning: delta,
        mu,
        pressure: resolved.gas.pressure,
        kappa: model.kappa,
        label: format!("theory {} {}", super::mu_tag(mu), super::delta_tag(delta)),
    };
    let spec = MeasuredSpectrum::new(grid_hz.to_vec(), nps, meta).map_err(|e| e.to_string())?;
    Ok(PointData {
        file: format!("theory_{}_{}.csv", super::mu_tag(mu), super::delta_tag(delta)),
        csv: csvio::spectrum_to_csv(&spec, hash),
        omega_eff,
        gamma_eff,
        teff,
        parametric_warning: model.is_parametrically_unstable(model.omega0),
    })
}
