//! `levcav simulate`: stochastic time-domain runs for every configured
//! (mu, detuning, seed), each yielding a time-series CSV and a Welch NPS
//! CSV, plus one detector-noise background spectrum. A near-resonant
//! reference point is always included so `analyze` can calibrate.

use std::f64::consts::PI;
use std::fmt::Write as _;

use levcav::analysis::{MeasuredSpectrum, SpectrumMeta};
use levcav::sim::{simulate, synth_heterodyne, SimConfig};
use levcav::welch::welch_psd;
use rayon::prelude::*;

use crate::csvio;
use crate::error::{CliError, CliResult};
use crate::manifest::OutputWriter;
use crate::CommonArgs;

const TWO_PI: f64 = 2.0 * PI;

struct RunOutput {
    mu: f64,
    detuning: f64,
    seed: u64,
    outcome: Result<RunFiles, String>,
}

struct RunFiles {
    nps_name: String,
    nps_csv: String,
    ts_name: String,
    ts_csv: Option<String>,
    segments: usize,
}

pub fn run(common: &CommonArgs) -> CliResult<()> {
    let (resolved, hash) = super::load_config(&common.config)?;
    let sim_cfg = &resolved.config.sim;
    let seeds: Vec<u64> =
        common.seed.map(|s| vec![s]).unwrap_or_else(|| sim_cfg.seeds.clone());
    if seeds.is_empty() {
        return Err(CliError::config("sim.seeds must not be empty".to_string()));
    }

    let mut detunings = resolved.sweep_detunings()?;
    if detunings.is_empty() {
        detunings.push(resolved.detuning());
    }
    // Calibration reference close to zero detuning, once per mu.
    let reference = TWO_PI * resolved.config.analysis.reference_detuning_khz * 1e3;
    if detunings.iter().all(|d| (d - reference).abs() > 1e-9 * reference.abs().max(1.0)) {
        detunings.insert(0, reference);
    }

    let mut points = Vec::new();
    for &mu in &resolved.sweep_mus() {
        for &delta in &detunings {
            for &seed in &seeds {
                points.push((mu, delta, seed));
            }
        }
    }

    let results: Vec<RunOutput> = points
        .par_iter()
        .map(|&(mu, delta, seed)| RunOutput {
            mu,
            detuning: delta,
            seed,
            outcome: run_point(&resolved, &hash, mu, delta, seed),
        })
        .collect();

    let mut writer =
        OutputWriter::new(&common.out, "simulate", hash.clone(), seeds.clone(), common.overwrite)?;

    // Detector-noise background, estimated exactly like the signal spectra.
    let background = background_spectrum(&resolved, &hash, seeds[0])?;
    writer.write("background_nps.csv", &background)?;

    let mut runs = String::new();
    let _ = writeln!(runs, "# levcav simulation runs");
    let _ = writeln!(runs, "# config_sha256={hash}");
    let _ = writeln!(runs, "mu,delta_hz,seed,status,nps_file,timeseries_file,welch_segments");
    let mut failures = 0usize;
    for r in &results {
        match &r.outcome {
            Ok(files) => {
                writer.write(&files.nps_name, &files.nps_csv)?;
                let ts_column = match &files.ts_csv {
                    Some(csv) => {
                        writer.write(&files.ts_name, csv)?;
                        files.ts_name.as_str()
                    }
                    None => "",
                };
                let _ = writeln!(
                    runs,
                    "{},{},{},ok,{},{},{}",
                    csvio::format_value(r.mu),
                    csvio::format_value(r.detuning / TWO_PI),
                    r.seed,
                    files.nps_name,
                    ts_column,
                    files.segments
                );
            }
            Err(msg) => {
                failures += 1;
                let _ = writeln!(
                    runs,
                    "{},{},{},failed: {},,,",
                    csvio::format_value(r.mu),
                    csvio::format_value(r.detuning / TWO_PI),
                    r.seed,
                    msg.replace(',', ";")
                );
            }
        }
    }
    writer.write("runs.csv", &runs)?;
    writer.finish()?;
    println!(
        "simulate: {} runs ({} failed) -> {}",
        results.len(),
        failures,
        common.out.display()
    );
    Ok(())
}

fn sim_config(resolved: &crate::config::Resolved, model: &levcav::BackactionModel, seed: u64) -> SimConfig {
    let section = &resolved.config.sim;
    let mut cfg = SimConfig::for_model(model);
    cfg.duration = section.duration_s;
    if let Some(dt_us) = section.dt_us {
        cfg.dt = dt_us * 1e-6;
    }
    cfg.seed = seed;
    cfg.bath_temp = resolved.bath_temp;
    cfg.record_decimation = section.decimation.max(1);
    cfg
}

fn run_point(
    resolved: &crate::config::Resolved,
    hash: &str,
    mu: f64,
    delta: f64,
    seed: u64,
) -> Result<RunFiles, String> {
    let section = &resolved.config.sim;
    let model = resolved.backaction_model(mu, delta).map_err(|e| e.to_string())?;
    let cfg = sim_config(resolved, &model, seed);
    let ts = simulate(&cfg, &model).map_err(|e| e.to_string())?;
    let s_opt =
        synth_heterodyne(&ts, model.kappa, PI / 2.0, section.detection_noise, seed ^ 0xD0_5E);

    let ps = welch_psd(
        &s_opt,
        ts.sample_rate(),
        section.segment_length,
        section.overlap,
        section.window.into(),
    )
    .map_err(|e| e.to_string())?;
    let label = format!("sim {} {} seed{seed}", super::mu_tag(mu), super::delta_tag(delta));
    let meta = SpectrumMeta {
        detuning: delta,
        mu,
        pressure: resolved.gas.pressure,
        kappa: model.kappa,
        label: label.clone(),
    };
    let spectrum =
        MeasuredSpectrum::new(ps.freq_hz, ps.psd, meta).map_err(|e| e.to_string())?;

    let tag = format!("{}_{}_seed{:04}", super::mu_tag(mu), super::delta_tag(delta), seed);
    Ok(RunFiles {
        nps_name: format!("nps_{tag}.csv"),
        nps_csv: csvio::spectrum_to_csv(&spectrum, hash),
        ts_name: format!("ts_{tag}.csv"),
        ts_csv: section
            .write_timeseries
            .then(|| csvio::timeseries_to_csv(&ts, &s_opt, hash, &label)),
        segments: ps.segments,
    })
}

/// Spectrum of a particle-free detector trace: pure detection noise with the
/// same estimator settings. All zeros when no detection noise is configured.
fn background_spectrum(
    resolved: &crate::config::Resolved,
    hash: &str,
    seed: u64,
) -> CliResult<String> {
    let section = &resolved.config.sim;
    let model = resolved
        .backaction_model(resolved.config.drive.mu, resolved.detuning())?;
    let cfg = sim_config(resolved, &model, seed);
    let samples = (cfg.duration / (cfg.dt * cfg.record_decimation as f64)).ceil() as usize;
    let silent = levcav::TimeSeries {
        dt: cfg.dt * cfg.record_decimation as f64,
        x: vec![0.0; samples],
        re_a: vec![0.0; samples],
        im_a: vec![0.0; samples],
        seed,
        warnings: Vec::new(),
    };
    let noise_trace =
        synth_heterodyne(&silent, model.kappa, PI / 2.0, section.detection_noise, seed ^ 0xBAC0);
    let ps = welch_psd(
        &noise_trace,
        silent.sample_rate(),
        section.segment_length,
        section.overlap,
        section.window.into(),
    )
    .map_err(CliError::numerical)?;
    let meta = SpectrumMeta {
        detuning: 0.0,
        mu: 0.0,
        pressure: resolved.gas.pressure,
        kappa: model.kappa,
        label: "background".to_string(),
    };
    let spectrum = MeasuredSpectrum::new(ps.freq_hz, ps.psd, meta).map_err(CliError::numerical)?;
    Ok(csvio::spectrum_to_csv(&spectrum, hash))
}
