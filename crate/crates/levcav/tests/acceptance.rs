//! End-to-end acceptance suite. Each test prints one pass/fail line with the
//! measured numbers (run with `--nocapture` to see them on success).

use std::f64::consts::PI;

use levcav::analysis::{
    self, MeasuredSpectrum, OscFit, OscFitOptions, SpectrumMeta, SweepContext,
};
use levcav::dynamics::{max_linewidth_broadening, BackactionModel};
use levcav::gas::{self, GasSpec};
use levcav::params::{self, CavitySpec, ParticleSpec};
use levcav::position::{self, CalibPoint};
use levcav::sim::{simulate, synth_heterodyne, SimConfig};
use levcav::trap::{self, DriveConfig};
use levcav::welch::{welch_psd, Window};

const TWO_PI: f64 = 2.0 * PI;

fn check(id: &str, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("acceptance {id}: {status} ({detail})");
    assert!(ok, "acceptance {id} failed: {detail}");
}

fn silica_particle() -> ParticleSpec {
    ParticleSpec::new(169e-9, 1950.0, 2.1).unwrap()
}

fn experiment_cavity() -> CavitySpec {
    CavitySpec::new(10.97e-3, 76_000.0, 1064e-9, 41e-6).unwrap()
}

fn experiment_model(detuning: f64, coupling: f64) -> BackactionModel {
    BackactionModel::new(
        TWO_PI * 165e3,
        TWO_PI * 7.2e3,
        TWO_PI * 180e3,
        detuning,
        coupling,
        293.0,
        3.9426e-17,
    )
    .unwrap()
}

#[test]
fn criterion_01_cavity_parameter_chain() {
    let dc = params::derive_cavity(&experiment_cavity());
    let fsr_ok = (dc.fsr / 13.67e9 - 1.0).abs() <= 1e-3;
    let kappa_khz = dc.kappa / TWO_PI / 1e3;
    let kappa_ok = (kappa_khz / 180.0 - 1.0).abs() <= 0.01;
    check(
        "01 cavity-parameter-chain",
        fsr_ok && kappa_ok,
        &format!("FSR = {:.4} GHz, kappa/2pi = {:.2} kHz", dc.fsr / 1e9, kappa_khz),
    );
}

#[test]
fn criterion_02_waist_rayleigh_consistency() {
    let c = experiment_cavity();
    let dc = params::derive_cavity(&c);
    let w_mirror = params::waist_at(&dc, c.waist_center, c.length / 2.0).unwrap();
    check(
        "02 waist-rayleigh-consistency",
        (w_mirror / 61e-6 - 1.0).abs() <= 0.02,
        &format!("W(mirror) = {:.2} um for W0 = 41 um", w_mirror * 1e6),
    );
}

#[test]
fn criterion_03_frequency_shift_chain() {
    let u0 = params::u0_at(&silica_particle(), &experiment_cavity(), 1.56e-3);
    let u0_khz = u0 / TWO_PI / 1e3;
    check(
        "03 frequency-shift-chain",
        (u0_khz / 145.0 - 1.0).abs() <= 0.05,
        &format!("U0/2pi = {u0_khz:.1} kHz at x0 = 1.56 mm"),
    );
}

#[test]
fn criterion_04_displacement_and_single_photon_coupling() {
    let p = silica_particle();
    let c = experiment_cavity();
    let dc = params::derive_cavity(&c);
    let u0 = params::u0_at(&p, &c, 1.56e-3);
    let n_t = trap::photons_for_bare_frequency(&p, &dc, u0, TWO_PI * 165e3);
    let drive = DriveConfig::new(1e-12, 0.0, n_t).unwrap();
    let state = trap::trap_state(&p, &c, 3.92e-3, &drive).unwrap();
    let xbar_nm = state.xbar * 1e9;
    let g0_hz = state.g0_c.abs() / TWO_PI;
    let xbar_ok = (xbar_nm / 77.0 - 1.0).abs() <= 0.05;
    let g0_ok = (g0_hz / 1.2 - 1.0).abs() <= 0.15;
    check(
        "04 displacement-and-coupling",
        xbar_ok && g0_ok,
        &format!("xbar = {xbar_nm:.1} nm, g0/2pi = {g0_hz:.3} Hz at mu -> 0"),
    );
}

#[test]
fn criterion_05_cooling_rate() {
    let start = std::time::Instant::now();
    let base = experiment_model(0.0, TWO_PI * 66e3);
    let (d_star, broadening) = max_linewidth_broadening(&base, 0.0, TWO_PI * 500e3);
    let khz = broadening / TWO_PI / 1e3;
    let elapsed = start.elapsed();
    check(
        "05 cooling-rate",
        (39.0..=59.0).contains(&khz) && elapsed.as_secs_f64() < 1.0,
        &format!(
            "max gamma_eff(Omega_0) - gamma_m = 2pi x {khz:.1} kHz at Delta/2pi = {:.0} kHz in {:.0} ms",
            d_star / TWO_PI / 1e3,
            elapsed.as_secs_f64() * 1e3
        ),
    );
}

#[test]
fn criterion_06_temperature_theory_window() {
    let base = experiment_model(0.0, TWO_PI * 66e3);
    let sweep: Vec<(f64, f64)> = (0..=5)
        .map(|i| {
            let delta = TWO_PI * (100e3 + 10e3 * i as f64);
            (delta, base.with_detuning(delta).effective_temperature().unwrap())
        })
        .collect();
    let (mean, std) =
        analysis::window_average_temperature(&sweep, (TWO_PI * 100e3, TWO_PI * 150e3)).unwrap();
    // One-sided gate against the measured floor (64 +- 5 K) plus a sanity
    // floor: the model has no excess heating, so it must predict at most the
    // measured temperature but still a strongly cooled mode.
    check(
        "06 temperature-theory-window",
        (35.0..=69.0).contains(&mean),
        &format!("windowed T_eff = {mean:.1} +- {std:.1} K over Delta/2pi in [100, 150] kHz (gate: <= 69 K)"),
    );
}

/// Simulate, detect, estimate and fit one operating point; returns the
/// pipeline fit and the same fit applied to the frequency-domain theory
/// spectrum on the identical grid.
fn closed_loop_fit(model: &BackactionModel, seed: u64, duration: f64) -> (OscFit, OscFit, usize) {
    let mut cfg = SimConfig::for_model(model);
    cfg.duration = duration;
    cfg.seed = seed;
    cfg.record_decimation = 4;
    let ts = simulate(&cfg, model).unwrap();
    let s_opt = synth_heterodyne(&ts, model.kappa, PI / 2.0, 0.0, seed ^ 0x5eed);

    let ps = welch_psd(&s_opt, ts.sample_rate(), 4096, 0.5, Window::Hann).unwrap();
    let meta = SpectrumMeta {
        detuning: model.detuning,
        mu: 0.4,
        pressure: 400.0,
        kappa: model.kappa,
        label: format!("sim seed {seed}"),
    };
    let raw = MeasuredSpectrum::new(ps.freq_hz.clone(), ps.psd.clone(), meta.clone()).unwrap();
    let blank =
        MeasuredSpectrum::new(raw.freq_hz.clone(), vec![0.0; raw.nps.len()], meta.clone()).unwrap();
    let (subtracted, _) = analysis::background_subtract(&raw, &blank, true).unwrap();
    let displacement = analysis::deconvolve(&subtracted).unwrap();

    let opts = OscFitOptions { band_hz: Some((40e3, 420e3)), ..Default::default() };
    let sim_fit = analysis::fit_oscillator(&displacement, &opts).unwrap();

    let theory_nps: Vec<f64> =
        displacement.freq_hz.iter().map(|&f| model.thermal_psd(TWO_PI * f)).collect();
    let theory =
        MeasuredSpectrum::new(displacement.freq_hz.clone(), theory_nps, meta).unwrap();
    let theory_fit = analysis::fit_oscillator(&theory, &opts).unwrap();
    (sim_fit, theory_fit, ps.segments)
}

#[test]
fn criterion_07_pipeline_closure() {
    let mut all_ok = true;
    let mut lines = Vec::new();
    for (i, delta_khz) in [25.0, 75.0, 125.0, 175.0].iter().enumerate() {
        let start = std::time::Instant::now();
        let model = experiment_model(TWO_PI * delta_khz * 1e3, TWO_PI * 66e3);
        let (sim_fit, theory_fit, segments) = closed_loop_fit(&model, 101 + i as u64, 0.6);
        let omega_err = (sim_fit.omega_eff / theory_fit.omega_eff - 1.0).abs();
        let gamma_err = (sim_fit.gamma_eff / theory_fit.gamma_eff - 1.0).abs();
        let ok = omega_err <= 0.02 && gamma_err <= 0.05 && segments >= 200;
        all_ok &= ok;
        lines.push(format!(
            "Delta/2pi = {delta_khz:.0} kHz: Omega_eff err {:.2}%, gamma_eff err {:.2}%, {} segments, {:.1} s",
            omega_err * 100.0,
            gamma_err * 100.0,
            segments,
            start.elapsed().as_secs_f64()
        ));
    }
    check("07 pipeline-closure", all_ok, &lines.join("; "));
}

#[test]
fn criterion_08_equipartition_anchor() {
    // Reference run close to zero detuning calibrates the scale; an
    // independent run must then read back the bath temperature.
    let model = experiment_model(TWO_PI * 1e3, TWO_PI * 66e3);
    let duration = 0.6;
    let reference_spec = {
        let mut cfg = SimConfig::for_model(&model);
        cfg.duration = duration;
        cfg.seed = 7001;
        cfg.record_decimation = 4;
        let ts = simulate(&cfg, &model).unwrap();
        let s_opt = synth_heterodyne(&ts, model.kappa, PI / 2.0, 0.0, 7001 ^ 0x5eed);
        let ps = welch_psd(&s_opt, ts.sample_rate(), 4096, 0.5, Window::Hann).unwrap();
        let meta = SpectrumMeta {
            detuning: model.detuning,
            mu: 0.4,
            pressure: 400.0,
            kappa: model.kappa,
            label: "reference".to_string(),
        };
        let raw = MeasuredSpectrum::new(ps.freq_hz, ps.psd, meta).unwrap();
        analysis::deconvolve(&raw).unwrap()
    };
    let opts = OscFitOptions { band_hz: Some((40e3, 420e3)), ..Default::default() };
    let (cal, _) = analysis::calibrate(&reference_spec, 293.0, &opts).unwrap();

    // Second, independent run analyzed with the frozen calibration.
    let probe_spec = {
        let mut cfg = SimConfig::for_model(&model);
        cfg.duration = duration;
        cfg.seed = 7002;
        cfg.record_decimation = 4;
        let ts = simulate(&cfg, &model).unwrap();
        let s_opt = synth_heterodyne(&ts, model.kappa, PI / 2.0, 0.0, 7002 ^ 0x5eed);
        let ps = welch_psd(&s_opt, ts.sample_rate(), 4096, 0.5, Window::Hann).unwrap();
        let meta = SpectrumMeta {
            detuning: model.detuning,
            mu: 0.4,
            pressure: 400.0,
            kappa: model.kappa,
            label: "probe".to_string(),
        };
        let raw = MeasuredSpectrum::new(ps.freq_hz, ps.psd, meta).unwrap();
        analysis::deconvolve(&raw).unwrap()
    };
    let mut fit = analysis::fit_oscillator(&probe_spec, &opts).unwrap();
    analysis::apply_calibration(&mut fit, &cal);
    let t_star = fit.teff_star.unwrap();
    let t_int = analysis::integrate_temperature(&probe_spec, &fit, &cal).unwrap().kelvin;
    let ok = (t_star / 293.0 - 1.0).abs() <= 0.05
        && (t_int / 293.0 - 1.0).abs() <= 0.05
        && (t_star / t_int - 1.0).abs() <= 0.10;
    check(
        "08 equipartition-anchor",
        ok,
        &format!("fit T* = {t_star:.1} K, integral T^I = {t_int:.1} K on an independent run"),
    );
}

#[test]
fn criterion_09_sweep_fit_identifiability() {
    let ctx = SweepContext {
        kappa: TWO_PI * 180e3,
        gamma_m: TWO_PI * 7.2e3,
        bath_temp: 293.0,
        mass: 3.9426e-17,
        transfer_roundtrip: true,
    };
    let g_true = TWO_PI * 66e3;
    let omega0_true = TWO_PI * 165e3;
    let offset_true = TWO_PI * 5e3;
    let grid_hz: Vec<f64> = (0..=1600).map(|i| 50e3 + 400e3 * i as f64 / 1600.0).collect();
    let opts = OscFitOptions::default();
    let points: Vec<(f64, OscFit)> = [20.0, 50.0, 80.0, 110.0, 140.0, 170.0, 200.0, 230.0]
        .iter()
        .map(|&dk| {
            let delta_set = TWO_PI * dk * 1e3;
            let model = experiment_model(delta_set + offset_true, g_true);
            let model = BackactionModel { omega0: omega0_true, ..model };
            let nps: Vec<f64> = grid_hz.iter().map(|&f| model.thermal_psd(TWO_PI * f)).collect();
            let meta = SpectrumMeta {
                detuning: delta_set,
                mu: 0.4,
                pressure: 400.0,
                kappa: ctx.kappa,
                label: "synthetic sweep".to_string(),
            };
            let spec = MeasuredSpectrum::new(grid_hz.clone(), nps, meta).unwrap();
            (delta_set, analysis::fit_oscillator(&spec, &opts).unwrap())
        })
        .collect();
    let fit = analysis::fit_detuning_sweep(&points, &ctx).unwrap();
    let g_err = (fit.g0_hat / g_true - 1.0).abs();
    let omega_err = (fit.omega0_hat / omega0_true - 1.0).abs();
    let offset_err = (fit.delta_offset / offset_true - 1.0).abs();
    let ok = g_err <= 0.02 && omega_err <= 0.02 && offset_err <= 0.02 && g_err <= 0.10;
    check(
        "09 sweep-fit-identifiability",
        ok && fit.identifiable,
        &format!(
            "recovered g0 rt(n_c)/2pi = {:.1} kHz ({:.2}% off), Omega_0 {:.2}% off, deltaDelta {:.2}% off",
            fit.g0_hat / TWO_PI / 1e3,
            g_err * 100.0,
            omega_err * 100.0,
            offset_err * 100.0
        ),
    );
}

#[test]
fn criterion_10_gas_model_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1234);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let pressure = 10f64.powf(rng.gen_range(-1.0..5.0));
        let radius = rng.gen_range(50e-9..400e-9);
        let particle = ParticleSpec::new(radius, 1950.0, 2.1).unwrap();
        let spec = GasSpec::air(pressure).unwrap();
        // Independent hand evaluation of the damping chain.
        let k_b = 1.380_649e-23;
        let lambda_fp = k_b * 293.0 / (std::f64::consts::SQRT_2 * PI * 0.372e-9_f64.powi(2) * pressure);
        let kn = lambda_fp / radius;
        let c_k = 0.31 * kn / (0.785 + 1.152 * kn + kn * kn);
        let mass = 4.0 / 3.0 * PI * radius.powi(3) * 1950.0;
        let expected = 6.0 * PI * 1.81e-5 * radius / mass * 0.619 / (0.619 + kn) * (1.0 + c_k);
        let got = gas::gas_damping(&spec, &particle);
        worst = worst.max((got / expected - 1.0).abs());
    }
    // Stokes limit and the 1/r free-molecular scaling.
    let p = silica_particle();
    let dense = GasSpec::air(1e16).unwrap();
    let stokes_err =
        (gas::gas_damping(&dense, &p) / gas::stokes_damping(&dense, &p) - 1.0).abs();
    let dilute = GasSpec::air(0.1).unwrap();
    let small = ParticleSpec::new(60e-9, 1950.0, 2.1).unwrap();
    let large = ParticleSpec::new(120e-9, 1950.0, 2.1).unwrap();
    let scaling_err =
        (gas::gas_damping(&dilute, &small) / gas::gas_damping(&dilute, &large) / 2.0 - 1.0).abs();
    let ok = worst <= 1e-9 && stokes_err <= 1e-9 && scaling_err <= 1e-3;
    check(
        "10 gas-model-oracle",
        ok,
        &format!(
            "worst oracle error {worst:.2e} over 10 random (P, r); Stokes {stokes_err:.1e}; 1/r {scaling_err:.1e}"
        ),
    );
}

#[test]
fn criterion_11_position_calibration() {
    use rand::{Rng, SeedableRng};
    let x_r = params::derive_cavity(&experiment_cavity()).rayleigh_length;
    let (zeta_c, scale, omega_c) = (481.0, 13.0e-6, TWO_PI * 173e3);
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(99);
    let points: Vec<CalibPoint> = (0..12)
        .map(|i| {
            let zeta = 160.0 + 55.0 * i as f64;
            let omega = omega_c / (1.0 + ((zeta - zeta_c) * scale / x_r).powi(2)).sqrt();
            let jitter = 1.0 + 0.01 * rng.gen_range(-1.0..1.0);
            CalibPoint::new(zeta, omega * jitter, 0.01 * omega).unwrap()
        })
        .collect();
    let fit = position::fit_camera_scale(&points, x_r).unwrap();
    let zc_err = (fit.zeta_c / zeta_c - 1.0).abs();
    let scale_err = (fit.scale.abs() / scale - 1.0).abs();
    let omega_err = (fit.omega_c / omega_c - 1.0).abs();
    let ratio = 1.0 / (1.0 + (1.56e-3 / x_r).powi(2)).sqrt();
    let ratio_ok = (ratio / 0.953 - 1.0).abs() <= 0.01;
    let ok = zc_err <= 0.05 && scale_err <= 0.05 && omega_err <= 0.05 && ratio_ok;
    check(
        "11 position-calibration",
        ok,
        &format!(
            "recovery errors: zeta_c {:.2}%, scale {:.2}%, Omega_c {:.2}%; ratio at 1.56 mm = {ratio:.4}",
            zc_err * 100.0,
            scale_err * 100.0,
            omega_err * 100.0
        ),
    );
}
