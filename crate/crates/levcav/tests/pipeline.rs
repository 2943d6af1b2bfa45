//! Simulation-against-theory closure checks that cut across modules.

use std::f64::consts::PI;

use levcav::analysis::{self, MeasuredSpectrum, OscFitOptions, SpectrumMeta};
use levcav::dynamics::BackactionModel;
use levcav::sim::{simulate, synth_heterodyne, SimConfig};
use levcav::trap::TrapState;
use levcav::welch::{welch_psd, Window};

const TWO_PI: f64 = 2.0 * PI;

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

fn simulated_heterodyne_psd(
    model: &BackactionModel,
    seed: u64,
    duration: f64,
) -> (levcav::PowerSpectrum, f64) {
    let mut cfg = SimConfig::for_model(model);
    cfg.duration = duration;
    cfg.seed = seed;
    cfg.record_decimation = 4;
    let ts = simulate(&cfg, model).unwrap();
    let s_opt = synth_heterodyne(&ts, model.kappa, PI / 2.0, 0.0, seed ^ 0xbeef);
    let fs = ts.sample_rate();
    (welch_psd(&s_opt, fs, 4096, 0.5, Window::Hann).unwrap(), fs)
}

#[test]
fn simulated_heterodyne_matches_frequency_domain_model() {
    let model = experiment_model(TWO_PI * 125e3, TWO_PI * 66e3);
    let (ps, _) = simulated_heterodyne_psd(&model, 314, 0.6);
    assert!(ps.segments >= 200, "only {} Welch segments", ps.segments);

    // The simulated a_c evolves with zeta_c alpha_c = g / X_gs, so that is
    // the field-coupling prefactor of the detected spectrum; the factor 2
    // converts the symmetric density to one-sided-in-Hz units.
    let xgs = (1.054_571_817e-34 / (model.mass * model.omega0)).sqrt();
    let zeta_alpha = model.coupling / xgs;
    let (gamma_eff, omega_eff) = model.backaction(model.omega0).unwrap();
    let lo = (omega_eff - 3.0 * gamma_eff) / TWO_PI;
    let hi = (omega_eff + 3.0 * gamma_eff) / TWO_PI;
    let mut sq_sum = 0.0;
    let mut n = 0;
    for (f, p) in ps.freq_hz.iter().zip(&ps.psd) {
        if *f < lo || *f > hi {
            continue;
        }
        let omega = TWO_PI * f;
        let theory = 2.0 * model.heterodyne_psd(zeta_alpha, 1.0, omega);
        sq_sum += (p / theory - 1.0).powi(2);
        n += 1;
    }
    let rms = (sq_sum / n as f64).sqrt();
    assert!(rms <= 0.10, "RMS deviation {rms:.3} over [{lo:.0}, {hi:.0}] Hz, {n} bins");
}

fn fit_simulated_displacement(
    model: &BackactionModel,
    seed: u64,
    duration: f64,
) -> analysis::OscFit {
    let (ps, _) = simulated_heterodyne_psd(model, seed, duration);
    let meta = SpectrumMeta {
        detuning: model.detuning,
        mu: 0.4,
        pressure: 400.0,
        kappa: model.kappa,
        label: "pipeline".to_string(),
    };
    let raw = MeasuredSpectrum::new(ps.freq_hz, ps.psd, meta).unwrap();
    let displacement = analysis::deconvolve(&raw).unwrap();
    let opts = OscFitOptions { band_hz: Some((40e3, 420e3)), ..Default::default() };
    analysis::fit_oscillator(&displacement, &opts).unwrap()
}

#[test]
fn optical_spring_and_linewidth_track_theory() {
    let g = TWO_PI * 30e3;
    for (i, delta_khz) in [50.0, 90.0, 150.0, 250.0].iter().enumerate() {
        let model = experiment_model(TWO_PI * delta_khz * 1e3, g);
        let fit = fit_simulated_displacement(&model, 4000 + i as u64, 0.4);
        let (gamma_ref, omega_ref) = model.backaction(model.omega0).unwrap();
        let spring_err = (fit.omega_eff / omega_ref - 1.0).abs();
        assert!(
            spring_err <= 0.02,
            "optical spring off by {:.2}% at Delta = {delta_khz} kHz",
            spring_err * 100.0
        );
        // Moderate coupling at half a linewidth of detuning: the fitted
        // width reproduces gamma_eff.
        if (*delta_khz - 90.0).abs() < 1.0 {
            let gamma_err = (fit.gamma_eff / gamma_ref - 1.0).abs();
            assert!(
                gamma_err <= 0.05,
                "linewidth off by {:.2}% at Delta = kappa/2",
                gamma_err * 100.0
            );
        }
    }
}

#[test]
fn split_half_fits_agree_within_errors() {
    let model = experiment_model(TWO_PI * 125e3, TWO_PI * 40e3);
    let mut cfg = SimConfig::for_model(&model);
    cfg.duration = 0.6;
    cfg.seed = 2718;
    cfg.record_decimation = 4;
    let ts = simulate(&cfg, &model).unwrap();
    let s_opt = synth_heterodyne(&ts, model.kappa, PI / 2.0, 0.0, 2718 ^ 0xbeef);
    let half = s_opt.len() / 2;
    let fs = ts.sample_rate();
    // Variance weighting keeps the reported parameter errors honest for an
    // averaged-periodogram estimator.
    let opts = OscFitOptions {
        band_hz: Some((40e3, 420e3)),
        weighting: analysis::Weighting::RelativeValue,
        ..Default::default()
    };
    let fit_of = |trace: &[f64]| {
        let ps = welch_psd(trace, fs, 4096, 0.5, Window::Hann).unwrap();
        let meta = SpectrumMeta {
            detuning: model.detuning,
            mu: 0.4,
            pressure: 400.0,
            kappa: model.kappa,
            label: "half".to_string(),
        };
        let raw = MeasuredSpectrum::new(ps.freq_hz, ps.psd, meta).unwrap();
        let displacement = analysis::deconvolve(&raw).unwrap();
        analysis::fit_oscillator(&displacement, &opts).unwrap()
    };
    let a = fit_of(&s_opt[..half]);
    let b = fit_of(&s_opt[half..]);
    let sigma = (a.covariance[1][1] + b.covariance[1][1]).sqrt();
    let diff = (a.omega_eff - b.omega_eff).abs();
    assert!(
        diff <= 2.0 * sigma,
        "half-split Omega_eff differ by {diff:.1} rad/s vs combined sigma {sigma:.1}"
    );
}

#[test]
fn trap_state_plugs_into_backaction_model() {
    // The coupling chain from physical specs feeds the dynamics layer.
    let p = levcav::ParticleSpec::new(169e-9, 1950.0, 2.1).unwrap();
    let c = levcav::CavitySpec::new(10.97e-3, 76_000.0, 1064e-9, 41e-6).unwrap();
    let dc = levcav::params::derive_cavity(&c);
    let u0 = levcav::params::u0_at(&p, &c, 1.56e-3);
    let n_t = levcav::trap::photons_for_bare_frequency(&p, &dc, u0, TWO_PI * 165e3);
    let drive = levcav::DriveConfig::new(0.4, TWO_PI * 125e3, n_t).unwrap();
    let state: TrapState = levcav::trap::trap_state(&p, &c, 3.92e-3, &drive).unwrap();
    let model = BackactionModel::new(
        state.omega0_mu,
        TWO_PI * 7.2e3,
        state.kappa,
        state.detuning,
        state.coupling(),
        293.0,
        state.mass,
    )
    .unwrap();
    let (gamma_eff, _) = model.backaction(model.omega0).unwrap();
    assert!(gamma_eff > model.gamma_m, "red detuning must broaden the line");
    let t = model.effective_temperature().unwrap();
    assert!(t < 100.0, "chain-predicted temperature {t:.1} K");
}
