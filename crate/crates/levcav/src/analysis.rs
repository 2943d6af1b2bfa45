//! Measurement pipeline for detected noise power spectra: background
//! subtraction, cavity-filter deconvolution, harmonic-oscillator line fits,
//! equipartition temperature calibration, detuning-sweep parameter
//! estimation, and windowed temperature averaging.
//!
//! The oscillator line shape fitted throughout is
//!
//! ```text
//! f(omega) = A / ((omega^2 - Omega_eff^2)^2 + omega^2 gamma_eff^2)
//! ```
//!
//! where A absorbs the calibration constant, the effective temperature and
//! the fixed gas damping gamma_m. Temperatures come out of A (or the
//! integrated area) only after anchoring a near-resonant reference spectrum
//! to the bath temperature.

use crate::dynamics::{heterodyne_transfer, BackactionModel};
use crate::fitting::{fit_least_squares, FitOptions};
use crate::{Error, Result};

use std::f64::consts::PI;

/// Acquisition metadata carried alongside a measured spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMeta {
    /// Control-beam detuning during the measurement (rad/s).
    pub detuning: f64,
    /// Intracavity power ratio mu.
    pub mu: f64,
    /// Gas pressure (Pa).
    pub pressure: f64,
    /// Cavity linewidth (rad/s).
    pub kappa: f64,
    pub label: String,
}

/// A detected (or reconstructed) noise power spectrum on a frequency grid
/// in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredSpectrum {
    pub freq_hz: Vec<f64>,
    pub nps: Vec<f64>,
    pub meta: SpectrumMeta,
}

impl MeasuredSpectrum {
    pub fn new(freq_hz: Vec<f64>, nps: Vec<f64>, meta: SpectrumMeta) -> Result<Self> {
        if freq_hz.len() != nps.len() {
            return Err(Error::GridMismatch(format!(
                "{} frequencies but {} values",
                freq_hz.len(),
                nps.len()
            )));
        }
        if freq_hz.len() < 2 {
            return Err(Error::invalid("spectrum needs at least two points".to_string()));
        }
        if freq_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("frequency grid must be strictly increasing".to_string()));
        }
        if nps.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("spectrum values must be finite".to_string()));
        }
        Ok(Self { freq_hz, nps, meta })
    }

    /// Integral of the spectrum over angular frequency (trapezoid rule).
    pub fn area_omega(&self) -> f64 {
        2.0 * PI * trapezoid(&self.freq_hz, &self.nps)
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (ys[0] + ys[1]) * (xs[1] - xs[0])).sum()
}

/// Pointwise `signal - background` on identical grids. Negative bins are
/// clipped to zero when `clip` is set; the number of clipped bins is always
/// reported so the clipping is never silent.
pub fn background_subtract(
    signal: &MeasuredSpectrum,
    background: &MeasuredSpectrum,
    clip: bool,
) -> Result<(MeasuredSpectrum, usize)> {
    if signal.freq_hz.len() != background.freq_hz.len()
        || signal
            .freq_hz
            .iter()
            .zip(&background.freq_hz)
            .any(|(a, b)| (a - b).abs() > 1e-9 * a.abs().max(1.0))
    {
        return Err(Error::GridMismatch(
            "signal and background spectra are on different grids; no silent resampling"
                .to_string(),
        ));
    }
    let mut clipped = 0usize;
    let values: Vec<f64> = signal
        .nps
        .iter()
        .zip(&background.nps)
        .map(|(s, b)| {
            let d = s - b;
            if d < 0.0 {
                clipped += 1;
                if clip {
                    0.0
                } else {
                    d
                }
            } else {
                d
            }
        })
        .collect();
    let out = MeasuredSpectrum::new(signal.freq_hz.clone(), values, signal.meta.clone())?;
    Ok((out, clipped))
}

/// Undo the cavity filtering: divide the detected spectrum by
/// |chi_c(omega) + chi_c*(-omega)|^2 using the kappa and detuning stored in
/// the metadata. Recovers S_xx up to a constant.
pub fn deconvolve(spec: &MeasuredSpectrum) -> Result<MeasuredSpectrum> {
    let values: Vec<f64> = spec
        .freq_hz
        .iter()
        .zip(&spec.nps)
        .map(|(&f, &v)| v / heterodyne_transfer(spec.meta.kappa, spec.meta.detuning, 2.0 * PI * f))
        .collect();
    MeasuredSpectrum::new(spec.freq_hz.clone(), values, spec.meta.clone())
}

/// How residuals are weighted in the oscillator fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Equal weight per bin (default; the calibration absorbs the scale).
    #[default]
    Uniform,
    /// Weight 1/value, appropriate for averaged-periodogram estimators whose
    /// standard deviation scales with the spectral value.
    RelativeValue,
}

#[derive(Debug, Clone, Copy)]
pub struct OscFitOptions {
    /// Restrict the fit to this band (Hz); full grid when absent.
    pub band_hz: Option<(f64, f64)>,
    pub weighting: Weighting,
    /// Initial (amplitude, omega_eff, gamma_eff); peak heuristics when absent.
    pub init: Option<(f64, f64, f64)>,
}

impl Default for OscFitOptions {
    fn default() -> Self {
        Self { band_hz: None, weighting: Weighting::Uniform, init: None }
    }
}

/// Fitted oscillator line.
#[derive(Debug, Clone)]
pub struct OscFit {
    /// Effective resonance frequency (rad/s).
    pub omega_eff: f64,
    /// Effective linewidth (rad/s).
    pub gamma_eff: f64,
    /// Line amplitude A in f(omega) = A / ((omega^2 - Omega^2)^2 + omega^2 gamma^2).
    pub amplitude: f64,
    /// Effective temperature (K); set once a calibration is applied.
    pub teff_star: Option<f64>,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Covariance over (amplitude, omega_eff, gamma_eff, teff_star). The
    /// temperature row is filled on calibration; it is a rescaling of the
    /// amplitude row because the model determines only a * T_eff.
    pub covariance: [[f64; 4]; 4],
}

fn oscillator_line(a: f64, omega_eff: f64, gamma_eff: f64, omega: f64) -> f64 {
    let d = (omega * omega - omega_eff * omega_eff).powi(2)
        + (omega * gamma_eff).powi(2);
    a / d
}

/// Fit the harmonic-oscillator line to a spectrum.
///
/// Requires a visible resonance (peak at least 3x the median). A fit that
/// exhausts its iterations is returned with `converged == false`, never
/// silently discarded.
pub fn fit_oscillator(spec: &MeasuredSpectrum, opts: &OscFitOptions) -> Result<OscFit> {
    let (lo, hi) = opts.band_hz.unwrap_or((spec.freq_hz[0], *spec.freq_hz.last().unwrap()));
    let pairs: Vec<(f64, f64)> = spec
        .freq_hz
        .iter()
        .zip(&spec.nps)
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .map(|(&f, &v)| (2.0 * PI * f, v))
        .collect();
    if pairs.len() < 8 {
        return Err(Error::invalid(format!(
            "only {} bins in the fit band [{lo}, {hi}] Hz",
            pairs.len()
        )));
    }

    let mut sorted: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let (peak_idx, &(peak_omega, peak_val)) = pairs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .unwrap();
    if !(peak_val >= 3.0 * median) || peak_val <= 0.0 {
        return Err(Error::NoResonance(format!(
            "peak/median = {:.2}, need >= 3",
            peak_val / median.max(f64::MIN_POSITIVE)
        )));
    }

    let (a0, w0, g0) = opts.init.unwrap_or_else(|| {
        // Half-maximum crossings around the peak give the width guess.
        let half = peak_val / 2.0;
        let mut right = *pairs.last().map(|p| &p.0).unwrap();
        for (w, v) in pairs.iter().skip(peak_idx) {
            if *v < half {
                right = *w;
                break;
            }
        }
        let mut left = pairs[0].0;
        for (w, v) in pairs.iter().take(peak_idx).rev() {
            if *v < half {
                left = *w;
                break;
            }
        }
        let fwhm = (right - left).max(peak_omega * 1e-3);
        (peak_val * (peak_omega * fwhm).powi(2), peak_omega, fwhm)
    });

    // Dimensionless parameterization: frequencies in units of the peak
    // position, values in units of the peak height.
    let w_scale = w0;
    let y_scale = peak_val;
    let amp_scale = y_scale * w_scale.powi(4);
    let init = [a0 / amp_scale, 1.0, g0 / w_scale];
    let weights: Vec<f64> = pairs
        .iter()
        .map(|(_, v)| match opts.weighting {
            Weighting::Uniform => 1.0,
            Weighting::RelativeValue => y_scale / v.abs().max(1e-6 * y_scale),
        })
        .collect();
    let residuals = |p: &[f64]| -> Vec<f64> {
        let (a, w, g) = (p[0].abs(), p[1].abs(), p[2].abs());
        pairs
            .iter()
            .zip(&weights)
            .map(|((omega, val), wt)| {
                let scaled = omega / w_scale;
                wt * (a / ((scaled * scaled - w * w).powi(2) + (scaled * g).powi(2))
                    - val / y_scale)
            })
            .collect()
    };
    let fit = fit_least_squares(&init, &residuals, None, &FitOptions::default())?;

    let amplitude = fit.params[0].abs() * amp_scale;
    let omega_eff = fit.params[1].abs() * w_scale;
    let gamma_eff = fit.params[2].abs() * w_scale;
    let scales = [amp_scale, w_scale, w_scale];
    let mut covariance = [[0.0; 4]; 4];
    for i in 0..3 {
        for j in 0..3 {
            covariance[i][j] = fit.covariance[i][j] * scales[i] * scales[j];
        }
    }

    Ok(OscFit {
        omega_eff,
        gamma_eff,
        amplitude,
        teff_star: None,
        residual_norm: fit.residual_norm,
        converged: fit.converged,
        iterations: fit.iterations,
        covariance,
    })
}

/// Detector-to-kelvin conversion constants anchored on a reference spectrum.
///
/// The fitted temperature comes from the equipartition area of the fitted
/// line, A pi / (2 gamma_eff Omega_eff^2), so it scales as A / gamma_eff:
/// teff_star = (A / gamma_eff) / per_kelvin_fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// (amplitude / gamma_eff) of the reference line per kelvin.
    pub per_kelvin_fit: f64,
    /// Area constant a_I in T = a_I Omega_eff^2 integral(S dOmega).
    pub area_constant: f64,
    /// Temperature assigned to the reference (K).
    pub t_ref: f64,
    /// Label of the reference spectrum.
    pub reference: String,
}

/// Anchor the temperature scale on a reference spectrum taken close to zero
/// detuning (|Delta| <= kappa/100), assigning it `t_ref` by equipartition.
pub fn calibrate(
    reference: &MeasuredSpectrum,
    t_ref: f64,
    opts: &OscFitOptions,
) -> Result<(Calibration, OscFit)> {
    if reference.meta.detuning.abs() > reference.meta.kappa / 100.0 {
        return Err(Error::invalid(format!(
            "calibration reference must sit near zero detuning: |Delta| = {:.3e} rad/s exceeds kappa/100 = {:.3e}",
            reference.meta.detuning.abs(),
            reference.meta.kappa / 100.0
        )));
    }
    let mut fit = fit_oscillator(reference, opts)?;
    let area = reference.area_omega();
    let cal = Calibration {
        per_kelvin_fit: fit.amplitude / (fit.gamma_eff * t_ref),
        area_constant: t_ref / (fit.omega_eff.powi(2) * area),
        t_ref,
        reference: reference.meta.label.clone(),
    };
    apply_calibration(&mut fit, &cal);
    Ok((cal, fit))
}

/// Fill in the fitted temperature teff_star = (amplitude / gamma_eff) /
/// per_kelvin_fit and propagate its covariance row from (amplitude,
/// gamma_eff).
pub fn apply_calibration(fit: &mut OscFit, cal: &Calibration) {
    let c = cal.per_kelvin_fit;
    let t = fit.amplitude / (fit.gamma_eff * c);
    fit.teff_star = Some(t);
    // T = A / (gamma c): dT/dA = T/A, dT/dgamma = -T/gamma.
    let da = t / fit.amplitude;
    let dg = -t / fit.gamma_eff;
    for j in 0..3 {
        let cov = da * fit.covariance[0][j] + dg * fit.covariance[2][j];
        fit.covariance[3][j] = cov;
        fit.covariance[j][3] = cov;
    }
    fit.covariance[3][3] = da * da * fit.covariance[0][0]
        + 2.0 * da * dg * fit.covariance[0][2]
        + dg * dg * fit.covariance[2][2];
}

/// Temperature by direct integration of the spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureEstimate {
    pub kelvin: f64,
    /// Present when the recorded band cuts off more than 1 % of the fitted
    /// line's area.
    pub truncation_warning: Option<String>,
}

/// T_eff^I = a_I Omega_eff^2 integral(S dOmega) over the recorded band.
///
/// The fitted line estimates how much of the oscillator's area the band
/// misses; more than 1 % attaches a warning.
pub fn integrate_temperature(
    spec: &MeasuredSpectrum,
    fit: &OscFit,
    cal: &Calibration,
) -> Result<TemperatureEstimate> {
    let area = spec.area_omega();
    let kelvin = cal.area_constant * fit.omega_eff.powi(2) * area;
    // Full-line area of A/((w^2-W^2)^2 + w^2 g^2) over w > 0 is A pi/(2 g W^2).
    let full = fit.amplitude * PI / (2.0 * fit.gamma_eff * fit.omega_eff.powi(2));
    let lo = 2.0 * PI * spec.freq_hz[0];
    let hi = 2.0 * PI * spec.freq_hz.last().unwrap();
    let band = crate::quadrature::integrate(
        |w| oscillator_line(fit.amplitude, fit.omega_eff, fit.gamma_eff, w),
        lo,
        hi,
        1e-8,
        &[fit.omega_eff - 3.0 * fit.gamma_eff, fit.omega_eff, fit.omega_eff + 3.0 * fit.gamma_eff],
    )?;
    let lost = 1.0 - band / full;
    let truncation_warning = (lost > 0.01).then(|| {
        format!("recorded band misses {:.2}% of the fitted oscillator line", 100.0 * lost)
    });
    Ok(TemperatureEstimate { kelvin, truncation_warning })
}

/// Unweighted mean and sample standard deviation of the temperatures whose
/// detuning falls inside `window` (rad/s bounds, inclusive).
pub fn window_average_temperature(
    sweep: &[(f64, f64)],
    window: (f64, f64),
) -> Result<(f64, f64)> {
    let inside: Vec<f64> = sweep
        .iter()
        .filter(|(delta, _)| *delta >= window.0 && *delta <= window.1)
        .map(|(_, t)| *t)
        .collect();
    if inside.is_empty() {
        return Err(Error::invalid(format!(
            "no sweep points inside the detuning window [{}, {}] rad/s",
            window.0, window.1
        )));
    }
    let n = inside.len() as f64;
    let mean = inside.iter().sum::<f64>() / n;
    let std = if inside.len() == 1 {
        0.0
    } else {
        (inside.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok((mean, std))
}

/// Fixed quantities for a detuning-sweep fit.
#[derive(Debug, Clone, Copy)]
pub struct SweepContext {
    /// Cavity linewidth, determined independently (rad/s).
    pub kappa: f64,
    /// Gas damping (rad/s).
    pub gamma_m: f64,
    /// Bath temperature (K).
    pub bath_temp: f64,
    /// Particle mass (kg).
    pub mass: f64,
    /// Run each theory spectrum through the cavity transfer and its
    /// deconvolution (an exact no-op); exercises the same code path the data
    /// takes.
    pub transfer_roundtrip: bool,
}

/// Result of fitting the optical-spring curve Omega_eff(Delta).
#[derive(Debug, Clone)]
pub struct SweepFit {
    /// Fitted field-enhanced coupling g0 sqrt(n_c) (rad/s).
    pub g0_hat: f64,
    /// Fitted bare trap frequency (rad/s).
    pub omega0_hat: f64,
    /// Fitted common detuning offset delta-Delta (rad/s).
    pub delta_offset: f64,
    pub residual_norm: f64,
    /// Condition estimate of the normal equations at the optimum.
    pub condition: f64,
    /// False when the data do not constrain the coupling (for instance a
    /// flat sweep), in which case g0_hat carries a large uncertainty.
    pub identifiable: bool,
    /// Covariance over (g0_hat, omega0_hat, delta_offset).
    pub covariance: [[f64; 3]; 3],
}

/// Effective frequency the analysis pipeline would extract from a theory
/// spectrum: generate S_xx, optionally roundtrip the cavity transfer, and fit
/// the oscillator line exactly as for measured data.
fn theory_omega_eff(
    model: &BackactionModel,
    grid_hz: &[f64],
    transfer_roundtrip: bool,
) -> Result<f64> {
    let nps: Vec<f64> =
        grid_hz.iter().map(|&f| model.thermal_psd(2.0 * PI * f)).collect();
    let meta = SpectrumMeta {
        detuning: model.detuning,
        mu: f64::NAN,
        pressure: f64::NAN,
        kappa: model.kappa,
        label: "theory".to_string(),
    };
    let mut spec = MeasuredSpectrum::new(grid_hz.to_vec(), nps, meta)?;
    if transfer_roundtrip {
        let filtered: Vec<f64> = spec
            .freq_hz
            .iter()
            .zip(&spec.nps)
            .map(|(&f, &v)| v * heterodyne_transfer(spec.meta.kappa, spec.meta.detuning, 2.0 * PI * f))
            .collect();
        spec = MeasuredSpectrum::new(spec.freq_hz.clone(), filtered, spec.meta.clone())?;
        spec = deconvolve(&spec)?;
    }
    Ok(fit_oscillator(&spec, &OscFitOptions::default())?.omega_eff)
}

/// Fit (g0 sqrt(n_c), Omega_0, delta-Delta) to measured effective frequencies
/// over a detuning sweep, treating theory spectra exactly like data.
pub fn fit_detuning_sweep(points: &[(f64, OscFit)], ctx: &SweepContext) -> Result<SweepFit> {
    if points.len() < 4 {
        return Err(Error::invalid(format!(
            "detuning sweep needs at least 4 points, got {}",
            points.len()
        )));
    }
    let span = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
        - points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    if span < ctx.kappa / 2.0 {
        return Err(Error::invalid(format!(
            "sweep spans {span:.3e} rad/s of detuning; need at least kappa/2 = {:.3e}",
            ctx.kappa / 2.0
        )));
    }

    let measured: Vec<(f64, f64)> = points.iter().map(|(d, f)| (*d, f.omega_eff)).collect();
    // The point closest to zero detuning anchors the bare-frequency guess.
    let omega0_guess = measured
        .iter()
        .min_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap())
        .unwrap()
        .1;
    let grid_hz: Vec<f64> = {
        let lo = omega0_guess / (2.0 * PI) * 0.3;
        let hi = omega0_guess / (2.0 * PI) * 2.2 + ctx.kappa / (2.0 * PI);
        let n = 1600;
        (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    };

    let w_scale = omega0_guess;
    let residuals = |p: &[f64]| -> Vec<f64> {
        let g = p[0].abs() * ctx.kappa;
        let omega0 = p[1].abs() * w_scale;
        let offset = p[2] * ctx.kappa;
        measured
            .iter()
            .map(|&(delta_set, omega_meas)| {
                let model = BackactionModel {
                    omega0,
                    gamma_m: ctx.gamma_m,
                    kappa: ctx.kappa,
                    detuning: delta_set + offset,
                    coupling: g,
                    bath_temp: ctx.bath_temp,
                    mass: ctx.mass,
                    s_rp: 0.0,
                };
                match theory_omega_eff(&model, &grid_hz, ctx.transfer_roundtrip) {
                    Ok(omega_theory) => (omega_theory - omega_meas) / w_scale,
                    // Unstable or unfittable candidate: push the optimizer away.
                    Err(_) => 10.0,
                }
            })
            .collect()
    };

    // Coarse coupling scan to start in the right basin.
    let mut best = (ctx.kappa / 20.0, f64::INFINITY);
    for frac in [0.01, 0.05, 0.15, 0.3, 0.5] {
        let cost: f64 =
            residuals(&[frac, 1.0, 0.0]).iter().map(|r| r * r).sum();
        if cost < best.1 {
            best = (frac * ctx.kappa, cost);
        }
    }
    let init = [best.0 / ctx.kappa, 1.0, 0.0];
    let opts = FitOptions { fd_step: 1e-4, ..FitOptions::default() };
    let fit = fit_least_squares(&init, &residuals, None, &opts)?;

    let g0_hat = fit.params[0].abs() * ctx.kappa;
    let omega0_hat = fit.params[1].abs() * w_scale;
    let delta_offset = fit.params[2] * ctx.kappa;
    if delta_offset.abs() >= ctx.kappa {
        return Err(Error::NoSolution(format!(
            "fitted detuning offset {:.3e} rad/s exceeds the cavity linewidth; \
             the sweep data do not describe this model",
            delta_offset
        )));
    }
    let scales = [ctx.kappa, w_scale, ctx.kappa];
    let mut covariance = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            covariance[i][j] = fit.covariance[i][j] * scales[i] * scales[j];
        }
    }
    let sigma_g = covariance[0][0].max(0.0).sqrt();
    let identifiable = fit.condition.is_finite() && fit.condition < 1e12 && sigma_g < g0_hat;

    Ok(SweepFit {
        g0_hat,
        omega0_hat,
        delta_offset,
        residual_norm: fit.residual_norm,
        condition: fit.condition,
        identifiable,
        covariance,
    })
}

/// Geometry shared by all power-ratio sweeps when fitting the coupling curve.
#[derive(Debug, Clone, Copy)]
pub struct CouplingGeometry {
    pub particle: crate::params::ParticleSpec,
    pub cavity: crate::params::CavitySpec,
    /// Particle position from the mirror (m), common to every sweep.
    pub x0_prime: f64,
    /// Measured bare trap frequency Omega_0(0) (rad/s).
    pub omega0_bare: f64,
}

/// Coupling-vs-power-ratio table with the one-parameter theory overlay.
#[derive(Debug, Clone)]
pub struct CouplingVsMu {
    /// (mu, measured g0 sqrt(n_c), fitted theory value) rows.
    pub rows: Vec<(f64, f64, f64)>,
    /// Fitted polarizability scale relative to the reference particle.
    pub polarizability_scale: f64,
    /// Fitted polarizability (F m^2).
    pub polarizability: f64,
    /// Particle radius implied by the fitted polarizability (m).
    pub radius: f64,
    pub residual_norm: f64,
}

/// Theory coupling g0 sqrt(n_c) at power ratio mu for the given geometry,
/// with the polarizability scaled by `scale` relative to the reference
/// particle. The trap photon number is re-derived from the measured bare
/// frequency, so the curve depends on the polarizability through sqrt(scale).
pub fn coupling_theory(geom: &CouplingGeometry, scale: f64, mu: f64) -> Result<f64> {
    use crate::params;
    use crate::trap;
    let dc = params::derive_cavity(&geom.cavity);
    let phi = trap::phase_shift(geom.x0_prime, geom.cavity.length)?;
    let x0 = geom.x0_prime - geom.cavity.length / 2.0;
    let u0 = scale * params::u0_at(&geom.particle, &geom.cavity, x0);
    let mass = params::particle_mass(&geom.particle);
    let n_t = mass * geom.omega0_bare.powi(2) / (2.0 * crate::constants::HBAR * u0 * dc.wavenumber.powi(2));
    let omega_mu = trap::trap_frequency(mu, phi, geom.omega0_bare)?;
    let xgs = (crate::constants::HBAR / (mass * omega_mu)).sqrt();
    let xbar = trap::equilibrium_displacement(mu, phi, dc.wavenumber)?;
    let (g0_c, _) = trap::coupling_rates(u0, dc.wavenumber, xgs, xbar, phi);
    Ok(g0_c.abs() * (mu * n_t).sqrt())
}

/// Fit the per-mu coupling measurements with the polarizability as the only
/// free parameter and report the implied particle size.
pub fn coupling_vs_mu(
    points: &[(f64, f64)],
    geom: &CouplingGeometry,
) -> Result<CouplingVsMu> {
    if points.len() < 2 {
        return Err(Error::invalid("need at least two (mu, coupling) points".to_string()));
    }
    if points.iter().any(|(mu, g)| !(*mu > 0.0) || !(*g >= 0.0)) {
        return Err(Error::invalid("power ratios must be > 0 and couplings >= 0".to_string()));
    }
    // g_theory(mu; s) = sqrt(s) g_theory(mu; 1): the scale has a closed-form
    // least-squares solution.
    let reference: Vec<f64> = points
        .iter()
        .map(|(mu, _)| coupling_theory(geom, 1.0, *mu))
        .collect::<Result<_>>()?;
    let num: f64 = points.iter().zip(&reference).map(|((_, g), r)| g * r).sum();
    let den: f64 = reference.iter().map(|r| r * r).sum();
    if den == 0.0 {
        return Err(Error::NoSolution("theory coupling vanishes for every mu".to_string()));
    }
    let sqrt_scale = num / den;
    let scale = sqrt_scale * sqrt_scale;

    let rows: Vec<(f64, f64, f64)> = points
        .iter()
        .zip(&reference)
        .map(|(&(mu, g), r)| (mu, g, sqrt_scale * r))
        .collect();
    let residual_norm = rows.iter().map(|(_, g, t)| (g - t).powi(2)).sum::<f64>().sqrt();
    let xi_ref = crate::params::polarizability(&geom.particle);
    Ok(CouplingVsMu {
        rows,
        polarizability_scale: scale,
        polarizability: scale * xi_ref,
        radius: geom.particle.radius * scale.cbrt(),
        residual_norm,
    })
}
