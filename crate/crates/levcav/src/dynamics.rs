//! Frequency-domain model of the optomechanically modified motion.
//!
//! Linearizing the particle-field dynamics and eliminating the cavity field
//! gives a mechanical response with detuning-dependent effective damping
//! gamma_eff(omega) and frequency Omega_eff(omega) (optical spring). Red
//! detuning (Delta > 0, control laser below the shifted cavity resonance)
//! broadens the linewidth and cools the motion; blue detuning narrows it and
//! can drive a parametric instability.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::constants::{HBAR, K_B};
use crate::quadrature;
use crate::{Error, Result};

/// Parameters of the linearized optomechanical system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackactionModel {
    /// Mechanical trap frequency Omega_0(mu) (rad/s).
    pub omega0: f64,
    /// Intrinsic (gas) damping rate gamma_m (rad/s).
    pub gamma_m: f64,
    /// Cavity FWHM linewidth (rad/s).
    pub kappa: f64,
    /// Control-beam detuning Delta from the shifted resonance (rad/s).
    pub detuning: f64,
    /// Field-enhanced coupling g = g0 sqrt(n_c) (rad/s).
    pub coupling: f64,
    /// Bath temperature (K).
    pub bath_temp: f64,
    /// Particle mass (kg).
    pub mass: f64,
    /// Radiation-pressure force spectrum contribution (m^2/s), kept as an
    /// extension point; the thermal force dominates in the modelled regime.
    pub s_rp: f64,
}

impl BackactionModel {
    pub fn new(
        omega0: f64,
        gamma_m: f64,
        kappa: f64,
        detuning: f64,
        coupling: f64,
        bath_temp: f64,
        mass: f64,
    ) -> Result<Self> {
        if !(omega0 > 0.0 && gamma_m > 0.0 && kappa > 0.0) {
            return Err(Error::invalid(
                "omega0, gamma_m and kappa must all be positive".to_string(),
            ));
        }
        if !(coupling >= 0.0) {
            return Err(Error::invalid(format!("coupling must be >= 0, got {coupling}")));
        }
        if !(bath_temp > 0.0 && mass > 0.0) {
            return Err(Error::invalid("bath temperature and mass must be positive".to_string()));
        }
        Ok(Self { omega0, gamma_m, kappa, detuning, coupling, bath_temp, mass, s_rp: 0.0 })
    }

    /// Same model at a different detuning.
    pub fn with_detuning(&self, detuning: f64) -> Self {
        Self { detuning, ..*self }
    }

    /// Same model at a different coupling.
    pub fn with_coupling(&self, coupling: f64) -> Self {
        Self { coupling, ..*self }
    }

    /// Product of the two cavity Lorentzian factors,
    /// ((kappa/2)^2 + (omega + Delta)^2) ((kappa/2)^2 + (omega - Delta)^2).
    fn cavity_lobes(&self, omega: f64) -> f64 {
        let half = self.kappa / 2.0;
        (half * half + (omega + self.detuning).powi(2))
            * (half * half + (omega - self.detuning).powi(2))
    }

    /// Effective damping rate gamma_eff(omega) (rad/s).
    pub fn gamma_eff(&self, omega: f64) -> f64 {
        let g2 = self.coupling * self.coupling;
        self.gamma_m
            + 4.0 * g2 * self.omega0 * self.detuning * (self.kappa / 2.0) / self.cavity_lobes(omega)
    }

    /// Effective frequency squared, Omega_eff(omega)^2 ((rad/s)^2). May be
    /// negative when the optical spring overwhelms the trap.
    pub fn omega_eff_sq(&self, omega: f64) -> f64 {
        let g2 = self.coupling * self.coupling;
        let half = self.kappa / 2.0;
        let shift = 2.0 * g2 * self.omega0 * self.detuning
            * (half * half - omega * omega + self.detuning * self.detuning)
            / self.cavity_lobes(omega);
        self.omega0 * self.omega0 - shift
    }

    /// (gamma_eff(omega), Omega_eff(omega)). Errors when the spring becomes
    /// anti-restoring; a negative gamma_eff is a parametric-instability
    /// warning, not an error (see [`Self::is_parametrically_unstable`]).
    pub fn backaction(&self, omega: f64) -> Result<(f64, f64)> {
        let omega_eff_sq = self.omega_eff_sq(omega);
        if omega_eff_sq <= 0.0 {
            return Err(Error::AntiRestoring { omega_eff_sq, omega });
        }
        Ok((self.gamma_eff(omega), omega_eff_sq.sqrt()))
    }

    /// True when the backaction pumps more energy in than gas damping removes.
    pub fn is_parametrically_unstable(&self, omega: f64) -> bool {
        self.gamma_eff(omega) < 0.0
    }

    /// Effective mechanical susceptibility
    /// chi_m(omega) = gamma_m / ((Omega_eff^2 - omega^2)^2 - i gamma_eff^2 omega^2).
    pub fn effective_susceptibility(&self, omega: f64) -> Result<Complex64> {
        let (gamma_eff, omega_eff) = self.backaction(omega)?;
        let det = (omega_eff * omega_eff - omega * omega).powi(2);
        let denom = Complex64::new(det, -(gamma_eff * omega).powi(2));
        Ok(self.gamma_m / denom)
    }

    /// Thermal force spectrum referred to displacement,
    /// S_th = X_gs^2 gamma_m (2 k_B T / (hbar Omega_0)) = 2 gamma_m k_B T / (m Omega_0^2)
    /// (m^2/s). Valid deep in the classical regime k_B T / hbar >> Omega_0.
    pub fn thermal_force_spectrum(&self) -> f64 {
        let xgs_sq = HBAR / (self.mass * self.omega0);
        xgs_sq * self.gamma_m * 2.0 * K_B * self.bath_temp / (HBAR * self.omega0)
    }

    /// Squared modulus of the mechanical response,
    /// Omega_0^2 / ((Omega_eff(omega)^2 - omega^2)^2 + gamma_eff(omega)^2 omega^2) (s^2).
    pub fn response_mod_sq(&self, omega: f64) -> f64 {
        let gamma_eff = self.gamma_eff(omega);
        let omega_eff_sq = self.omega_eff_sq(omega);
        let denom = (omega_eff_sq - omega * omega).powi(2) + (gamma_eff * omega).powi(2);
        self.omega0 * self.omega0 / denom
    }

    /// Displacement noise power spectrum S_xx(omega) = |chi|^2 (S_th + S_rp)
    /// (m^2 s, symmetric in omega; <x^2> = (1/pi) integral over omega > 0).
    pub fn thermal_psd(&self, omega: f64) -> f64 {
        self.response_mod_sq(omega) * (self.thermal_force_spectrum() + self.s_rp)
    }

    /// Detected heterodyne spectrum kappa zeta_c^2 alpha_c^2 |chi_c + chi_c*|^2 S_xx.
    pub fn heterodyne_psd(&self, zeta_c: f64, alpha_c: f64, omega: f64) -> f64 {
        self.kappa
            * zeta_c.powi(2)
            * alpha_c.powi(2)
            * heterodyne_transfer(self.kappa, self.detuning, omega)
            * self.thermal_psd(omega)
    }

    /// Frequency at which S_xx peaks, refined by golden-section search.
    pub fn spectrum_peak(&self) -> Result<f64> {
        // Coarse scan first: the optical spring can move the peak well away
        // from Omega_0.
        let lo = 0.05 * self.omega0;
        let hi = 3.0 * self.omega0 + self.kappa;
        let n = 2000;
        let mut best = (lo, self.thermal_psd(lo));
        for i in 0..=n {
            let w = lo + (hi - lo) * i as f64 / n as f64;
            let v = self.thermal_psd(w);
            if v > best.1 {
                best = (w, v);
            }
        }
        let step = (hi - lo) / n as f64;
        let (mut a, mut b) = (best.0 - step, best.0 + step);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..80 {
            let c = b - inv_phi * (b - a);
            let d = a + inv_phi * (b - a);
            if self.thermal_psd(c) > self.thermal_psd(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let peak = 0.5 * (a + b);
        if !(peak > 0.0) {
            return Err(Error::NoResonance("spectrum peak search collapsed to zero".to_string()));
        }
        Ok(peak)
    }

    /// Effective mode temperature by equipartition over the full spectrum:
    /// T_eff = (m Omega_fit^2 / k_B) (1/pi) integral of S_xx over omega > 0,
    /// with Omega_fit the resonance of S_xx.
    pub fn effective_temperature(&self) -> Result<f64> {
        let omega_fit = self.spectrum_peak()?;
        let upper = self.omega0 + 50.0 * self.kappa;
        let gamma_here = self.gamma_eff(omega_fit).abs().max(1e-3 * self.omega0);
        let breaks = [
            0.5 * omega_fit,
            omega_fit - 5.0 * gamma_here,
            omega_fit,
            omega_fit + 5.0 * gamma_here,
            2.0 * omega_fit,
        ];
        let area = quadrature::integrate(|w| self.thermal_psd(w), 0.0, upper, 1e-6, &breaks)?;
        Ok(self.mass * omega_fit * omega_fit / K_B * area / PI)
    }

    /// Displacement spectrum sampled on an angular-frequency grid.
    pub fn spectrum(&self, omega: &[f64]) -> Result<SpectrumModel> {
        let values = omega.iter().map(|&w| self.thermal_psd(w)).collect();
        SpectrumModel::new(omega.to_vec(), values, SpectrumKind::Displacement)
    }
}

/// Scattering rates into the Stokes (A+) and anti-Stokes (A-) sidebands and
/// the net cooling rate Gamma = A- - A+ (all rad/s).
pub fn sideband_rates(coupling: f64, kappa: f64, detuning: f64, omega0: f64) -> (f64, f64, f64) {
    let g2 = coupling * coupling;
    let half = kappa / 2.0;
    let a_plus = 0.25 * g2 * kappa / (half * half + (detuning + omega0).powi(2));
    let a_minus = 0.25 * g2 * kappa / (half * half + (detuning - omega0).powi(2));
    (a_plus, a_minus, a_minus - a_plus)
}

/// Cavity filter applied to the mechanical signal in heterodyne detection,
/// |chi_c(omega) + chi_c*(-omega)|^2 with chi_c(omega) = 1/(kappa/2 - i(omega - Delta)).
pub fn heterodyne_transfer(kappa: f64, detuning: f64, omega: f64) -> f64 {
    let chi = |w: f64| Complex64::new(kappa / 2.0, -(w - detuning)).inv();
    (chi(omega) + chi(-omega).conj()).norm_sqr()
}

/// Maximum of gamma_eff(Omega_0) - gamma_m over detunings in
/// [delta_lo, delta_hi]; returns (best detuning, broadening in rad/s).
pub fn max_linewidth_broadening(
    base: &BackactionModel,
    delta_lo: f64,
    delta_hi: f64,
) -> (f64, f64) {
    let broadening =
        |d: f64| base.with_detuning(d).gamma_eff(base.omega0) - base.gamma_m;
    let n = 400;
    let mut best = (delta_lo, broadening(delta_lo));
    for i in 0..=n {
        let d = delta_lo + (delta_hi - delta_lo) * i as f64 / n as f64;
        let v = broadening(d);
        if v > best.1 {
            best = (d, v);
        }
    }
    let step = (delta_hi - delta_lo) / n as f64;
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..70 {
        let c = b - inv_phi * (b - a);
        let d = a + inv_phi * (b - a);
        if broadening(c) > broadening(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let d_star = 0.5 * (a + b);
    (d_star, broadening(d_star))
}

/// Tag for what a spectrum's values measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    /// Displacement PSD, m^2/(rad/s).
    Displacement,
    /// Detector-signal PSD, arbitrary units squared per (rad/s).
    Heterodyne,
}

/// A spectrum on a strictly increasing angular-frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumModel {
    /// Angular frequency grid (rad/s), strictly increasing.
    pub omega: Vec<f64>,
    /// Spectral values, all >= 0.
    pub values: Vec<f64>,
    pub kind: SpectrumKind,
}

impl SpectrumModel {
    pub fn new(omega: Vec<f64>, values: Vec<f64>, kind: SpectrumKind) -> Result<Self> {
        if omega.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} grid points but {} values",
                omega.len(),
                values.len()
            )));
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("frequency grid must be strictly increasing".to_string()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("spectrum values must be finite and >= 0".to_string()));
        }
        Ok(Self { omega, values, kind })
    }
}
