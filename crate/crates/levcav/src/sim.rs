//! Time-domain Langevin simulation of the particle coupled to the control
//! field, linearized about the trap steady state.
//!
//! The mechanical pair (x, p) advances with a semi-implicit Euler-Maruyama
//! step driven by a Gaussian thermal force of spectral density
//! 2 m gamma_m k_B T. The intracavity field fluctuation a_c relaxes at
//! kappa/2 on a timescale comparable to the mechanical period, so it advances
//! with its exact exponential propagator, treating x as piecewise linear
//! within a step. The backaction force on the particle is
//! 2 hbar (g/X_gs) Re(a_c).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::constants::{HBAR, K_B};
use crate::dynamics::BackactionModel;
use crate::{Error, Result};

/// Integration and recording settings for one stochastic run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Integrator step (s).
    pub dt: f64,
    /// Recorded (post-transient) simulated time (s).
    pub duration: f64,
    /// RNG seed; identical seeds reproduce identical traces bit for bit.
    pub seed: u64,
    /// Bath temperature driving the thermal force (K); 0 switches noise off.
    pub bath_temp: f64,
    /// Keep every n-th sample in the output.
    pub record_decimation: usize,
    /// Discarded settling time before recording starts (s).
    pub transient: f64,
    /// Optional white noise driving the cavity field (sqrt photons), kept as
    /// an injection point for laser/vacuum noise. Default 0.
    pub field_noise: f64,
    /// Initial displacement (m), for ring-down runs.
    pub initial_displacement: f64,
}

impl SimConfig {
    /// Defaults for a model: 50 samples per fastest period, half a second of
    /// data, a 10/gamma_m transient.
    pub fn for_model(model: &BackactionModel) -> Self {
        let fastest = model.omega0.max(model.kappa) / (2.0 * std::f64::consts::PI);
        Self {
            dt: 1.0 / (50.0 * fastest),
            duration: 0.5,
            seed: 1,
            bath_temp: model.bath_temp,
            record_decimation: 1,
            transient: 10.0 / model.gamma_m,
            field_noise: 0.0,
            initial_displacement: 0.0,
        }
    }
}

/// Recorded trajectory: position and the control-field quadratures on a
/// uniform time grid, plus any heterodyne trace synthesized from them.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Recorded sample spacing (s).
    pub dt: f64,
    /// Particle displacement from equilibrium (m).
    pub x: Vec<f64>,
    /// Control-field fluctuation quadrature Re(a_c) (sqrt photons).
    pub re_a: Vec<f64>,
    /// Control-field fluctuation quadrature Im(a_c) (sqrt photons).
    pub im_a: Vec<f64>,
    /// Seed that produced the trace.
    pub seed: u64,
    /// Non-fatal conditions noticed during the run.
    pub warnings: Vec<String>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.dt
    }

    /// Sample variance of the displacement.
    pub fn variance(&self) -> f64 {
        let mean = self.x.iter().sum::<f64>() / self.x.len() as f64;
        self.x.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / self.x.len() as f64
    }
}

/// Run the linearized Langevin dynamics for `model` and record the particle
/// trajectory and field quadratures.
pub fn simulate(sim: &SimConfig, model: &BackactionModel) -> Result<TimeSeries> {
    if !(sim.dt > 0.0 && sim.duration > 0.0) {
        return Err(Error::invalid("dt and duration must be positive".to_string()));
    }
    if sim.record_decimation == 0 {
        return Err(Error::invalid("record_decimation must be >= 1".to_string()));
    }
    if !(sim.bath_temp >= 0.0) {
        return Err(Error::invalid("bath temperature must be >= 0".to_string()));
    }
    let cycles_per_step = sim.dt * model.omega0 / (2.0 * std::f64::consts::PI);
    if cycles_per_step >= 0.05 {
        return Err(Error::invalid(format!(
            "dt = {} s undersamples the oscillator: {:.3} cycles per step (limit 0.05)",
            sim.dt, cycles_per_step
        )));
    }

    let mut warnings = Vec::new();
    if sim.duration < 100.0 / model.gamma_m {
        warnings.push(format!(
            "duration {} s is below 100/gamma_m = {:.3e} s; spectral estimates will be noisy",
            sim.duration,
            100.0 / model.gamma_m
        ));
    }

    let m = model.mass;
    let omega0_sq = model.omega0 * model.omega0;
    let xgs = (HBAR / (m * model.omega0)).sqrt();
    let g_per_meter = model.coupling / xgs;
    let kick = (2.0 * m * model.gamma_m * K_B * sim.bath_temp * sim.dt).sqrt();

    // Exact one-step propagator of da/dt = -(kappa/2 + i Delta) a + i G x
    // with x linear in t across the step.
    let lam = Complex64::new(model.kappa / 2.0, model.detuning);
    let decay = (-lam * sim.dt).exp();
    let c0 = (Complex64::new(1.0, 0.0) - decay) / lam;
    let c1 = (Complex64::new(sim.dt, 0.0) - c0) / lam;
    let drive = Complex64::new(0.0, g_per_meter);

    let thermal_x = if model.omega0 > 0.0 {
        (K_B * sim.bath_temp / (m * omega0_sq)).sqrt()
    } else {
        0.0
    };
    let amplitude_scale = thermal_x.max(sim.initial_displacement.abs());
    let divergence_limit = if amplitude_scale > 0.0 { 100.0 * amplitude_scale } else { f64::MAX };

    let transient_steps = (sim.transient / sim.dt).ceil() as usize;
    let record_steps = (sim.duration / sim.dt).ceil() as usize;
    let total_steps = transient_steps + record_steps;
    let capacity = record_steps / sim.record_decimation + 1;

    let mut rng = ChaCha12Rng::seed_from_u64(sim.seed);
    let normal = StandardNormal;
    let field_kick = sim.field_noise * (model.kappa * sim.dt).sqrt();

    let mut x = sim.initial_displacement;
    let mut p = 0.0;
    let mut a = Complex64::new(0.0, 0.0);

    let mut xs = Vec::with_capacity(capacity);
    let mut re_a = Vec::with_capacity(capacity);
    let mut im_a = Vec::with_capacity(capacity);

    for step in 0..total_steps {
        if step >= transient_steps && (step - transient_steps) % sim.record_decimation == 0 {
            xs.push(x);
            re_a.push(a.re);
            im_a.push(a.im);
        }

        let force = -m * omega0_sq * x - model.gamma_m * p + 2.0 * HBAR * g_per_meter * a.re;
        let noise: f64 = normal.sample(&mut rng);
        let p_next = p + sim.dt * force + kick * noise;
        let x_next = x + sim.dt * p_next / m;

        a = decay * a + drive * (x * c0 + (x_next - x) * (c1 / sim.dt));
        if field_kick > 0.0 {
            let n1: f64 = normal.sample(&mut rng);
            let n2: f64 = normal.sample(&mut rng);
            a += field_kick * Complex64::new(n1, n2) / 2f64.sqrt();
        }

        p = p_next;
        x = x_next;

        if x.abs() > divergence_limit {
            return Err(Error::Diverged {
                time_s: step as f64 * sim.dt,
                x_m: x,
                limit_m: divergence_limit,
            });
        }
    }

    Ok(TimeSeries {
        dt: sim.dt * sim.record_decimation as f64,
        x: xs,
        re_a,
        im_a,
        seed: sim.seed,
        warnings,
    })
}

/// Homodyne detector trace from the recorded field quadratures:
/// s_opt(t) = sqrt(kappa) (a_c e^{i theta} + c.c.), the cavity output beat
/// against a unit local oscillator at quadrature angle `theta` (pi/2 reads
/// the phase quadrature). Optional white detection noise of RMS
/// `noise_level` per sample is drawn from `noise_seed`.
pub fn synth_heterodyne(
    ts: &TimeSeries,
    kappa: f64,
    theta: f64,
    noise_level: f64,
    noise_seed: u64,
) -> Vec<f64> {
    let rot = Complex64::new(0.0, theta).exp();
    let root_kappa = kappa.sqrt();
    let mut out: Vec<f64> = ts
        .re_a
        .iter()
        .zip(&ts.im_a)
        .map(|(&re, &im)| 2.0 * root_kappa * (Complex64::new(re, im) * rot).re)
        .collect();
    if noise_level > 0.0 {
        let mut rng = ChaCha12Rng::seed_from_u64(noise_seed);
        let normal = StandardNormal;
        for s in &mut out {
            let n: f64 = normal.sample(&mut rng);
            *s += noise_level * n;
        }
    }
    out
}
