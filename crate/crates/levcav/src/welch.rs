//! Welch's method for one-sided power spectral density estimation: average
//! windowed periodograms over overlapping segments. Normalized so that
//! sum(PSD) * df equals the trace variance (exact for the rectangular
//! window).

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    fn coefficient(self, i: usize, n: usize) -> f64 {
        match self {
            Window::Rectangular => 1.0,
            Window::Hann => {
                let x = std::f64::consts::PI * i as f64 / n as f64;
                x.sin().powi(2)
            }
        }
    }
}

/// One-sided PSD on a uniform frequency grid in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    /// Frequency grid from 0 to Nyquist (Hz).
    pub freq_hz: Vec<f64>,
    /// Power spectral density (signal units squared per Hz).
    pub psd: Vec<f64>,
    /// Number of averaged segments.
    pub segments: usize,
    /// Sampling rate of the underlying trace (Hz).
    pub sample_rate: f64,
}

impl PowerSpectrum {
    /// Grid spacing (Hz).
    pub fn resolution(&self) -> f64 {
        self.freq_hz[1] - self.freq_hz[0]
    }

    /// Total power sum(PSD) * df.
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.resolution()
    }
}

/// Estimate the one-sided PSD of `trace` sampled at `sample_rate` Hz.
///
/// `overlap` is the fractional segment overlap in [0, 1). The trace mean is
/// removed before segmenting so the result integrates to the variance.
pub fn welch_psd(
    trace: &[f64],
    sample_rate: f64,
    segment_len: usize,
    overlap: f64,
    window: Window,
) -> Result<PowerSpectrum> {
    if trace.is_empty() {
        return Err(Error::invalid("cannot estimate a PSD from an empty trace".to_string()));
    }
    if segment_len < 2 || segment_len > trace.len() {
        return Err(Error::invalid(format!(
            "segment length {segment_len} incompatible with trace of {} samples",
            trace.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid(format!("overlap must be in [0, 1), got {overlap}")));
    }
    if !(sample_rate > 0.0) {
        return Err(Error::invalid("sample rate must be positive".to_string()));
    }

    let mean = trace.iter().sum::<f64>() / trace.len() as f64;
    let hop = ((segment_len as f64 * (1.0 - overlap)).round() as usize).max(1);
    let n_bins = segment_len / 2 + 1;

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(segment_len);
    let coeffs: Vec<f64> = (0..segment_len).map(|i| window.coefficient(i, segment_len)).collect();
    let window_power: f64 = coeffs.iter().map(|w| w * w).sum();

    let mut accum = vec![0.0; n_bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    let mut segments = 0usize;
    let mut start = 0usize;
    while start + segment_len <= trace.len() {
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex64::new((trace[start + i] - mean) * coeffs[i], 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in accum.iter_mut().enumerate() {
            *a += buf[k].norm_sqr();
        }
        segments += 1;
        start += hop;
    }

    let scale = 1.0 / (segments as f64 * sample_rate * window_power);
    let nyquist_bin = if segment_len % 2 == 0 { Some(n_bins - 1) } else { None };
    let psd: Vec<f64> = accum
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || Some(k) == nyquist_bin { 1.0 } else { 2.0 };
            one_sided * a * scale
        })
        .collect();
    let df = sample_rate / segment_len as f64;
    let freq_hz = (0..n_bins).map(|k| k as f64 * df).collect();

    Ok(PowerSpectrum { freq_hz, psd, segments, sample_rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn empty_trace_rejected() {
        assert!(welch_psd(&[], 1.0, 4, 0.0, Window::Rectangular).is_err());
        assert!(welch_psd(&[1.0, 2.0], 1.0, 8, 0.0, Window::Rectangular).is_err());
    }

    #[test]
    fn sinusoid_power_parseval() {
        // Amplitude A sinusoid integrates to A^2/2 of power.
        let fs = 10_000.0;
        let amp = 3.0;
        let f0 = 625.0; // integer number of periods per 1024-segment
        let trace: Vec<f64> = (0..16384)
            .map(|i| amp * (2.0 * std::f64::consts::PI * f0 * i as f64 / fs).sin())
            .collect();
        let ps = welch_psd(&trace, fs, 1024, 0.0, Window::Rectangular).unwrap();
        assert_relative_eq!(ps.total_power(), amp * amp / 2.0, max_relative = 0.01);
        // Peak bin sits at f0.
        let peak = ps.psd.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap();
        assert_relative_eq!(ps.freq_hz[peak.0], f0, max_relative = 1e-12);
    }

    #[test]
    fn white_noise_level_and_variance_parseval() {
        let fs = 2000.0;
        let sigma = 0.7;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let trace: Vec<f64> = (0..65536)
            .map(|_| sigma * rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let var = {
            let mean = trace.iter().sum::<f64>() / trace.len() as f64;
            trace.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / trace.len() as f64
        };
        let ps = welch_psd(&trace, fs, 512, 0.0, Window::Rectangular).unwrap();
        assert_relative_eq!(ps.total_power(), var, max_relative = 0.01);
        // Flat level sigma^2 / f_nyquist.
        let mid = ps.psd.len() / 2;
        let level: f64 = ps.psd[mid - 40..mid + 40].iter().sum::<f64>() / 80.0;
        assert_relative_eq!(level, sigma * sigma / (fs / 2.0), max_relative = 0.1);
    }

    #[test]
    fn hann_window_preserves_broadband_power() {
        let fs = 2000.0;
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let trace: Vec<f64> =
            (0..65536).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let ps = welch_psd(&trace, fs, 512, 0.5, Window::Hann).unwrap();
        assert_relative_eq!(ps.total_power(), 1.0, max_relative = 0.05);
        assert!(ps.segments > 200);
    }

    #[test]
    fn doubling_segments_halves_estimator_variance() {
        let fs = 1000.0;
        let seg = 512;
        let rel_var = |ps: &PowerSpectrum| {
            let bins = &ps.psd[1..ps.psd.len() - 1];
            let mean = bins.iter().sum::<f64>() / bins.len() as f64;
            bins.iter().map(|p| (p / mean - 1.0).powi(2)).sum::<f64>() / bins.len() as f64
        };
        // Average the ratio over a few independent realizations to beat the
        // variance of the variance estimate itself.
        let mut ratio_sum = 0.0;
        for seed in [29u64, 31, 37, 41] {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let long: Vec<f64> = (0..seg * 256)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let few = welch_psd(&long[..seg * 128], fs, seg, 0.0, Window::Rectangular).unwrap();
            let many = welch_psd(&long, fs, seg, 0.0, Window::Rectangular).unwrap();
            assert_eq!(many.segments, 2 * few.segments);
            ratio_sum += rel_var(&few) / rel_var(&many);
        }
        let ratio = ratio_sum / 4.0;
        assert!((ratio - 2.0).abs() < 0.4, "variance ratio {ratio}");
    }
}
