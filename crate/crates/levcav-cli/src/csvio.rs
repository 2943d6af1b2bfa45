//! CSV files with `#`-prefixed metadata lines, a header row, and plain
//! decimal-point numbers. Frequencies are stored in Hz; the writer uses a
//! fixed scientific format so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use levcav::analysis::{MeasuredSpectrum, SpectrumMeta};
use levcav::position::CalibPoint;

use crate::error::{CliError, CliResult};

pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.12e}")
    }
}

/// Serialize a spectrum: metadata lines, then `freq_hz,psd` rows.
pub fn spectrum_to_csv(spec: &MeasuredSpectrum, config_hash: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# levcav spectrum");
    let _ = writeln!(out, "# config_sha256={config_hash}");
    let _ = writeln!(out, "# label={}", spec.meta.label);
    let _ = writeln!(out, "# detuning_hz={}", format_value(spec.meta.detuning / (2.0 * std::f64::consts::PI)));
    let _ = writeln!(out, "# mu={}", format_value(spec.meta.mu));
    let _ = writeln!(out, "# pressure_pa={}", format_value(spec.meta.pressure));
    let _ = writeln!(out, "# kappa_hz={}", format_value(spec.meta.kappa / (2.0 * std::f64::consts::PI)));
    let _ = writeln!(out, "# units=freq_hz:Hz,psd:arb^2/Hz");
    let _ = writeln!(out, "freq_hz,psd");
    for (f, v) in spec.freq_hz.iter().zip(&spec.nps) {
        let _ = writeln!(out, "{},{}", format_value(*f), format_value(*v));
    }
    out
}

/// Parse a spectrum written by [`spectrum_to_csv`].
pub fn spectrum_from_csv(text: &str, fallback_label: &str) -> CliResult<MeasuredSpectrum> {
    let mut meta = SpectrumMeta {
        detuning: f64::NAN,
        mu: f64::NAN,
        pressure: f64::NAN,
        kappa: f64::NAN,
        label: fallback_label.to_string(),
    };
    let mut freq = Vec::new();
    let mut psd = Vec::new();
    let mut header_seen = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some((key, value)) = rest.split_once('=') {
                match key.trim() {
                    "label" => meta.label = value.trim().to_string(),
                    "detuning_hz" => {
                        meta.detuning = parse_f64(value, lineno)? * 2.0 * std::f64::consts::PI;
                    }
                    "mu" => meta.mu = parse_f64(value, lineno)?,
                    "pressure_pa" => meta.pressure = parse_f64(value, lineno)?,
                    "kappa_hz" => {
                        meta.kappa = parse_f64(value, lineno)? * 2.0 * std::f64::consts::PI;
                    }
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            if !line.starts_with("freq_hz") {
                return Err(CliError::config(format!(
                    "spectrum CSV line {}: expected header 'freq_hz,psd', got '{line}'",
                    lineno + 1
                )));
            }
            header_seen = true;
            continue;
        }
        let mut cols = line.split(',');
        let (Some(f), Some(v)) = (cols.next(), cols.next()) else {
            return Err(CliError::config(format!("spectrum CSV line {}: need 2 columns", lineno + 1)));
        };
        freq.push(parse_f64(f, lineno)?);
        psd.push(parse_f64(v, lineno)?);
    }
    MeasuredSpectrum::new(freq, psd, meta).map_err(CliError::numerical)
}

/// Serialize a simulated record: `t_s,x_m,q1,q2,s_opt`.
pub fn timeseries_to_csv(
    ts: &levcav::TimeSeries,
    s_opt: &[f64],
    config_hash: &str,
    label: &str,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# levcav timeseries");
    let _ = writeln!(out, "# config_sha256={config_hash}");
    let _ = writeln!(out, "# label={label}");
    let _ = writeln!(out, "# seed={}", ts.seed);
    let _ = writeln!(out, "# dt_s={}", format_value(ts.dt));
    for w in &ts.warnings {
        let _ = writeln!(out, "# warning={w}");
    }
    let _ = writeln!(out, "# units=t_s:s,x_m:m,q1:sqrt_photon,q2:sqrt_photon,s_opt:arb");
    let _ = writeln!(out, "t_s,x_m,q1,q2,s_opt");
    for i in 0..ts.len() {
        let s = s_opt.get(i).copied().unwrap_or(0.0);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_value(ts.time(i)),
            format_value(ts.x[i]),
            format_value(ts.re_a[i]),
            format_value(ts.im_a[i]),
            format_value(s)
        );
    }
    out
}

/// Read camera calibration points: `zeta_px,omega0_hz,sigma_hz` rows.
pub fn calib_points_from_csv(path: &Path) -> CliResult<Vec<CalibPoint>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
    let mut points = Vec::new();
    let mut header_seen = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen && line.starts_with("zeta_px") {
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 2 {
            return Err(CliError::config(format!(
                "calibration CSV line {}: need zeta_px,omega0_hz[,sigma_hz]",
                lineno + 1
            )));
        }
        let zeta = parse_f64(cols[0], lineno)?;
        let omega = parse_f64(cols[1], lineno)? * 2.0 * std::f64::consts::PI;
        let sigma = if cols.len() > 2 {
            parse_f64(cols[2], lineno)? * 2.0 * std::f64::consts::PI
        } else {
            0.0
        };
        points.push(CalibPoint::new(zeta, omega, sigma).map_err(CliError::numerical)?);
    }
    Ok(points)
}

fn parse_f64(s: &str, lineno: usize) -> CliResult<f64> {
    s.trim()
        .parse()
        .map_err(|e| CliError::config(format!("CSV line {}: bad number '{s}': {e}", lineno + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_roundtrip() {
        let meta = SpectrumMeta {
            detuning: 2.0 * std::f64::consts::PI * 125e3,
            mu: 0.4,
            pressure: 400.0,
            kappa: 2.0 * std::f64::consts::PI * 180e3,
            label: "roundtrip".to_string(),
        };
        let spec = MeasuredSpectrum::new(
            vec![1.0, 2.0, 3.5],
            vec![0.1, 0.0, 4.25e-7],
            meta,
        )
        .unwrap();
        let text = spectrum_to_csv(&spec, "deadbeef");
        let back = spectrum_from_csv(&text, "x").unwrap();
        assert_eq!(back.freq_hz, spec.freq_hz);
        assert_eq!(back.nps, spec.nps);
        assert_eq!(back.meta.label, "roundtrip");
        assert!((back.meta.detuning - spec.meta.detuning).abs() < 1e-6);
        assert!((back.meta.kappa - spec.meta.kappa).abs() < 1e-6);
    }
}
