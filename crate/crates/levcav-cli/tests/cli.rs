//! End-to-end command tests, including the byte-level determinism gate:
//! identical config and seed must reproduce identical artifacts.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn levcav() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levcav"))
}

fn experiment_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("experiment.toml");
    let text = r#"
[particle]
radius_nm = 169.0
density_kg_m3 = 1950.0
dielectric_const = 2.1

[cavity]
length_mm = 10.97
finesse = 76000.0
wavelength_nm = 1064.0
waist_center_um = 41.0

[gas]
pressure_mbar = 4.0

[drive]
mu = 0.4
detuning_khz = 125.0
x0_mm = -1.56
bare_frequency_khz = 165.0
gamma_m_hz = 7200.0

[sim]
duration_s = 0.12
seeds = [11]
decimation = 8
segment_length = 4096
overlap = 0.5
window = "hann"

[sweep]
detuning_khz = [25.0, 75.0, 105.0, 125.0, 145.0, 175.0]
grid_khz = [20.0, 420.0]
grid_points = 1200
pressure_range_mbar = [0.01, 1e9]
pressure_points = 120
lookup_gamma0_hz = [1200.0]

[analysis]
window_khz = [100.0, 150.0]
fit_band_khz = [40.0, 420.0]
reference_temperature_k = 293.0
reference_detuning_khz = 1.0
"#;
    std::fs::write(&path, text).unwrap();
    path
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawning levcav");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json_at<'a>(value: &'a serde_json::Value, path: &[&str]) -> &'a serde_json::Value {
    let mut v = value;
    for key in path {
        v = &v[key];
    }
    v
}

#[test]
fn derive_reports_reference_values_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let config = experiment_config(tmp.path());
    let out1 = tmp.path().join("a");
    let out2 = tmp.path().join("b");
    run_ok(levcav().args(["derive", "--config"]).arg(&config).arg("--out").arg(&out1));
    run_ok(levcav().args(["derive", "--config"]).arg(&config).arg("--out").arg(&out2));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("derive.json")).unwrap()).unwrap();
    let kappa = json_at(&report, &["cavity", "kappa_hz"]).as_f64().unwrap();
    assert!((kappa / 180e3 - 1.0).abs() < 0.01, "kappa_hz = {kappa}");
    let u0 = json_at(&report, &["trap", "u0_hz"]).as_f64().unwrap();
    assert!((u0 / 145e3 - 1.0).abs() < 0.05, "u0_hz = {u0}");
    let g0 = json_at(&report, &["mu_zero", "g0_hz"]).as_f64().unwrap();
    assert!((g0 / 1.2 - 1.0).abs() < 0.15, "mu->0 g0_hz = {g0}");
    let coupling = json_at(&report, &["trap", "coupling_hz"]).as_f64().unwrap();
    assert!((coupling / 66e3 - 1.0).abs() < 0.10, "coupling_hz = {coupling}");
    let fsr = json_at(&report, &["cavity", "fsr_hz"]).as_f64().unwrap();
    assert!((fsr / 13.67e9 - 1.0).abs() < 1e-3, "fsr_hz = {fsr}");

    // Byte-identical JSON across reruns.
    let a = std::fs::read(out1.join("derive.json")).unwrap();
    let b = std::fs::read(out2.join("derive.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn schema_violation_exits_2_with_json_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    let text = std::fs::read_to_string(experiment_config(tmp.path())).unwrap();
    std::fs::write(&config, text.replace("mu = 0.4", "mu = 0.4\nmystery_knob = 3")).unwrap();
    let out = levcav()
        .args(["derive", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(tmp.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let err: serde_json::Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("mystery_knob"));
}

#[test]
fn refusing_to_overwrite_without_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let config = experiment_config(tmp.path());
    let out = tmp.path().join("o");
    run_ok(levcav().args(["derive", "--config"]).arg(&config).arg("--out").arg(&out));
    let second = levcav()
        .args(["derive", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(second.status.code(), Some(2));
    run_ok(
        levcav()
            .args(["derive", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .arg("--overwrite"),
    );
}

#[test]
fn sweep_summary_shows_backaction_and_flags_unstable_points() {
    let tmp = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(experiment_config(tmp.path())).unwrap();
    let config = tmp.path().join("sweep.toml");
    std::fs::write(
        &config,
        base.replace("detuning_khz = [25.0", "mu_values = [0.0, 0.4]\ndetuning_khz = [25.0"),
    )
    .unwrap();
    let out = tmp.path().join("sweep");
    run_ok(levcav().args(["sweep", "--config"]).arg(&config).arg("--out").arg(&out));
    let summary = std::fs::read_to_string(out.join("sweep_summary.csv")).unwrap();
    let rows: Vec<Vec<String>> = summary
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("mu,"))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    // mu = 0: no control field, flat Omega_eff(Delta) = Omega_0 rows.
    let flat: Vec<f64> = rows
        .iter()
        .filter(|r| r[0].parse::<f64>().unwrap() == 0.0)
        .map(|r| r[2].parse().unwrap())
        .collect();
    assert_eq!(flat.len(), 6);
    for w in flat.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 1e-12, "mu = 0 rows must be flat");
    }
    // mu = 0.4: gamma_eff peaks near Delta = Omega_0 and the maximum
    // broadening reaches the measured scale (2 pi x 49 kHz within 20 %).
    let broadening: Vec<f64> = rows
        .iter()
        .filter(|r| r[0].parse::<f64>().unwrap() > 0.0)
        .map(|r| r[4].parse().unwrap())
        .collect();
    let max_b = broadening.iter().cloned().fold(0.0, f64::max);
    assert!((max_b / 49e3 - 1.0).abs() < 0.2, "max broadening {max_b} Hz");
    // Theory spectra files exist for every row.
    let n_theory = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref().unwrap().file_name().to_string_lossy().starts_with("theory_")
        })
        .count();
    assert_eq!(n_theory, 12);
    // All points stable at these detunings.
    assert!(rows.iter().all(|r| r[6] == "true"));
}

#[test]
fn gas_curve_monotone_with_continuum_plateau() {
    let tmp = tempfile::tempdir().unwrap();
    let config = experiment_config(tmp.path());
    let out = tmp.path().join("gas");
    run_ok(levcav().args(["gas", "--config"]).arg(&config).arg("--out").arg(&out));
    let curve = std::fs::read_to_string(out.join("gas_curve.csv")).unwrap();
    let stokes_hz: f64 = curve
        .lines()
        .find(|l| l.starts_with("# stokes_ceiling_hz="))
        .unwrap()
        .split('=')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    let gammas: Vec<f64> = curve
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("pressure_mbar"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(gammas.windows(2).all(|w| w[1] > w[0]), "curve must increase");
    // Top of the range sits deep in the continuum: plateau at Stokes drag.
    let last = gammas.last().unwrap();
    assert!((last / stokes_hz - 1.0).abs() < 1e-6, "plateau {last} vs Stokes {stokes_hz}");
    // Inverse lookup reproduces the requested damping.
    let lookup = std::fs::read_to_string(out.join("gas_lookup.csv")).unwrap();
    let row = lookup.lines().last().unwrap();
    assert!(row.ends_with("ok"), "lookup row: {row}");
}

#[test]
fn calibrate_position_fits_and_rejects_degenerate_geometry() {
    let tmp = tempfile::tempdir().unwrap();
    let config = experiment_config(tmp.path());

    // Synthetic points from the frequency-position law with x_R = 4.963 mm.
    let (zeta_c, scale_m, omega_c_hz) = (481.0, 13.0e-6, 173e3);
    let x_r = 4.9634e-3;
    let mut csv = String::from("zeta_px,omega0_hz,sigma_hz\n");
    for i in 0..12 {
        let zeta = 160.0 + 55.0 * i as f64;
        let freq = omega_c_hz / (1.0 + ((zeta - zeta_c) * scale_m / x_r).powi(2)).sqrt();
        csv.push_str(&format!("{zeta},{freq},{}\n", 0.005 * freq));
    }
    let points = tmp.path().join("points.csv");
    std::fs::write(&points, &csv).unwrap();

    let out = tmp.path().join("cal");
    // Report the position of the pixel 120 px below center: 1.56 mm.
    let pixel = zeta_c - 1.56e-3 / scale_m;
    run_ok(
        levcav()
            .args(["calibrate-position", "--config"])
            .arg(&config)
            .arg("--points")
            .arg(&points)
            .arg("--out")
            .arg(&out)
            .arg("--pixel")
            .arg(format!("{pixel}")),
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("camera_scale.json")).unwrap())
            .unwrap();
    let fitted_scale = report["scale_mm_per_px"].as_f64().unwrap().abs();
    assert!((fitted_scale / (scale_m * 1e3) - 1.0).abs() < 0.02, "scale {fitted_scale} mm/px");
    let x0 = report["position"]["x0_mm"].as_f64().unwrap();
    assert!((x0.abs() / 1.56 - 1.0).abs() < 0.02, "x0 = {x0} mm");
    let x0_prime = report["position"]["x0_prime_mm"].as_f64().unwrap();
    assert!((x0_prime / 3.925 - 1.0).abs() < 0.02, "x0' = {x0_prime} mm");

    // Clustered one-sided points cannot constrain the scale: exit 3.
    let mut bad = String::from("zeta_px,omega0_hz\n");
    for i in 0..8 {
        bad.push_str(&format!("{},{omega_c_hz}\n", 700.0 + 0.1 * i as f64));
    }
    let bad_points = tmp.path().join("bad_points.csv");
    std::fs::write(&bad_points, &bad).unwrap();
    let fail = levcav()
        .args(["calibrate-position", "--config"])
        .arg(&config)
        .arg("--points")
        .arg(&bad_points)
        .arg("--out")
        .arg(tmp.path().join("cal2"))
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(3));
}

#[test]
fn simulate_analyze_pipeline_with_byte_identical_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let config = experiment_config(tmp.path());

    let run_pipeline = |dir: &Path| {
        run_ok(levcav().args(["simulate", "--config"]).arg(&config).arg("--out").arg(dir));
        run_ok(
            levcav()
                .args(["analyze", "--config"])
                .arg(&config)
                .arg("--out")
                .arg(dir)
                .arg("--data")
                .arg(dir)
                .arg("--overwrite"),
        );
    };
    let out1 = tmp.path().join("run1");
    let out2 = tmp.path().join("run2");
    run_pipeline(&out1);
    run_pipeline(&out2);

    // Determinism: every artifact byte-identical between reruns.
    let mut names: Vec<String> = std::fs::read_dir(&out1)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.len() > 10);
    for name in &names {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between identical runs");
    }

    // Physics of the analyzed run.
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("analysis.json")).unwrap())
            .unwrap();
    let group = &report["groups"][0];
    // Reference run reads back the bath temperature.
    let spectra = group["spectra"].as_array().unwrap();
    let reference = spectra
        .iter()
        .find(|s| s["delta_hz"].as_f64().unwrap().abs() < 1.5e3)
        .expect("reference row present");
    let t_ref = reference["teff_star_k"].as_f64().unwrap();
    assert!((t_ref / 293.0 - 1.0).abs() < 0.05, "reference T* = {t_ref} K");
    // Windowed cooled temperature well below room temperature.
    let mean = group["teff_window_mean_k"].as_f64().unwrap();
    assert!(mean < 100.0 && mean > 20.0, "windowed T_eff = {mean} K");
    // Optical-spring sweep fit recovers the coupling of the configured chain.
    let sweep = &group["sweep_fit"];
    assert!(sweep["identifiable"].as_bool().unwrap());
    let g0nc = sweep["g0nc_hz"].as_f64().unwrap();
    let expected = {
        // Same chain the config resolves: coupling at mu = 0.4.
        let p = levcav::ParticleSpec::new(169e-9, 1950.0, 2.1).unwrap();
        let c = levcav::CavitySpec::new(10.97e-3, 76_000.0, 1064e-9, 41e-6).unwrap();
        let dc = levcav::params::derive_cavity(&c);
        let u0 = levcav::params::u0_at(&p, &c, -1.56e-3);
        let n_t = levcav::trap::photons_for_bare_frequency(&p, &dc, u0, 2.0 * PI * 165e3);
        let drive = levcav::DriveConfig::new(0.4, 2.0 * PI * 125e3, n_t).unwrap();
        levcav::trap::trap_state(&p, &c, 3.925e-3, &drive).unwrap().coupling() / (2.0 * PI)
    };
    assert!(
        (g0nc / expected - 1.0).abs() < 0.15,
        "sweep-fit coupling {g0nc} Hz vs chain {expected} Hz"
    );
}
