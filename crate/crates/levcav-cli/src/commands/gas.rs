//! `levcav gas`: pressure-dependent damping curve and inverse lookups.

use std::f64::consts::PI;
use std::fmt::Write as _;

use levcav::gas;

use crate::csvio;
use crate::error::{CliError, CliResult};
use crate::manifest::OutputWriter;
use crate::CommonArgs;

const MBAR: f64 = 100.0;

pub fn run(common: &CommonArgs) -> CliResult<()> {
    let (resolved, hash) = super::load_config(&common.config)?;
    let sweep = &resolved.config.sweep;
    let [lo, hi] = sweep.pressure_range_mbar;
    if !(lo > 0.0 && hi > lo) {
        return Err(CliError::config(
            "sweep.pressure_range_mbar must be positive and increasing".to_string(),
        ));
    }
    let n = sweep.pressure_points.max(2);
    let stokes = gas::stokes_damping(&resolved.gas, &resolved.particle);

    let mut curve = String::new();
    let _ = writeln!(curve, "# levcav gas damping curve");
    let _ = writeln!(curve, "# config_sha256={hash}");
    let _ = writeln!(curve, "# stokes_ceiling_hz={}", csvio::format_value(stokes / (2.0 * PI)));
    let _ = writeln!(curve, "# units=pressure_mbar:mbar,gamma0_hz:Hz,knudsen:1");
    let _ = writeln!(curve, "pressure_mbar,gamma0_hz,knudsen");
    for i in 0..n {
        let pressure_mbar = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
        let spec = resolved.gas.with_pressure(pressure_mbar * MBAR);
        let gamma = gas::gas_damping(&spec, &resolved.particle);
        let kn = gas::knudsen_number(&spec, &resolved.particle);
        let _ = writeln!(
            curve,
            "{},{},{}",
            csvio::format_value(pressure_mbar),
            csvio::format_value(gamma / (2.0 * PI)),
            csvio::format_value(kn)
        );
    }

    let mut writer = OutputWriter::new(&common.out, "gas", hash.clone(), Vec::new(), common.overwrite)?;
    writer.write("gas_curve.csv", &curve)?;

    if !sweep.lookup_gamma0_hz.is_empty() {
        let mut lookup = String::new();
        let _ = writeln!(lookup, "# levcav inverse damping lookups");
        let _ = writeln!(lookup, "# config_sha256={hash}");
        let _ = writeln!(lookup, "gamma0_hz,pressure_mbar,status");
        for &target_hz in &sweep.lookup_gamma0_hz {
            let target = 2.0 * PI * target_hz;
            match gas::pressure_from_damping(&resolved.gas, &resolved.particle, target) {
                Ok(pa) => {
                    let _ = writeln!(
                        lookup,
                        "{},{},ok",
                        csvio::format_value(target_hz),
                        csvio::format_value(pa / MBAR)
                    );
                }
                Err(e) => {
                    let _ = writeln!(
                        lookup,
                        "{},,{}",
                        csvio::format_value(target_hz),
                        e.to_string().replace(',', ";")
                    );
                }
            }
        }
        writer.write("gas_lookup.csv", &lookup)?;
    }
    writer.finish()?;
    println!(
        "gas: {} curve points over [{lo}, {hi}] mbar -> {}",
        n,
        common.out.display()
    );
    Ok(())
}
