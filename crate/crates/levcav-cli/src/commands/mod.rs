pub mod analyze;
pub mod calibrate_position;
pub mod derive;
pub mod gas;
pub mod simulate;
pub mod sweep;

use std::path::Path;

use crate::config::{self, Resolved};
use crate::error::{CliError, CliResult};
use crate::manifest::sha256_hex;

/// Read the config file, remembering the hash of its exact bytes.
pub fn load_config(path: &Path) -> CliResult<(Resolved, String)> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::io(&format!("reading config {}", path.display()), e))?;
    let hash = sha256_hex(&bytes);
    let resolved = config::load(path)?;
    Ok((resolved, hash))
}

/// Stable file-name fragment for a detuning in kHz.
pub fn delta_tag(detuning: f64) -> String {
    format!("{:+09.2}khz", detuning / (2.0 * std::f64::consts::PI) / 1e3)
}

/// Stable file-name fragment for a power ratio.
pub fn mu_tag(mu: f64) -> String {
    format!("mu{mu:.3}")
}
