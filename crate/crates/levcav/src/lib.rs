//! Cavity optomechanics of an optically levitated nanoparticle.
//!
//! A silica nanosphere is held in the standing wave of a driven Fabry-Perot
//! cavity. A second, weaker intracavity field ("control beam") on the adjacent
//! longitudinal mode couples linearly to the particle's axial motion and can
//! cool it through dynamical backaction. This crate models that system end to
//! end at desk scale:
//!
//! * [`params`]: particle/cavity specifications and derived statics
//!   (mass, polarizability, free spectral range, linewidth, mode geometry).
//! * [`trap`]: two-mode trap steady state: relative standing-wave phase,
//!   equilibrium displacement, trap frequency vs. power ratio, per-photon
//!   coupling rates, intracavity amplitudes.
//! * [`dynamics`]: frequency-domain model: effective damping and optical
//!   spring, thermal displacement spectrum, sideband rates, cavity filtering
//!   of the heterodyne signal, effective-temperature quadrature.
//! * [`gas`]: kinetic-gas-theory damping vs. pressure and its inverse.
//! * [`sim`]: time-domain Langevin simulation producing synthetic position
//!   traces and detector signals.
//! * [`welch`]: Welch power-spectral-density estimation.
//! * [`analysis`]: the measurement pipeline: background subtraction, cavity
//!   deconvolution, oscillator fits, equipartition calibration, detuning-sweep
//!   parameter estimation.
//! * [`position`]: camera-pixel-to-position calibration from the
//!   frequency-vs-position law.

pub mod analysis;
pub mod constants;
pub mod dynamics;
mod error;
pub mod fitting;
pub mod gas;
pub mod params;
pub mod position;
pub mod quadrature;
pub mod sim;
pub mod trap;
pub mod welch;

pub use error::{Error, Result};

pub use dynamics::{BackactionModel, SpectrumKind, SpectrumModel};
pub use params::{CavitySpec, DerivedCavity, ParticleSpec};
pub use sim::{SimConfig, TimeSeries};
pub use trap::{DriveConfig, TrapState};
pub use welch::PowerSpectrum;
