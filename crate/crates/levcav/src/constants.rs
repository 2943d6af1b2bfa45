//! Physical constants (CODATA 2018). Fixed at compile time, never
//! configurable per run.

/// Speed of light in vacuum (m/s).
pub const C: f64 = 299_792_458.0;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;
/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;

/// The constants bundled as a value, for code that wants to pass them around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Speed of light (m/s).
    pub c: f64,
    /// Reduced Planck constant (J s).
    pub hbar: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    c: C,
    hbar: HBAR,
    k_b: K_B,
    eps0: EPS0,
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        CODATA
    }
}
