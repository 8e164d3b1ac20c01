//! Unit conversions.
//!
//! Everything internal is angular frequency in rad/ns and time in ns.
//! Experiments quote drive strengths as `f = Ω/2π` in MHz, so the
//! conversion is `Ω [rad/ns] = 2π × f [MHz] × 10⁻³`.

use std::f64::consts::TAU;

/// Convert a frequency quoted as `Ω/2π` in MHz to rad/ns.
pub fn mhz_to_rad_per_ns(f_mhz: f64) -> f64 {
    f_mhz * 1e-3 * TAU
}

/// Convert an angular frequency in rad/ns back to `Ω/2π` in MHz.
pub fn rad_per_ns_to_mhz(omega: f64) -> f64 {
    omega / TAU * 1e3
}
