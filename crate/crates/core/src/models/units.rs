//! Physical constants and the SI ↔ internal conversion boundary.
//!
//! Internal units: ħ = 1, angular frequencies in krad/s, time in ms.

/// Reduced Planck constant [J·s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Bohr magneton [J/T].
pub const MU_B: f64 = 9.274_010_078_3e-24;
/// Elementary charge [C].
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity [F/m].
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Atomic mass constant [kg].
pub const AMU: f64 = 1.660_539_066_60e-27;

/// One internal frequency unit in rad/s.
pub const KRAD_S: f64 = 1e3;
/// One yoctonewton in newtons.
pub const YN: f64 = 1e-24;

pub fn rad_s_to_internal(w: f64) -> f64 {
    w / KRAD_S
}

pub fn internal_to_rad_s(w: f64) -> f64 {
    w * KRAD_S
}

/// Drive rate `F x₀ / 2ħ` in krad/s.
pub fn force_to_rate(force: f64, x0: f64) -> f64 {
    rad_s_to_internal(force * x0 / (2.0 * HBAR))
}

/// Inverse of [`force_to_rate`].
pub fn rate_to_force(rate: f64, x0: f64) -> f64 {
    internal_to_rad_s(rate) * 2.0 * HBAR / x0
}

/// Zeeman coupling `λ = g_J μ_B / ħ` in rad/(s·T).
pub fn zeeman_lambda(g_j: f64) -> f64 {
    g_j * MU_B / HBAR
}
