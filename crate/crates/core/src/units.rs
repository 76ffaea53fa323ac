//! Physical constants and unit conversions.
//!
//! Internally every energy and rate is an angular frequency in ps⁻¹ (ħ = 1)
//! and every temperature is stored as k_B T / ħ in ps⁻¹. Kelvin, Watts and
//! meV appear only at the I/O boundary.

/// Reduced Planck constant, J·s (CODATA 2018, exact).
pub const HBAR_J_S: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K (exact).
pub const K_B_J_PER_K: f64 = 1.380_649e-23;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m (CODATA 2018).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// One Debye in C·m.
pub const DEBYE_C_M: f64 = 3.335_640_952e-30;
/// ħ in meV·ps; converts ps⁻¹ to meV.
pub const HBAR_MEV_PS: f64 = 0.658_211_956_9;

const PS_PER_S: f64 = 1e12;

/// k_B / ħ in ps⁻¹ per kelvin.
pub fn kb_over_hbar_ps_inv_per_k() -> f64 {
    K_B_J_PER_K / HBAR_J_S / PS_PER_S
}

/// Converts a temperature in kelvin to the angular rate k_B T / ħ in ps⁻¹.
pub fn kelvin_to_angular_rate(kelvin: f64) -> f64 {
    kelvin * kb_over_hbar_ps_inv_per_k()
}

pub fn angular_rate_to_kelvin(rate: f64) -> f64 {
    rate / kb_over_hbar_ps_inv_per_k()
}

/// Converts an energy current in ps⁻² (ħ = 1) to Watts.
pub fn power_ps2_to_watts(power: f64) -> f64 {
    power * HBAR_J_S * PS_PER_S * PS_PER_S
}

/// Converts an angular frequency in ps⁻¹ to s⁻¹.
pub fn ps_inv_to_s_inv(rate: f64) -> f64 {
    rate * PS_PER_S
}

pub fn ns_inv_to_ps_inv(rate: f64) -> f64 {
    rate * 1e-3
}

pub fn ps_inv_to_mev(energy: f64) -> f64 {
    energy * HBAR_MEV_PS
}
