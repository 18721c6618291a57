//! Physical constants and unit conversions. Energies are in eV, lengths in nm.

use std::f64::consts::PI;

/// ℏ²/2mₑ in eV·nm².
pub const HBAR2_OVER_2ME: f64 = 0.038_099_8;

/// 1 Rydberg in eV.
pub const RYDBERG_EV: f64 = 13.605_693;

/// Lattice constant of Si in nm.
pub const SI_LATTICE_CONSTANT: f64 = 0.543;

/// Conduction-band minimum along (0,0,1), in units of 2π/a.
pub const K0_REDUCED: f64 = 0.84;

/// 2π/a for a lattice constant in nm, giving nm⁻¹.
pub fn two_pi_over_a(a: f64) -> f64 {
    2.0 * PI / a
}

/// Valley position k₀ in nm⁻¹.
pub fn k0(a: f64) -> f64 {
    K0_REDUCED * two_pi_over_a(a)
}
