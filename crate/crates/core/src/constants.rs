//! Physical constants (CODATA 2018) and unit conversions used across the crate.
//!
//! All internal quantities are SI. Atomic data tables store ionization
//! energies in cm⁻¹ and polarizabilities in atomic units because those are
//! the units the reference tabulations use; the converters below move them
//! into SI where the trap formulas need them.

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Planck constant, J·s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Vacuum electric permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_8128e-12;

/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS: f64 = 1.660_539_068_92e-27;

/// Atomic unit of electric polarizability, C·m²/V (4πε₀a₀³).
pub const POLARIZABILITY_AU: f64 = 1.648_777_274_36e-41;

/// Energy of one wavenumber (1 cm⁻¹) in joules: h·c·100.
pub const WAVENUMBER_J: f64 = PLANCK * SPEED_OF_LIGHT * 100.0;

/// Convert a spectroscopic energy in cm⁻¹ to joules.
pub fn wavenumber_to_joule(cm1: f64) -> f64 {
    cm1 * WAVENUMBER_J
}

/// Convert a spectroscopic energy in cm⁻¹ to electronvolts.
pub fn wavenumber_to_ev(cm1: f64) -> f64 {
    wavenumber_to_joule(cm1) / ELEMENTARY_CHARGE
}

/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Convert a polarizability in atomic units to SI (C·m²/V).
pub fn polarizability_au_to_si(alpha_au: f64) -> f64 {
    alpha_au * POLARIZABILITY_AU
}

/// Convert a trap depth in joules to millikelvin.
pub fn joule_to_millikelvin(energy: f64) -> f64 {
    energy / BOLTZMANN * 1e3
}
