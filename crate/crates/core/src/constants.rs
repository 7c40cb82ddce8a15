//! Physical constants, CODATA 2018, SI units.
//!
//! Single source of truth for every unit-bearing formula in the crate.
//! Derived constants (ħ, Φ₀) are computed from the defining ones rather
//! than stored separately.

use crate::scalar::Real;

/// Planck constant, J·s (exact by SI definition).
pub const PLANCK: f64 = 6.62607015e-34;

/// Elementary charge, C (exact by SI definition).
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;

/// Vacuum magnetic permeability μ₀, N/A².
pub const VACUUM_PERMEABILITY: f64 = 1.25663706212e-6;

/// Vacuum electric permittivity ε₀, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.8541878128e-12;

/// Reduced Planck constant ħ = h/2π, J·s.
pub fn hbar<T: Real>() -> T {
    T::lit(PLANCK) / T::TAU()
}

/// Superconducting flux quantum Φ₀ = h/(2e), Wb.
pub fn flux_quantum<T: Real>() -> T {
    T::lit(PLANCK) / (T::lit(2.0) * T::lit(ELEMENTARY_CHARGE))
}

pub fn planck<T: Real>() -> T {
    T::lit(PLANCK)
}

pub fn vacuum_permeability<T: Real>() -> T {
    T::lit(VACUUM_PERMEABILITY)
}

pub fn vacuum_permittivity<T: Real>() -> T {
    T::lit(VACUUM_PERMITTIVITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_constants() {
        // CODATA 2018 listed values for the derived constants.
        assert!((hbar::<f64>() - 1.054571817e-34).abs() < 1e-42);
        assert!((flux_quantum::<f64>() - 2.067833848e-15).abs() < 1e-23);
    }
}
