//! Physical constants in SI units (CODATA 2018; atomic data from the
//! standard alkali D-line reference tables).

use std::f64::consts::PI;

/// Planck constant, J s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Unified atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Electron mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
/// Neutron mass, kg.
pub const NEUTRON_MASS: f64 = 1.674_927_498_04e-27;
/// Mass of a 87Rb atom, kg.
pub const RB87_MASS: f64 = 1.443_160_648e-25;
/// Mass of a 133Cs atom, kg.
pub const CS133_MASS: f64 = 2.206_946_57e-25;
/// Vacuum wavelength of the Rb D2 line, m.
pub const RB_D2_WAVELENGTH: f64 = 780.241_209_686e-9;
/// Vacuum wavelength of the Cs D2 line, m.
pub const CS_D2_WAVELENGTH: f64 = 852.347_275_82e-9;
/// Single-photon recoil momentum hbar k on the Rb D2 line, kg m/s.
pub const RB_D2_RECOIL: f64 = PLANCK / RB_D2_WAVELENGTH;
/// Single-photon recoil momentum hbar k on the Cs D2 line, kg m/s.
pub const CS_D2_RECOIL: f64 = PLANCK / CS_D2_WAVELENGTH;
/// Smallest admissible critical length hbar/sigma_q (non-relativistic bound), m.
pub const MIN_CRITICAL_LENGTH: f64 = 10e-15;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_values() {
        assert!((HBAR / 1.054_571_817e-34 - 1.0).abs() < 1e-9);
        assert!((RB87_MASS / AMU - 86.909_180_5).abs() < 1e-4);
        assert!((CS133_MASS / AMU - 132.905_452).abs() < 1e-4);
        assert!((NEUTRON_MASS / ELECTRON_MASS - 1_838.683_661_73).abs() < 1e-6);
    }
}
