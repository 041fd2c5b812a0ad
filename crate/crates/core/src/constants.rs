//! Unit conversions. Energies are carried in GHz internally.

/// Bohr magneton over Planck's constant, GHz/T.
pub const MU_B_OVER_H: f64 = 13.996_244_9;

/// 1 cm⁻¹ in GHz.
pub const CM1_TO_GHZ: f64 = 29.979_245_8;

/// Planck over Boltzmann, mK per GHz (h / k_B = 47.992 430 7 mK/GHz).
pub const H_OVER_KB_MK_PER_GHZ: f64 = 47.992_430_7;

pub fn cm1_to_ghz(cm1: f64) -> f64 {
    cm1 * CM1_TO_GHZ
}

pub fn ghz_to_cm1(ghz: f64) -> f64 {
    ghz / CM1_TO_GHZ
}

/// Constants used to turn matrix elements into physical line strengths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    pub mu_b_over_h: f64,
    pub cm1_to_ghz: f64,
    /// `e²ħ²/4m²c²` in SI units (J² T⁻² s² m⁻²). Reported strengths are relative and leave it out.
    pub dipole_prefactor: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        mu_b_over_h: MU_B_OVER_H,
        cm1_to_ghz: CM1_TO_GHZ,
        dipole_prefactor: (9.274_010_078_3e-24 / 299_792_458.0) * (9.274_010_078_3e-24 / 299_792_458.0),
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}
