//! Physical constants and unit conversions into the internal system.
//!
//! Internal units: energy in eV, temperature in K, length in nm, time in
//! hbar/eV (hbar = 1, so rates are energies in eV), mass in hbar^2/(eV nm^2).

/// Boltzmann constant in eV/K.
pub const BOLTZMANN_EV_PER_K: f64 = 8.617_333_262e-5;

/// Reduced Planck constant in eV s.
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;

/// Reduced Planck constant in J s.
pub const HBAR_J_S: f64 = 1.054_571_817e-34;

/// Elementary charge in C (1 eV = this many J).
pub const EV_IN_J: f64 = 1.602_176_634e-19;

/// 1 N expressed in eV/nm (1 N nm = 1e-9 J).
pub const NEWTON_IN_EV_PER_NM: f64 = 1e-9 / EV_IN_J;

/// 1 N/nm expressed in eV/nm^2.
pub const NEWTON_PER_NM_IN_EV_PER_NM2: f64 = NEWTON_IN_EV_PER_NM;

/// 1 N/m expressed in eV/nm^2.
pub const NEWTON_PER_M_IN_EV_PER_NM2: f64 = NEWTON_IN_EV_PER_NM * 1e-9;

/// 1 kg expressed in hbar^2/(eV nm^2).
pub const KG_IN_INTERNAL_MASS: f64 = EV_IN_J * 1e-18 / (HBAR_J_S * HBAR_J_S);

/// 1 s^-1 expressed as an internal rate (eV).
pub const PER_SECOND_IN_EV: f64 = HBAR_EV_S;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_conversion() {
        assert!((NEWTON_IN_EV_PER_NM - 6.241_509e9).abs() / 6.241_509e9 < 1e-6);
        // 1e-12 N/nm stiffness from the reference parameter set.
        let kappa = 1e-12 * NEWTON_PER_NM_IN_EV_PER_NM2;
        assert!((kappa - 6.2415e-3).abs() < 1e-6);
    }

    #[test]
    fn mass_and_frequency() {
        // 1e-22 g with kappa = 1e-3 N/m oscillates at 1e11 rad/s.
        let m = 1e-25 * KG_IN_INTERNAL_MASS;
        let kappa = 1e-3 * NEWTON_PER_M_IN_EV_PER_NM2;
        let omega_ev = (kappa / m).sqrt();
        let omega_si = omega_ev / HBAR_EV_S;
        assert!((omega_si - 1e11).abs() / 1e11 < 1e-6);
    }
}
