//! Native unit system: atomic mass units (u), micrometers, milliseconds.
//!
//! In these units every quantity of the atom-optics scenarios stays within a
//! few orders of magnitude of unity. Energies are u um^2/ms^2 and actions
//! u um^2/ms.

/// Reduced Planck constant in u um^2 / ms.
///
/// CODATA: hbar = 1.054571817e-34 J s, 1 u = 1.66053906660e-27 kg.
pub const HBAR: f64 = 63.507_799_256_976_54;

/// One electronvolt in u um^2 / ms^2 (1.602176634e-19 J per eV).
pub const EV_TO_NATIVE: f64 = 9.648_533_215_665_33e13;

/// Frequencies quoted in 1/s, converted to the native 1/ms.
pub const PER_SECOND_TO_PER_MS: f64 = 1e-3;

pub fn ev_to_native_energy(ev: f64) -> f64 {
    ev * EV_TO_NATIVE
}

pub fn native_energy_to_ev(e: f64) -> f64 {
    e / EV_TO_NATIVE
}
