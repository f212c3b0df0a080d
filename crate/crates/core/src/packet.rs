//! The exact Gaussian state, its free evolution and its mean angular
//! momentum (MAM).
//!
//! A packet is parameterized by mass, mean position q, mean velocity v, the
//! complex symmetric shape matrix Omega (positive-definite imaginary part)
//! and a global phase. Positions are um, velocities um/ms, Omega entries
//! 1/ms.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{
    axial, commutator_real, is_positive_definite_with_tol, ComplexMatrix, RealVec, SYMMETRY_TOL,
};
use crate::units::HBAR;

#[derive(Debug, Clone, Copy)]
pub struct GaussianPacket {
    mass: f64,
    position: RealVec,
    velocity: RealVec,
    omega: ComplexMatrix,
    phase: f64,
}

impl GaussianPacket {
    pub fn new(
        mass: f64,
        position: RealVec,
        velocity: RealVec,
        omega: ComplexMatrix,
        phase: f64,
    ) -> Result<Self> {
        if position.dim() != velocity.dim() {
            return Err(Error::DimensionMismatch(position.dim(), velocity.dim()));
        }
        if position.dim() != omega.dim() {
            return Err(Error::DimensionMismatch(position.dim(), omega.dim()));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::NonFinite { context: "packet mass".into() });
        }
        let dev = omega.symmetry_deviation();
        if dev > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { deviation: dev, tolerance: SYMMETRY_TOL });
        }
        if !is_positive_definite_with_tol(&omega.imag_part(), SYMMETRY_TOL)? {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { mass, position, velocity, omega: omega.symmetrize(), phase })
    }

    /// Diagonal-imaginary packet `Omega = i diag(omega_j)`, the standard
    /// uncorrelated initial condition.
    pub fn isotropic_diagonal(
        mass: f64,
        position: RealVec,
        velocity: RealVec,
        frequencies: &[f64],
    ) -> Result<Self> {
        let entries: Vec<Complex64> =
            frequencies.iter().map(|&w| Complex64::new(0.0, w)).collect();
        let omega = ComplexMatrix::diagonal(&entries)?;
        Self::new(mass, position, velocity, omega, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.position.dim()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn position(&self) -> &RealVec {
        &self.position
    }

    pub fn velocity(&self) -> &RealVec {
        &self.velocity
    }

    pub fn omega(&self) -> &ComplexMatrix {
        &self.omega
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Per-axis spatial extent sqrt(hbar / (mu * Omega_Im_jj)).
    pub fn axis_width(&self, axis: usize) -> f64 {
        (HBAR / (self.mass * self.omega.get(axis, axis).im)).sqrt()
    }

    /// Wave-function amplitude at x.
    pub fn evaluate(&self, x: &RealVec) -> Result<Complex64> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch(x.dim(), self.dim()));
        }
        let n = self.dim() as f64;
        let det_im = self.omega.imag_part().det();
        let prefactor =
            (self.mass / (PI * HBAR)).powf(n / 4.0) * det_im.powf(0.25);
        let d = x.sub(&self.position);
        // (1/2) d^T Omega d + v^T d, complex quadratic form
        let mut quad = Complex64::new(0.0, 0.0);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                quad += self.omega.get(i, j) * d.get(i) * d.get(j);
            }
        }
        let exponent = Complex64::new(0.0, self.mass / HBAR)
            * (quad * 0.5 + Complex64::new(self.velocity.dot(&d), 0.0))
            + Complex64::new(0.0, self.phase);
        Ok(prefactor * exponent.exp())
    }

    /// Free evolution for time t: drift of the center, resolvent update of
    /// the shape matrix and the global-phase advance.
    pub fn free_propagate(&self, t: f64) -> Result<GaussianPacket> {
        assert!(t >= 0.0, "free propagation requires t >= 0");
        if t == 0.0 {
            return Ok(*self);
        }
        let q_new = self.position.add(&self.velocity.scale(t));
        let omega_new = evolve_omega(&self.omega, t)?;
        assert!(
            is_positive_definite_with_tol(&omega_new.imag_part(), 1e-8)?,
            "free evolution must preserve positive definiteness of Omega_Im"
        );
        let phase_new = self.phase + self.kinetic_phase(t) + half_arg_det_resolvent(&omega_new, t);
        GaussianPacket::new(self.mass, q_new, self.velocity, omega_new, phase_new)
    }

    /// External MAM, mu q x v, in u um^2/ms. Always three components.
    pub fn mam_external(&self) -> RealVec {
        self.position.cross(&self.velocity).scale(self.mass)
    }

    /// Internal MAM, (hbar/2) axial [Omega_Re, Omega_Im^-1], in u um^2/ms.
    pub fn mam_internal(&self) -> Result<RealVec> {
        let im_inv = self.omega.imag_part().inverse()?;
        let comm = commutator_real(&self.omega.real_part(), &im_inv)?;
        // the commutator of symmetric matrices is antisymmetric up to roundoff
        Ok(axial(&comm.antisymmetrize())?.scale(HBAR / 2.0))
    }

    pub fn mam_total(&self) -> Result<RealVec> {
        Ok(self.mam_external().add(&self.mam_internal()?))
    }
}

/// `(Omega')^{-1} = Omega^{-1} + I t`, computed via two inversions.
pub fn evolve_omega(omega: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let mut inv = omega.inverse()?;
    for i in 0..inv.dim() {
        inv.set(i, i, inv.get(i, i) + Complex64::new(t, 0.0));
    }
    inv.inverse()
}

/// `(1/2) arg det(I - Omega' t)`, principal value. The equivalent
/// `-(1/2) arg det(I + Omega t)` form is exercised in tests.
fn half_arg_det_resolvent(omega_new: &ComplexMatrix, t: f64) -> f64 {
    let dim = omega_new.dim();
    let mut m = ComplexMatrix::identity(dim).expect("dim checked");
    for i in 0..dim {
        for j in 0..dim {
            m.set(i, j, m.get(i, j) - omega_new.get(i, j) * t);
        }
    }
    0.5 * m.det().arg()
}

impl GaussianPacket {
    pub(crate) fn kinetic_phase(&self, t: f64) -> f64 {
        self.mass * self.velocity.dot(&self.velocity) * t / (2.0 * HBAR)
    }
}
