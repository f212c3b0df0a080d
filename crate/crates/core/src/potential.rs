//! External potential interface.
//!
//! A potential provides a pointwise value plus two characteristic scales
//! used for finite-difference steps and weakness checks. Models that have a
//! closed-form line average or closed-form derivative blocks can supply them
//! through the `analytic_*` hooks; the eikonal engine falls back to
//! quadrature and finite differences otherwise.

use crate::tensor::{ComplexMatrix, RealMatrix, RealVec};

pub trait Potential: Sync {
    /// V(x) in u um^2/ms^2.
    fn value(&self, x: &RealVec) -> f64;

    /// Characteristic length over which V varies, in um.
    fn length_scale(&self) -> f64;

    /// Characteristic magnitude of V, in u um^2/ms^2.
    fn strength_scale(&self) -> f64;

    /// Closed-form line average U_{x,y}, when the model has one that is
    /// valid at (x, y).
    fn analytic_line_average(&self, _x: &RealVec, _y: &RealVec) -> Option<f64> {
        None
    }

    /// dU_{x,y}/dy.
    fn analytic_grad_q(&self, _x: &RealVec, _y: &RealVec) -> Option<RealVec> {
        None
    }

    /// d^2 U_{x,y}/dy^2.
    fn analytic_hess_qq(&self, _x: &RealVec, _y: &RealVec) -> Option<RealMatrix> {
        None
    }

    /// d^2 U_{x,y}/dx^2.
    fn analytic_hess_qpqp(&self, _x: &RealVec, _y: &RealVec) -> Option<RealMatrix> {
        None
    }

    /// Mixed block d^2 U/dq' dq, element (j,k) = d^2 U_{x,y}/dx_k dy_j.
    fn analytic_hess_qpq(&self, _x: &RealVec, _y: &RealVec) -> Option<RealMatrix> {
        None
    }

    /// The fourth-derivative contraction d^2/dq'^2 tr(J d^2U/dq^2).
    fn analytic_trace_term(
        &self,
        _j: &ComplexMatrix,
        _x: &RealVec,
        _y: &RealVec,
    ) -> Option<ComplexMatrix> {
        None
    }
}

/// Derivative blocks of the line-averaged potential at a segment (q', q).
#[derive(Debug, Clone)]
pub struct UDerivatives {
    /// a = dU_{q',q}/dq.
    pub grad_q: RealVec,
    /// B = d^2 U_{q',q}/dq^2.
    pub hess_qq: RealMatrix,
    /// d^2 U_{q',q}/dq' dq (element (j,k) = d^2 U/dx_k dy_j).
    pub hess_qpq: RealMatrix,
    /// C = d^2 U_{q',q}/dq'^2.
    pub hess_qpqp: RealMatrix,
    pub q_prime: RealVec,
    pub q: RealVec,
}

/// Constant potential; line averages are the constant itself.
pub struct ConstantPotential(pub f64);

impl Potential for ConstantPotential {
    fn value(&self, _x: &RealVec) -> f64 {
        self.0
    }

    fn length_scale(&self) -> f64 {
        1.0
    }

    fn strength_scale(&self) -> f64 {
        self.0.abs().max(f64::MIN_POSITIVE)
    }
}

/// V(x) = g . x + c; its line average is exactly V evaluated at the segment
/// midpoint.
pub struct LinearPotential {
    pub gradient: RealVec,
    pub offset: f64,
    pub length_scale: f64,
}

impl Potential for LinearPotential {
    fn value(&self, x: &RealVec) -> f64 {
        self.gradient.dot(x) + self.offset
    }

    fn length_scale(&self) -> f64 {
        self.length_scale
    }

    fn strength_scale(&self) -> f64 {
        (self.gradient.norm() * self.length_scale + self.offset.abs()).max(f64::MIN_POSITIVE)
    }
}

/// The zero potential.
pub struct ZeroPotential {
    pub dim: usize,
}

impl Potential for ZeroPotential {
    fn value(&self, _x: &RealVec) -> f64 {
        0.0
    }

    fn length_scale(&self) -> f64 {
        1.0
    }

    fn strength_scale(&self) -> f64 {
        f64::MIN_POSITIVE
    }

    fn analytic_line_average(&self, _x: &RealVec, _y: &RealVec) -> Option<f64> {
        Some(0.0)
    }
}
