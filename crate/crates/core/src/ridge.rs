//! The tilted-ridge barrier scenario: V(xi) = xi_2 f(xi_1) with a Gaussian
//! profile f, its closed-form line average and derivative blocks, and the
//! closed-form internal-MAM shift.

use std::f64::consts::PI;


use crate::error::{Error, Result};
use crate::packet::GaussianPacket;
use crate::potential::Potential;
use crate::tensor::{ComplexMatrix, RealMatrix, RealVec};
use crate::units::{ev_to_native_energy, HBAR};

/// Separation (in units of the ridge width) beyond which the closed-form
/// line average is trusted. Inside it the engine falls back to quadrature.
const CLOSED_FORM_SEPARATION: f64 = 8.0;

#[derive(Debug, Clone, Copy)]
pub struct RidgeParams {
    /// Integrated profile strength, u um^2/ms^2 (energy units).
    pub v0: f64,
    /// Profile width, um.
    pub ell: f64,
}

impl RidgeParams {
    pub fn new(v0: f64, ell: f64) -> Result<Self> {
        if !(ell > 0.0 && ell.is_finite() && v0.is_finite()) {
            return Err(Error::NonFinite { context: "ridge parameters".into() });
        }
        Ok(Self { v0, ell })
    }

    pub fn from_ev(v0_ev: f64, ell: f64) -> Result<Self> {
        Self::new(ev_to_native_energy(v0_ev), ell)
    }

    /// Gaussian profile f(xi_1) = V0 / (sqrt(pi) l) exp(-(xi_1/l)^2).
    pub fn profile(&self, xi1: f64) -> f64 {
        self.v0 / (PI.sqrt() * self.ell) * (-(xi1 / self.ell).powi(2)).exp()
    }

    /// V(xi) = xi_2 f(xi_1).
    pub fn value(&self, xi: &RealVec) -> f64 {
        xi.get(1) * self.profile(xi.get(0))
    }

    /// Closed-form line average V0 (x1 y2 - y1 x2) / (x1 - y1)^2, valid when
    /// the segment endpoints sit well outside the ridge on opposite sides.
    pub fn line_average_closed(&self, x: &RealVec, y: &RealVec) -> Result<f64> {
        let d = x.get(0) - y.get(0);
        if d == 0.0 {
            return Err(Error::RidgeSingularity);
        }
        let w = x.get(0) * y.get(1) - y.get(0) * x.get(1);
        Ok(self.v0 * w / (d * d))
    }

    fn closed_form_applies(&self, x: &RealVec, y: &RealVec) -> bool {
        let (x1, y1) = (x.get(0), y.get(0));
        x1 * y1 < 0.0
            && x1.abs() >= CLOSED_FORM_SEPARATION * self.ell
            && y1.abs() >= CLOSED_FORM_SEPARATION * self.ell
    }
}

impl Potential for RidgeParams {
    fn value(&self, x: &RealVec) -> f64 {
        RidgeParams::value(self, x)
    }

    fn length_scale(&self) -> f64 {
        self.ell
    }

    fn strength_scale(&self) -> f64 {
        self.v0.abs().max(f64::MIN_POSITIVE)
    }

    fn analytic_line_average(&self, x: &RealVec, y: &RealVec) -> Option<f64> {
        if self.closed_form_applies(x, y) {
            self.line_average_closed(x, y).ok()
        } else {
            None
        }
    }

    fn analytic_grad_q(&self, x: &RealVec, y: &RealVec) -> Option<RealVec> {
        if !self.closed_form_applies(x, y) {
            return None;
        }
        let d = x.get(0) - y.get(0);
        let w = x.get(0) * y.get(1) - y.get(0) * x.get(1);
        let d2 = d * d;
        let d3 = d2 * d;
        Some(RealVec::new2(
            self.v0 * (-x.get(1) / d2 + 2.0 * w / d3),
            self.v0 * x.get(0) / d2,
        ))
    }

    fn analytic_hess_qq(&self, x: &RealVec, y: &RealVec) -> Option<RealMatrix> {
        if !self.closed_form_applies(x, y) {
            return None;
        }
        let d = x.get(0) - y.get(0);
        let w = x.get(0) * y.get(1) - y.get(0) * x.get(1);
        let d3 = d.powi(3);
        let d4 = d3 * d;
        let off = 2.0 * self.v0 * x.get(0) / d3;
        Some(RealMatrix::from_rows2([
            [self.v0 * (-4.0 * x.get(1) / d3 + 6.0 * w / d4), off],
            [off, 0.0],
        ]))
    }

    fn analytic_hess_qpqp(&self, x: &RealVec, y: &RealVec) -> Option<RealMatrix> {
        if !self.closed_form_applies(x, y) {
            return None;
        }
        let d = x.get(0) - y.get(0);
        let w = x.get(0) * y.get(1) - y.get(0) * x.get(1);
        let d3 = d.powi(3);
        let d4 = d3 * d;
        let off = 2.0 * self.v0 * y.get(0) / d3;
        Some(RealMatrix::from_rows2([
            [self.v0 * (-4.0 * y.get(1) / d3 + 6.0 * w / d4), off],
            [off, 0.0],
        ]))
    }

    fn analytic_hess_qpq(&self, x: &RealVec, y: &RealVec) -> Option<RealMatrix> {
        if !self.closed_form_applies(x, y) {
            return None;
        }
        let d = x.get(0) - y.get(0);
        let w = x.get(0) * y.get(1) - y.get(0) * x.get(1);
        let d2 = d * d;
        let d3 = d2 * d;
        let d4 = d3 * d;
        let u_x1y1 =
            self.v0 * (2.0 * (x.get(1) + y.get(1)) / d3 - 6.0 * w / d4);
        let u_x1y2 = self.v0 * (1.0 / d2 - 2.0 * x.get(0) / d3);
        let u_x2y1 = self.v0 * (-1.0 / d2 - 2.0 * y.get(0) / d3);
        // element (j, k) = d^2 U / dx_k dy_j
        Some(RealMatrix::from_rows2([[u_x1y1, u_x2y1], [u_x1y2, 0.0]]))
    }

    fn analytic_trace_term(
        &self,
        _j: &ComplexMatrix,
        x: &RealVec,
        y: &RealVec,
    ) -> Option<ComplexMatrix> {
        // every second derivative of the closed-form hess_qq block in q'
        // vanishes term by term
        if self.closed_form_applies(x, y) {
            ComplexMatrix::zeros(2).ok()
        } else {
            None
        }
    }
}

/// The worked scenario: packet at (-q, 0) with velocity (v, 0) and diagonal
/// Omega = i diag(omega1, omega2), propagated for t = 2q/v.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioParams {
    /// Initial distance from the ridge, um.
    pub q: f64,
    /// Mean speed, um/ms.
    pub v: f64,
    /// Shape frequencies, 1/ms.
    pub omega1: f64,
    pub omega2: f64,
    /// Mass, u.
    pub mass: f64,
}

/// Validity-regime ratios; all should be well below one, warnings start
/// at 0.2.
#[derive(Debug, Clone, Copy)]
pub struct RegimeRatios {
    /// hbar / (mu omega_min q^2): packet small next to its distance from
    /// the ridge.
    pub packet_size: f64,
    /// 2 omega_max q / v: spreading slow next to the crossing time.
    pub spreading: f64,
    /// l / q: ridge narrow next to the crossing distance.
    pub ridge_width: f64,
}

pub const REGIME_WARN_THRESHOLD: f64 = 0.2;

impl ScenarioParams {
    pub fn crossing_time(&self) -> f64 {
        2.0 * self.q / self.v
    }

    pub fn initial_packet(&self) -> Result<GaussianPacket> {
        GaussianPacket::isotropic_diagonal(
            self.mass,
            RealVec::new2(-self.q, 0.0),
            RealVec::new2(self.v, 0.0),
            &[self.omega1, self.omega2],
        )
    }

    pub fn regime_ratios(&self, ridge: &RidgeParams) -> RegimeRatios {
        let omega_min = self.omega1.min(self.omega2);
        let omega_max = self.omega1.max(self.omega2);
        RegimeRatios {
            packet_size: HBAR / (self.mass * omega_min * self.q * self.q),
            spreading: 2.0 * omega_max * self.q / self.v,
            ridge_width: ridge.ell / self.q,
        }
    }

    pub fn regime_warnings(&self, ridge: &RidgeParams) -> Vec<String> {
        let r = self.regime_ratios(ridge);
        let mut warnings = Vec::new();
        for (name, value) in [
            ("packet_size hbar/(mu omega_min q^2)", r.packet_size),
            ("spreading 2 omega_max q / v", r.spreading),
            ("ridge_width l / q", r.ridge_width),
        ] {
            if value > REGIME_WARN_THRESHOLD {
                warnings.push(format!("regime ratio {name} = {value:.3} exceeds {REGIME_WARN_THRESHOLD}"));
            }
        }
        warnings
    }
}

/// Closed-form out-of-plane internal-MAM shift, in units of hbar:
/// q V0 (omega1 - omega2) / (mu v^3).
pub fn closed_form_delta_mam(scenario: &ScenarioParams, ridge: &RidgeParams) -> f64 {
    scenario.q * ridge.v0 * (scenario.omega1 - scenario.omega2)
        / (scenario.mass * scenario.v.powi(3))
}
