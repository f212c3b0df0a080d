//! Weak-potential (eikonal) machinery.
//!
//! The straight-path line average U, its derivative blocks, the hatted
//! quantities of the eikonal wave function, the resolvent J, the shape-matrix
//! correction Delta Omega and the resulting internal-MAM shift Delta L.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::packet::{evolve_omega, GaussianPacket};
use crate::potential::{Potential, UDerivatives};
use crate::quadrature::GaussLegendre;
use crate::tensor::{axial, commutator_real, ComplexMatrix, RealMatrix, RealVec};
use crate::units::HBAR;

#[derive(Debug, Clone)]
pub struct EikonalConfig {
    /// Gauss-Legendre order for the line average. Doubling is used as an
    /// error estimate where the engine needs one.
    pub quad_order: usize,
    /// Finite-difference step as a fraction of the potential length scale.
    pub fd_step_fraction: f64,
    /// Use the potential's analytic hooks when available.
    pub use_analytic: bool,
    /// max |V| / E0 above which a warning is logged.
    pub weakness_warn: f64,
    /// max |V| / E0 above which evaluation is refused.
    pub weakness_max: f64,
}

impl Default for EikonalConfig {
    fn default() -> Self {
        Self {
            quad_order: 64,
            fd_step_fraction: 0.01,
            use_analytic: true,
            weakness_warn: 0.1,
            weakness_max: 1.0,
        }
    }
}

/// The per-point quantities of the eikonal wave function.
#[derive(Debug, Clone)]
pub struct HattedQuantities {
    pub velocity: RealVec,
    pub position: RealVec,
    pub omega: ComplexMatrix,
    pub phase: f64,
}

pub struct EikonalEngine {
    config: EikonalConfig,
    quad: GaussLegendre,
    quad_double: GaussLegendre,
}

impl EikonalEngine {
    pub fn new(config: EikonalConfig) -> Self {
        let quad = GaussLegendre::new(config.quad_order);
        let quad_double = GaussLegendre::new(config.quad_order * 2);
        Self { config, quad, quad_double }
    }

    pub fn with_defaults() -> Self {
        Self::new(EikonalConfig::default())
    }

    pub fn config(&self) -> &EikonalConfig {
        &self.config
    }

    /// Line-averaged potential U_{x,y} = int_0^1 V(a x + (1-a) y) da.
    pub fn line_average(&self, v: &dyn Potential, x: &RealVec, y: &RealVec) -> Result<f64> {
        if self.config.use_analytic {
            if let Some(u) = v.analytic_line_average(x, y) {
                return Ok(u);
            }
        }
        self.line_average_quadrature(v, x, y)
    }

    /// Quadrature route, always available; used directly by tests that pit
    /// analytic expressions against it.
    pub fn line_average_quadrature(
        &self,
        v: &dyn Potential,
        x: &RealVec,
        y: &RealVec,
    ) -> Result<f64> {
        self.segment_quadrature(&self.quad, v, x, y)
    }

    /// Higher-order quadrature, used as an error estimate.
    pub fn line_average_refined(
        &self,
        v: &dyn Potential,
        x: &RealVec,
        y: &RealVec,
    ) -> Result<f64> {
        self.segment_quadrature(&self.quad_double, v, x, y)
    }

    /// Composite Gauss-Legendre along the segment. Panels are sized so each
    /// spans at most two feature lengths of the potential; a single panel
    /// reduces to the plain rule.
    fn segment_quadrature(
        &self,
        gl: &GaussLegendre,
        v: &dyn Potential,
        x: &RealVec,
        y: &RealVec,
    ) -> Result<f64> {
        let seg_len = x.sub(y).norm();
        let feature = v.length_scale().max(f64::MIN_POSITIVE);
        let n_panels = ((seg_len / (2.0 * feature)).ceil() as usize).clamp(1, 256);
        let mut bad_alpha = None;
        let mut sample = |alpha: f64| {
            let p = y.add(&x.sub(y).scale(alpha));
            let s = v.value(&p);
            if !s.is_finite() && bad_alpha.is_none() {
                bad_alpha = Some(alpha);
            }
            s
        };
        let value = if n_panels == 1 {
            gl.integrate_unit(&mut sample)
        } else {
            let width = 1.0 / n_panels as f64;
            let mut total = 0.0;
            for panel in 0..n_panels {
                let a = panel as f64 * width;
                total += gl.integrate(a, a + width, &mut sample);
            }
            total
        };
        if let Some(alpha) = bad_alpha {
            return Err(Error::NonFinitePotential { alpha });
        }
        Ok(value)
    }

    /// Largest |V| sample along the segment divided by the kinetic energy.
    /// Warns above the configured threshold, errors above the hard limit.
    pub fn weakness_ratio(
        &self,
        v: &dyn Potential,
        x: &RealVec,
        y: &RealVec,
        kinetic_energy: f64,
    ) -> Result<f64> {
        let mut max_abs = 0.0f64;
        for &node in self.quad.nodes() {
            let alpha = 0.5 * (node + 1.0);
            let p = y.add(&x.sub(y).scale(alpha));
            max_abs = max_abs.max(v.value(&p).abs());
        }
        let ratio = max_abs / kinetic_energy;
        if ratio > self.config.weakness_max {
            return Err(Error::PotentialTooStrong { ratio, limit: self.config.weakness_max });
        }
        if ratio > self.config.weakness_warn {
            log::warn!(
                "potential is marginally weak: max|V|/E0 = {ratio:.3} exceeds {}",
                self.config.weakness_warn
            );
        }
        Ok(ratio)
    }

    fn fd_step(&self, v: &dyn Potential) -> f64 {
        v.length_scale() * self.config.fd_step_fraction
    }

    /// Gradient of U_{x,y} in the second argument, finite differences.
    fn fd_grad_q(&self, v: &dyn Potential, x: &RealVec, y: &RealVec, h: f64) -> Result<RealVec> {
        let dim = y.dim();
        let mut out = RealVec::zeros(dim)?;
        for j in 0..dim {
            let mut yp = *y;
            yp.set(j, y.get(j) + h);
            let mut ym = *y;
            ym.set(j, y.get(j) - h);
            let up = self.line_average_quadrature(v, x, &yp)?;
            let um = self.line_average_quadrature(v, x, &ym)?;
            out.set(j, (up - um) / (2.0 * h));
        }
        Ok(out)
    }

    fn fd_hessian(
        &self,
        v: &dyn Potential,
        x: &RealVec,
        y: &RealVec,
        h: f64,
        vary_x: bool,
    ) -> Result<RealMatrix> {
        let dim = y.dim();
        let base = if vary_x { *x } else { *y };
        let eval = |p: &RealVec| -> Result<f64> {
            if vary_x {
                self.line_average_quadrature(v, p, y)
            } else {
                self.line_average_quadrature(v, x, p)
            }
        };
        let u0 = eval(&base)?;
        let mut out = RealMatrix::zeros(dim)?;
        for j in 0..dim {
            let mut pp = base;
            pp.set(j, base.get(j) + h);
            let mut pm = base;
            pm.set(j, base.get(j) - h);
            out.set(j, j, (eval(&pp)? - 2.0 * u0 + eval(&pm)?) / (h * h));
            for k in (j + 1)..dim {
                let mut s = 0.0;
                for (sj, sk, sign) in
                    [(h, h, 1.0), (h, -h, -1.0), (-h, h, -1.0), (-h, -h, 1.0)]
                {
                    let mut p = base;
                    p.set(j, base.get(j) + sj);
                    p.set(k, base.get(k) + sk);
                    s += sign * eval(&p)?;
                }
                let val = s / (4.0 * h * h);
                out.set(j, k, val);
                out.set(k, j, val);
            }
        }
        Ok(out)
    }

    /// Mixed block with element (j,k) = d^2 U_{x,y}/dx_k dy_j.
    fn fd_hess_qpq(
        &self,
        v: &dyn Potential,
        x: &RealVec,
        y: &RealVec,
        h: f64,
    ) -> Result<RealMatrix> {
        let dim = y.dim();
        let mut out = RealMatrix::zeros(dim)?;
        for j in 0..dim {
            for k in 0..dim {
                // central 4-point stencil in (x_k, y_j)
                let mut s = 0.0;
                for (sx, sy, sign) in
                    [(h, h, 1.0), (h, -h, -1.0), (-h, h, -1.0), (-h, -h, 1.0)]
                {
                    let mut xp = *x;
                    xp.set(k, x.get(k) + sx);
                    let mut yp = *y;
                    yp.set(j, y.get(j) + sy);
                    s += sign * self.line_average_quadrature(v, &xp, &yp)?;
                }
                out.set(j, k, s / (4.0 * h * h));
            }
        }
        Ok(out)
    }

    fn richardson_vec(
        &self,
        coarse: &RealVec,
        fine: &RealVec,
        scale_floor: f64,
        context: &str,
    ) -> Result<RealVec> {
        let scale = fine.norm().max(scale_floor);
        let dev = fine.sub(coarse).norm() / scale;
        if dev > 1e-3 {
            return Err(Error::FiniteDifferenceNoise { context: context.into(), deviation: dev });
        }
        // second-order stencils: h^2 extrapolation
        Ok(fine.scale(4.0 / 3.0).sub(&coarse.scale(1.0 / 3.0)))
    }

    fn richardson_mat(
        &self,
        coarse: &RealMatrix,
        fine: &RealMatrix,
        scale_floor: f64,
        context: &str,
    ) -> Result<RealMatrix> {
        let scale = fine.max_abs().max(scale_floor);
        let dev = fine.sub(coarse).max_abs() / scale;
        if dev > 1e-3 {
            return Err(Error::FiniteDifferenceNoise { context: context.into(), deviation: dev });
        }
        Ok(fine.scale(4.0 / 3.0).sub(&coarse.scale(1.0 / 3.0)))
    }

    /// All derivative blocks of U at the segment (q', q). Analytic hooks are
    /// preferred when enabled; finite differences carry a step-doubling
    /// consistency check.
    pub fn u_derivatives(
        &self,
        v: &dyn Potential,
        q_prime: &RealVec,
        q: &RealVec,
    ) -> Result<UDerivatives> {
        if q_prime.sub(q).norm() == 0.0 {
            return Err(Error::DegenerateSegment);
        }
        let h = self.fd_step(v);
        // natural magnitudes used as relative-error floors
        let grad_floor = v.strength_scale() / v.length_scale() * 1e-9;
        let hess_floor = v.strength_scale() / (v.length_scale() * v.length_scale()) * 1e-9;

        let grad_q = match self.analytic_grad(v, q_prime, q) {
            Some(g) => g,
            None => {
                let fine = self.fd_grad_q(v, q_prime, q, h)?;
                let coarse = self.fd_grad_q(v, q_prime, q, 2.0 * h)?;
                self.richardson_vec(&coarse, &fine, grad_floor, "grad_q")?
            }
        };
        let hess_qq = match self.analytic_hess_qq(v, q_prime, q) {
            Some(m) => m,
            None => {
                let fine = self.fd_hessian(v, q_prime, q, h, false)?;
                let coarse = self.fd_hessian(v, q_prime, q, 2.0 * h, false)?;
                self.richardson_mat(&coarse, &fine, hess_floor, "hess_qq")?
            }
        };
        // individual blocks can vanish identically at symmetric geometries;
        // gate their FD noise against the natural block magnitude set by B
        let block_floor = hess_qq.max_abs().max(hess_floor);
        let hess_qpqp = match self.analytic_hess_qpqp(v, q_prime, q) {
            Some(m) => m,
            None => {
                let fine = self.fd_hessian(v, q_prime, q, h, true)?;
                let coarse = self.fd_hessian(v, q_prime, q, 2.0 * h, true)?;
                self.richardson_mat(&coarse, &fine, block_floor, "hess_qpqp")?
            }
        };
        let hess_qpq = match self.analytic_hess_qpq(v, q_prime, q) {
            Some(m) => m,
            None => {
                let fine = self.fd_hess_qpq(v, q_prime, q, h)?;
                let coarse = self.fd_hess_qpq(v, q_prime, q, 2.0 * h)?;
                self.richardson_mat(&coarse, &fine, block_floor, "hess_qpq")?
            }
        };
        Ok(UDerivatives {
            grad_q,
            hess_qq,
            hess_qpq,
            hess_qpqp,
            q_prime: *q_prime,
            q: *q,
        })
    }

    fn analytic_grad(&self, v: &dyn Potential, x: &RealVec, y: &RealVec) -> Option<RealVec> {
        if self.config.use_analytic {
            v.analytic_grad_q(x, y)
        } else {
            None
        }
    }

    fn analytic_hess_qq(&self, v: &dyn Potential, x: &RealVec, y: &RealVec) -> Option<RealMatrix> {
        if self.config.use_analytic {
            v.analytic_hess_qq(x, y)
        } else {
            None
        }
    }

    fn analytic_hess_qpqp(
        &self,
        v: &dyn Potential,
        x: &RealVec,
        y: &RealVec,
    ) -> Option<RealMatrix> {
        if self.config.use_analytic {
            v.analytic_hess_qpqp(x, y)
        } else {
            None
        }
    }

    fn analytic_hess_qpq(&self, v: &dyn Potential, x: &RealVec, y: &RealVec) -> Option<RealMatrix> {
        if self.config.use_analytic {
            v.analytic_hess_qpq(x, y)
        } else {
            None
        }
    }

    /// Hatted quantities of the eikonal wave function at observation point x.
    pub fn hatted_quantities(
        &self,
        packet: &GaussianPacket,
        v: &dyn Potential,
        x: &RealVec,
        t: f64,
    ) -> Result<HattedQuantities> {
        let mu = packet.mass();
        let q = packet.position();
        let e0 = 0.5 * mu * packet.velocity().dot(packet.velocity());
        self.weakness_ratio(v, x, q, e0)?;

        let u = self.line_average(v, x, q)?;
        let h = self.fd_step(v);
        let grad_floor = v.strength_scale() / v.length_scale() * 1e-9;
        let hess_floor = v.strength_scale() / (v.length_scale() * v.length_scale()) * 1e-9;
        let a = match self.analytic_grad(v, x, q) {
            Some(g) => g,
            None => {
                let fine = self.fd_grad_q(v, x, q, h)?;
                let coarse = self.fd_grad_q(v, x, q, 2.0 * h)?;
                self.richardson_vec(&coarse, &fine, grad_floor, "grad_q at (x,q)")?
            }
        };
        let b = match self.analytic_hess_qq(v, x, q) {
            Some(m) => m,
            None => {
                let fine = self.fd_hessian(v, x, q, h, false)?;
                let coarse = self.fd_hessian(v, x, q, 2.0 * h, false)?;
                self.richardson_mat(&coarse, &fine, hess_floor, "hess_qq at (x,q)")?
            }
        };

        let v_hat = packet.velocity().sub(&a.scale(t / mu));
        let q_hat = q.add(&v_hat.scale(t));

        // Omega_tilde = Omega - B t / mu
        let omega_tilde = packet.omega().sub(&b.to_complex().scale(Complex64::new(t / mu, 0.0)));
        let mut resolvent = ComplexMatrix::identity(omega_tilde.dim())?;
        for i in 0..omega_tilde.dim() {
            for j in 0..omega_tilde.dim() {
                resolvent.set(i, j, resolvent.get(i, j) + omega_tilde.get(i, j) * t);
            }
        }
        let det = resolvent.det();
        let omega_hat = {
            let tilde_inv = omega_tilde
                .inverse()
                .map_err(|_| Error::SingularEvolution { t, det_abs: det.norm() })?;
            let mut m = tilde_inv;
            for i in 0..m.dim() {
                m.set(i, i, m.get(i, i) + Complex64::new(t, 0.0));
            }
            m.inverse().map_err(|_| Error::SingularEvolution { t, det_abs: det.norm() })?
        };

        let phase = packet.phase()
            + (0.5 * mu * v_hat.dot(&v_hat) - u) * t / HBAR
            - 0.5 * det.arg();
        Ok(HattedQuantities { velocity: v_hat, position: q_hat, omega: omega_hat, phase })
    }

    /// Eikonal wave function amplitude at x: the Gaussian built from the
    /// hatted quantities of this observation point. Re-evaluated per x; the
    /// global shape is not Gaussian.
    pub fn wavefunction(
        &self,
        packet: &GaussianPacket,
        v: &dyn Potential,
        x: &RealVec,
        t: f64,
    ) -> Result<Complex64> {
        let hatted = self.hatted_quantities(packet, v, x, t)?;
        let local = GaussianPacket::new(
            packet.mass(),
            hatted.position,
            hatted.velocity,
            hatted.omega,
            hatted.phase,
        )?;
        local.evaluate(x)
    }

    /// J = (I + Omega t)^{-1} = I - Omega' t. Both routes are computed and
    /// must agree; disagreement means a broken shape matrix.
    pub fn j_matrix(&self, packet: &GaussianPacket, t: f64) -> Result<ComplexMatrix> {
        let dim = packet.dim();
        let mut plus = ComplexMatrix::identity(dim)?;
        for i in 0..dim {
            for j in 0..dim {
                plus.set(i, j, plus.get(i, j) + packet.omega().get(i, j) * t);
            }
        }
        let via_inverse = plus.inverse()?;

        let omega_prime = evolve_omega(packet.omega(), t)?;
        let mut via_resolvent = ComplexMatrix::identity(dim)?;
        for i in 0..dim {
            for j in 0..dim {
                via_resolvent.set(i, j, via_resolvent.get(i, j) - omega_prime.get(i, j) * t);
            }
        }
        let dev = via_inverse.sub(&via_resolvent).max_abs()
            / via_inverse.max_abs().max(f64::MIN_POSITIVE);
        assert!(
            dev <= 1e-10,
            "J-matrix routes disagree by {dev:.3e}; shape matrix is inconsistent"
        );
        Ok(via_inverse)
    }

    /// Fourth-derivative contraction d^2/dq'^2 tr(J B(q',q)), by nested
    /// finite differences with a widened step unless the model provides it.
    pub fn trace_term(
        &self,
        v: &dyn Potential,
        j_matrix: &ComplexMatrix,
        q_prime: &RealVec,
        q: &RealVec,
    ) -> Result<ComplexMatrix> {
        if self.config.use_analytic {
            if let Some(t) = v.analytic_trace_term(j_matrix, q_prime, q) {
                return Ok(t);
            }
        }
        let h_inner = self.fd_step(v);
        let h = 5.0 * h_inner;
        let dim = q.dim();
        let g = |x: &RealVec| -> Result<Complex64> {
            let b = match self.analytic_hess_qq(v, x, q) {
                Some(m) => m,
                None => self.fd_hessian(v, x, q, h_inner, false)?,
            };
            Ok(j_matrix.matmul(&b.to_complex()).trace())
        };
        let g0 = g(q_prime)?;
        let mut out = ComplexMatrix::zeros(dim)?;
        for a in 0..dim {
            let mut pp = *q_prime;
            pp.set(a, q_prime.get(a) + h);
            let mut pm = *q_prime;
            pm.set(a, q_prime.get(a) - h);
            out.set(a, a, (g(&pp)? - 2.0 * g0 + g(&pm)?) / (h * h));
            for bidx in (a + 1)..dim {
                let mut s = Complex64::new(0.0, 0.0);
                for (sa, sb, sign) in
                    [(h, h, 1.0), (h, -h, -1.0), (-h, h, -1.0), (-h, -h, 1.0)]
                {
                    let mut p = *q_prime;
                    p.set(a, q_prime.get(a) + sa);
                    p.set(bidx, q_prime.get(bidx) + sb);
                    s += sign * g(&p)?;
                }
                let val = s / (4.0 * h * h);
                out.set(a, bidx, val);
                out.set(bidx, a, val);
            }
        }
        Ok(out)
    }

    /// The leading-order shape-matrix correction Delta Omega at t, evaluated
    /// on the straight segment from q to q' = q + v t.
    pub fn delta_omega(
        &self,
        packet: &GaussianPacket,
        v: &dyn Potential,
        t: f64,
    ) -> Result<ComplexMatrix> {
        let mu = packet.mass();
        let q = *packet.position();
        let q_prime = q.add(&packet.velocity().scale(t));
        let blocks = self.u_derivatives(v, &q_prime, &q)?;
        let j = self.j_matrix(packet, t)?;
        let trace_term = self.trace_term(v, &j, &q_prime, &q)?;

        let b = blocks.hess_qq.to_complex();
        let m = blocks.hess_qpq.to_complex();
        let c = blocks.hess_qpqp.to_complex();

        let mut bracket = j.matmul(&b).matmul(&j);
        bracket = bracket.add(&j.matmul(&m));
        bracket = bracket.add(&m.transpose().matmul(&j));
        bracket = bracket.add(&c);
        bracket = bracket.add(&trace_term.scale(Complex64::new(0.0, HBAR * t / (2.0 * mu))));

        let delta = bracket.scale(Complex64::new(-t / mu, 0.0));
        let dev = delta.symmetry_deviation();
        if dev > 1e-9 {
            return Err(Error::NotSymmetric { deviation: dev, tolerance: 1e-9 });
        }
        Ok(delta.symmetrize())
    }

    /// Omega_eff = Omega' + Delta Omega.
    pub fn effective_omega(
        &self,
        packet: &GaussianPacket,
        v: &dyn Potential,
        t: f64,
    ) -> Result<ComplexMatrix> {
        let omega_prime = evolve_omega(packet.omega(), t)?;
        Ok(omega_prime.add(&self.delta_omega(packet, v, t)?))
    }

    /// Internal-MAM shift Delta L, in u um^2/ms (divide by hbar for units
    /// of hbar). Always three components.
    pub fn delta_mam(
        &self,
        packet: &GaussianPacket,
        v: &dyn Potential,
        t: f64,
    ) -> Result<RealVec> {
        let delta_omega = self.delta_omega(packet, v, t)?;
        let omega_prime = evolve_omega(packet.omega(), t)?;
        delta_mam_from_parts(&delta_omega, &omega_prime)
    }
}

/// Delta L = (hbar/2) axial{[dOm_Re, (Om'_Im)^-1]
///                          + [(Om'_Im)^-1 dOm_Im (Om'_Im)^-1, Om'_Re]}.
pub fn delta_mam_from_parts(
    delta_omega: &ComplexMatrix,
    omega_prime: &ComplexMatrix,
) -> Result<RealVec> {
    let im_inv = omega_prime.imag_part().inverse()?;
    let first = commutator_real(&delta_omega.real_part(), &im_inv)?;
    let sandwich = im_inv.matmul(&delta_omega.imag_part()).matmul(&im_inv);
    let second = commutator_real(&sandwich, &omega_prime.real_part())?;
    let total = first.add(&second).antisymmetrize();
    Ok(axial(&total)?.scale(HBAR / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{ConstantPotential, LinearPotential, ZeroPotential};
    use approx::assert_relative_eq;

    fn packet() -> GaussianPacket {
        GaussianPacket::isotropic_diagonal(
            7.016003,
            RealVec::new2(-300.0, 0.0),
            RealVec::new2(4.0, 0.0),
            &[0.01, 0.005],
        )
        .unwrap()
    }

    #[test]
    fn line_average_of_constant() {
        let engine = EikonalEngine::with_defaults();
        let v = ConstantPotential(3.7);
        let u = engine
            .line_average(&v, &RealVec::new2(5.0, -2.0), &RealVec::new2(-1.0, 9.0))
            .unwrap();
        assert_relative_eq!(u, 3.7, max_relative = 1e-13);
    }

    #[test]
    fn line_average_of_linear_is_midpoint_value() {
        let engine = EikonalEngine::with_defaults();
        let v = LinearPotential {
            gradient: RealVec::new2(0.4, -1.1),
            offset: 0.2,
            length_scale: 10.0,
        };
        let x = RealVec::new2(6.0, 2.0);
        let y = RealVec::new2(-2.0, 8.0);
        let mid = x.add(&y).scale(0.5);
        let u = engine.line_average(&v, &x, &y).unwrap();
        assert_relative_eq!(u, v.value(&mid), max_relative = 1e-13);
    }

    #[test]
    fn line_average_symmetric_in_endpoints() {
        struct Quartic;
        impl Potential for Quartic {
            fn value(&self, x: &RealVec) -> f64 {
                let r2 = x.dot(x);
                r2 * r2 * 1e-4 + x.get(0) * x.get(1)
            }
            fn length_scale(&self) -> f64 {
                5.0
            }
            fn strength_scale(&self) -> f64 {
                1.0
            }
        }
        let engine = EikonalEngine::with_defaults();
        let x = RealVec::new2(3.0, -1.0);
        let y = RealVec::new2(-2.0, 4.0);
        let uxy = engine.line_average(&Quartic, &x, &y).unwrap();
        let uyx = engine.line_average(&Quartic, &y, &x).unwrap();
        assert_relative_eq!(uxy, uyx, max_relative = 1e-12);
    }

    #[test]
    fn line_average_rejects_non_finite_sample() {
        struct Nan;
        impl Potential for Nan {
            fn value(&self, _x: &RealVec) -> f64 {
                f64::NAN
            }
            fn length_scale(&self) -> f64 {
                1.0
            }
            fn strength_scale(&self) -> f64 {
                1.0
            }
        }
        let engine = EikonalEngine::with_defaults();
        match engine.line_average(&Nan, &RealVec::new2(1.0, 0.0), &RealVec::new2(0.0, 0.0)) {
            Err(Error::NonFinitePotential { .. }) => {}
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn u_derivatives_of_zero_potential_vanish() {
        let engine = EikonalEngine::new(EikonalConfig {
            use_analytic: false,
            ..EikonalConfig::default()
        });
        let v = ZeroPotential { dim: 2 };
        let blocks = engine
            .u_derivatives(&v, &RealVec::new2(300.0, 0.0), &RealVec::new2(-300.0, 0.0))
            .unwrap();
        assert!(blocks.grad_q.norm() == 0.0);
        assert!(blocks.hess_qq.max_abs() == 0.0);
        assert!(blocks.hess_qpq.max_abs() == 0.0);
        assert!(blocks.hess_qpqp.max_abs() == 0.0);
    }

    #[test]
    fn u_derivatives_rejects_degenerate_segment() {
        let engine = EikonalEngine::with_defaults();
        let v = ConstantPotential(1.0);
        let q = RealVec::new2(1.0, 2.0);
        assert!(matches!(engine.u_derivatives(&v, &q, &q), Err(Error::DegenerateSegment)));
    }

    #[test]
    fn hatted_reduce_to_free_for_zero_potential() {
        let engine = EikonalEngine::with_defaults();
        let p = packet();
        let t = 80.0;
        let free = p.free_propagate(t).unwrap();
        let x = RealVec::new2(20.0, -5.0);
        let hatted = engine
            .hatted_quantities(&p, &ZeroPotential { dim: 2 }, &x, t)
            .unwrap();
        assert!(hatted.velocity.sub(p.velocity()).norm() < 1e-14);
        assert!(hatted.position.sub(free.position()).norm() < 1e-10);
        assert!(hatted.omega.sub(free.omega()).max_abs() < 1e-12);
        assert_relative_eq!(hatted.phase, free.phase(), epsilon = 1e-10);
    }

    #[test]
    fn hatted_linear_potential_closed_form() {
        // for V = g.x the line average is V at the midpoint, so
        // a = dU/dq = g/2 and B = 0: v_hat = v - a t / mu, Omega_hat = Omega'
        let engine = EikonalEngine::with_defaults();
        let p = packet();
        let t = 50.0;
        let grad = RealVec::new2(2e-4, -3e-4);
        let v = LinearPotential { gradient: grad, offset: 0.0, length_scale: 1000.0 };
        let x = p.position().add(&p.velocity().scale(t));
        let hatted = engine.hatted_quantities(&p, &v, &x, t).unwrap();
        let expected_v = p.velocity().sub(&grad.scale(0.5 * t / p.mass()));
        assert!(hatted.velocity.sub(&expected_v).norm() < 1e-9);
        let free = p.free_propagate(t).unwrap();
        assert!(hatted.omega.sub(free.omega()).max_abs() < 1e-9);
    }

    #[test]
    fn wavefunction_reduces_to_free_propagation() {
        let engine = EikonalEngine::with_defaults();
        let p = packet();
        let t = 150.0;
        let free = p.free_propagate(t).unwrap();
        let zero = ZeroPotential { dim: 2 };
        for x in [
            RealVec::new2(300.0, 0.0),
            RealVec::new2(280.0, 30.0),
            RealVec::new2(350.0, -60.0),
        ] {
            let eik = engine.wavefunction(&p, &zero, &x, t).unwrap();
            let exact = free.evaluate(&x).unwrap();
            assert_relative_eq!(eik.re, exact.re, max_relative = 1e-12, epsilon = 1e-30);
            assert_relative_eq!(eik.im, exact.im, max_relative = 1e-12, epsilon = 1e-30);
        }
    }

    #[test]
    fn wavefunction_tail_is_negligible() {
        let engine = EikonalEngine::with_defaults();
        let p = packet();
        let zero = ZeroPotential { dim: 2 };
        let t = 150.0;
        let free = p.free_propagate(t).unwrap();
        let peak = engine
            .wavefunction(&p, &zero, free.position(), t)
            .unwrap()
            .norm();
        // 8 propagated widths off-axis
        let w2 = free.axis_width(1);
        let far = RealVec::new2(free.position().get(0), 8.0 * w2);
        let tail = engine.wavefunction(&p, &zero, &far, t).unwrap().norm();
        assert!(tail < 1e-10 * peak);
    }

    #[test]
    fn j_matrix_cases() {
        let engine = EikonalEngine::with_defaults();
        let p = packet();
        let id = ComplexMatrix::identity(2).unwrap();
        assert!(engine.j_matrix(&p, 0.0).unwrap().sub(&id).max_abs() < 1e-14);

        // paper setup t = 2q/v: diag(1/(1 + i 2 q w_j / v))
        let t: f64 = 150.0;
        let j = engine.j_matrix(&p, t).unwrap();
        for (i, w) in [0.01, 0.005].iter().enumerate() {
            let expected = Complex64::new(1.0, 0.0) / Complex64::new(1.0, t * w);
            assert_relative_eq!(j.get(i, i).re, expected.re, max_relative = 1e-12);
            assert_relative_eq!(j.get(i, i).im, expected.im, max_relative = 1e-12);
        }

        // (I + Omega t) J = I
        let mut plus = ComplexMatrix::identity(2).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                plus.set(i, k, plus.get(i, k) + p.omega().get(i, k) * t);
            }
        }
        assert!(plus.matmul(&j).sub(&id).max_abs() <= 1e-12);
    }

    #[test]
    fn delta_quantities_vanish_for_zero_potential() {
        let engine = EikonalEngine::new(EikonalConfig {
            use_analytic: false,
            ..EikonalConfig::default()
        });
        let p = packet();
        let zero = ZeroPotential { dim: 2 };
        let t = 150.0;
        let delta = engine.delta_omega(&p, &zero, t).unwrap();
        assert!(delta.max_abs() < 1e-20);
        let dl = engine.delta_mam(&p, &zero, t).unwrap();
        assert!(dl.norm() < 1e-15);
        let eff = engine.effective_omega(&p, &zero, t).unwrap();
        let free = evolve_omega(p.omega(), t).unwrap();
        assert!(eff.sub(&free).max_abs() < 1e-18);
    }
}
