//! Dense real/complex vector and matrix algebra for dimensions 2 and 3.
//!
//! Storage is a fixed 3x3 block (row stride 3) regardless of the active
//! dimension, so no allocation happens anywhere in the hot paths. The axial
//! map and the commutator are the two operations that carry the angular
//! momentum formulas; everything else is plumbing around them.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance used when checking (anti)symmetry of matrices that come
/// out of finite differencing.
pub const SYMMETRY_TOL: f64 = 1e-10;

const DET_FLOOR: f64 = 1e-300;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::BadDimension(dim))
    }
}

/// Real column vector, dimension 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealVec {
    dim: usize,
    data: [f64; 3],
}

impl RealVec {
    pub fn new2(x1: f64, x2: f64) -> Self {
        Self { dim: 2, data: [x1, x2, 0.0] }
    }

    pub fn new3(x1: f64, x2: f64, x3: f64) -> Self {
        Self { dim: 3, data: [x1, x2, x3] }
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, data: [0.0; 3] })
    }

    pub fn from_slice(components: &[f64]) -> Result<Self> {
        check_dim(components.len())?;
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { context: "RealVec components".into() });
        }
        let mut data = [0.0; 3];
        data[..components.len()].copy_from_slice(components);
        Ok(Self { dim: components.len(), data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize) -> f64 {
        debug_assert!(i < self.dim);
        self.data[i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        debug_assert!(i < self.dim);
        self.data[i] = value;
    }

    pub fn components(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    pub fn dot(&self, other: &RealVec) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, factor: f64) -> RealVec {
        let mut out = *self;
        for c in &mut out.data {
            *c *= factor;
        }
        out
    }

    pub fn add(&self, other: &RealVec) -> RealVec {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for (c, o) in out.data.iter_mut().zip(other.data.iter()) {
            *c += o;
        }
        out
    }

    pub fn sub(&self, other: &RealVec) -> RealVec {
        self.add(&other.scale(-1.0))
    }

    /// Cross product. Both operands are promoted to three components, so a
    /// pair of 2-D vectors yields the out-of-plane component in slot 3.
    pub fn cross(&self, other: &RealVec) -> RealVec {
        let a = self.data;
        let b = other.data;
        RealVec::new3(
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        )
    }
}

/// Real square matrix, dimension 2 or 3, row-major with stride 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealMatrix {
    dim: usize,
    data: [f64; 9],
}

impl RealMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, data: [0.0; 9] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        Ok(m)
    }

    pub fn from_rows2(rows: [[f64; 2]; 2]) -> Self {
        let mut m = Self { dim: 2, data: [0.0; 9] };
        for i in 0..2 {
            for j in 0..2 {
                m.set(i, j, rows[i][j]);
            }
        }
        m
    }

    pub fn from_rows3(rows: [[f64; 3]; 3]) -> Self {
        let mut m = Self { dim: 3, data: [0.0; 9] };
        for i in 0..3 {
            for j in 0..3 {
                m.set(i, j, rows[i][j]);
            }
        }
        m
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(entries.len())?;
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * 3 + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * 3 + j] = value;
    }

    pub fn transpose(&self) -> RealMatrix {
        let mut out = Self { dim: self.dim, data: [0.0; 9] };
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(i, j, self.get(j, i));
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> RealMatrix {
        let mut out = *self;
        for e in &mut out.data {
            *e *= factor;
        }
        out
    }

    pub fn add(&self, other: &RealMatrix) -> RealMatrix {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for (e, o) in out.data.iter_mut().zip(other.data.iter()) {
            *e += o;
        }
        out
    }

    pub fn sub(&self, other: &RealMatrix) -> RealMatrix {
        self.add(&other.scale(-1.0))
    }

    pub fn matmul(&self, other: &RealMatrix) -> RealMatrix {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = Self { dim: self.dim, data: [0.0; 9] };
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut s = 0.0;
                for k in 0..self.dim {
                    s += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn matvec(&self, v: &RealVec) -> RealVec {
        debug_assert_eq!(self.dim, v.dim());
        let mut out = RealVec { dim: self.dim, data: [0.0; 3] };
        for i in 0..self.dim {
            let mut s = 0.0;
            for j in 0..self.dim {
                s += self.get(i, j) * v.get(j);
            }
            out.data[i] = s;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, e| m.max(e.abs()))
    }

    pub fn det(&self) -> f64 {
        match self.dim {
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            3 => {
                self.get(0, 0) * (self.get(1, 1) * self.get(2, 2) - self.get(1, 2) * self.get(2, 1))
                    - self.get(0, 1)
                        * (self.get(1, 0) * self.get(2, 2) - self.get(1, 2) * self.get(2, 0))
                    + self.get(0, 2)
                        * (self.get(1, 0) * self.get(2, 1) - self.get(1, 1) * self.get(2, 0))
            }
            _ => unreachable!(),
        }
    }

    pub fn inverse(&self) -> Result<RealMatrix> {
        Ok(self.to_complex().inverse()?.real_part())
    }

    /// Largest deviation from symmetry, relative to the largest entry.
    pub fn symmetry_deviation(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut dev = 0.0f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                dev = dev.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        dev / scale
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.symmetry_deviation() <= tol
    }

    pub fn symmetrize(&self) -> RealMatrix {
        self.add(&self.transpose()).scale(0.5)
    }

    pub fn antisymmetrize(&self) -> RealMatrix {
        self.sub(&self.transpose()).scale(0.5)
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix { dim: self.dim, data: [Complex64::new(0.0, 0.0); 9] };
        for (e, r) in out.data.iter_mut().zip(self.data.iter()) {
            *e = Complex64::new(*r, 0.0);
        }
        out
    }
}

/// Complex square matrix, dimension 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: [Complex64; 9],
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, data: [Complex64::new(0.0, 0.0); 9] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        Ok(m)
    }

    pub fn from_parts(re: &RealMatrix, im: &RealMatrix) -> Result<Self> {
        if re.dim() != im.dim() {
            return Err(Error::DimensionMismatch(re.dim(), im.dim()));
        }
        let mut out = Self::zeros(re.dim())?;
        for i in 0..re.dim() {
            for j in 0..re.dim() {
                out.set(i, j, Complex64::new(re.get(i, j), im.get(i, j)));
            }
        }
        Ok(out)
    }

    pub fn diagonal(entries: &[Complex64]) -> Result<Self> {
        let mut m = Self::zeros(entries.len())?;
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * 3 + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[i * 3 + j] = value;
    }

    pub fn real_part(&self) -> RealMatrix {
        let mut out = RealMatrix { dim: self.dim, data: [0.0; 9] };
        for (r, e) in out.data.iter_mut().zip(self.data.iter()) {
            *r = e.re;
        }
        out
    }

    pub fn imag_part(&self) -> RealMatrix {
        let mut out = RealMatrix { dim: self.dim, data: [0.0; 9] };
        for (r, e) in out.data.iter_mut().zip(self.data.iter()) {
            *r = e.im;
        }
        out
    }

    pub fn transpose(&self) -> ComplexMatrix {
        let mut out = Self { dim: self.dim, data: [Complex64::new(0.0, 0.0); 9] };
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(i, j, self.get(j, i));
            }
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> ComplexMatrix {
        let mut out = *self;
        for e in &mut out.data {
            *e *= factor;
        }
        out
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for (e, o) in out.data.iter_mut().zip(other.data.iter()) {
            *e += o;
        }
        out
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = Self { dim: self.dim, data: [Complex64::new(0.0, 0.0); 9] };
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..self.dim {
                    s += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, e| m.max(e.norm()))
    }

    pub fn det(&self) -> Complex64 {
        match self.dim {
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            3 => {
                self.get(0, 0) * (self.get(1, 1) * self.get(2, 2) - self.get(1, 2) * self.get(2, 1))
                    - self.get(0, 1)
                        * (self.get(1, 0) * self.get(2, 2) - self.get(1, 2) * self.get(2, 0))
                    + self.get(0, 2)
                        * (self.get(1, 0) * self.get(2, 1) - self.get(1, 1) * self.get(2, 0))
            }
            _ => unreachable!(),
        }
    }

    /// Closed-form adjugate inverse. Entries are scaled by the largest
    /// magnitude before the determinant floor is applied.
    pub fn inverse(&self) -> Result<ComplexMatrix> {
        let scale = self.max_abs();
        if scale == 0.0 {
            return Err(Error::SingularMatrix { det_abs: 0.0 });
        }
        let scaled = self.scale(Complex64::new(1.0 / scale, 0.0));
        let det = scaled.det();
        if det.norm() <= DET_FLOOR {
            return Err(Error::SingularMatrix { det_abs: det.norm() });
        }
        let inv_det = Complex64::new(1.0, 0.0) / det;
        let mut out = Self { dim: self.dim, data: [Complex64::new(0.0, 0.0); 9] };
        match self.dim {
            2 => {
                out.set(0, 0, scaled.get(1, 1) * inv_det);
                out.set(0, 1, -scaled.get(0, 1) * inv_det);
                out.set(1, 0, -scaled.get(1, 0) * inv_det);
                out.set(1, 1, scaled.get(0, 0) * inv_det);
            }
            3 => {
                for i in 0..3 {
                    for j in 0..3 {
                        // cofactor of (j, i), expanded by hand
                        let r = [(j + 1) % 3, (j + 2) % 3];
                        let c = [(i + 1) % 3, (i + 2) % 3];
                        let cof = scaled.get(r[0], c[0]) * scaled.get(r[1], c[1])
                            - scaled.get(r[0], c[1]) * scaled.get(r[1], c[0]);
                        out.set(i, j, cof * inv_det);
                    }
                }
            }
            _ => unreachable!(),
        }
        Ok(out.scale(Complex64::new(1.0 / scale, 0.0)))
    }

    pub fn symmetry_deviation(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut dev = 0.0f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                dev = dev.max((self.get(i, j) - self.get(j, i)).norm());
            }
        }
        dev / scale
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.symmetry_deviation() <= tol
    }

    pub fn symmetrize(&self) -> ComplexMatrix {
        self.add(&self.transpose()).scale(Complex64::new(0.5, 0.0))
    }
}

/// Axial vector of an antisymmetric matrix: the unique `m` with
/// `M u = m x u`. Always returns three components; for a 2-D matrix only the
/// out-of-plane slot is populated. The input is antisymmetrized internally
/// after a tolerance check.
pub fn axial(m: &RealMatrix) -> Result<RealVec> {
    axial_with_tol(m, SYMMETRY_TOL)
}

pub fn axial_with_tol(m: &RealMatrix, tol: f64) -> Result<RealVec> {
    let scale = m.max_abs();
    if scale > 0.0 {
        let dev = m.add(&m.transpose()).max_abs() / scale;
        if dev > tol {
            return Err(Error::NotAntisymmetric { deviation: dev });
        }
    }
    let a = m.antisymmetrize();
    match m.dim() {
        2 => Ok(RealVec::new3(0.0, 0.0, a.get(1, 0))),
        3 => Ok(RealVec::new3(a.get(2, 1), a.get(0, 2), a.get(1, 0))),
        d => Err(Error::BadDimension(d)),
    }
}

/// Commutator `AB - BA`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(a.matmul(b).sub(&b.matmul(a)))
}

/// Real-matrix commutator `AB - BA`.
pub fn commutator_real(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(a.matmul(b).sub(&b.matmul(a)))
}

/// Positive-definiteness of a symmetric real matrix via leading principal
/// minors (Sylvester's criterion; exact enough for dim <= 3).
pub fn is_positive_definite(s: &RealMatrix) -> Result<bool> {
    is_positive_definite_with_tol(s, SYMMETRY_TOL)
}

pub fn is_positive_definite_with_tol(s: &RealMatrix, tol: f64) -> Result<bool> {
    let dev = s.symmetry_deviation();
    if dev > tol {
        return Err(Error::NotSymmetric { deviation: dev, tolerance: tol });
    }
    let m = s.symmetrize();
    let minor1 = m.get(0, 0);
    let minor2 = m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0);
    let mut ok = minor1 > 0.0 && minor2 > 0.0;
    if m.dim() == 3 {
        ok = ok && m.det() > 0.0;
    }
    Ok(ok)
}
