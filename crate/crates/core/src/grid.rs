//! 2-D split-step Fourier solution of the time-dependent Schroedinger
//! equation, with observable extraction (norm, mean position and velocity,
//! total and internal MAM about the packet center).
//!
//! Strang splitting: a half potential phase in real space, the exact kinetic
//! phase in momentum space, another half potential phase. The method is
//! unitary up to roundoff for any bounded static potential.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read as IoRead, Write as IoWrite};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::packet::GaussianPacket;
use crate::potential::Potential;
use crate::tensor::RealVec;
use crate::units::HBAR;

/// Norm drift tolerated per 1000 steps before a run aborts.
const NORM_DRIFT_LIMIT: f64 = 1e-8;
/// Largest kinetic phase per step allowed at the packet's occupied
/// bandwidth (carrier plus six spectral widths per axis).
const KINETIC_PHASE_LIMIT: f64 = std::f64::consts::FRAC_PI_4;

const CHECKPOINT_MAGIC: &[u8; 4] = b"WPCK";
const CHECKPOINT_VERSION: u32 = 1;

/// Uniform periodic grid over a rectangle, point counts restricted to
/// powers of two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    n1: usize,
    n2: usize,
    x1_min: f64,
    x1_max: f64,
    x2_min: f64,
    x2_max: f64,
}

impl Grid2D {
    pub fn new(
        n1: usize,
        n2: usize,
        x1_min: f64,
        x1_max: f64,
        x2_min: f64,
        x2_max: f64,
    ) -> Result<Self> {
        for (label, n) in [("n1", n1), ("n2", n2)] {
            if n < 8 || n & (n - 1) != 0 {
                return Err(Error::GridConfig(format!(
                    "{label} = {n} must be a power of two and at least 8"
                )));
            }
        }
        if !(x1_max > x1_min && x2_max > x2_min) {
            return Err(Error::GridConfig("grid extents are empty".into()));
        }
        Ok(Self { n1, n2, x1_min, x1_max, x2_min, x2_max })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn extents(&self) -> (f64, f64, f64, f64) {
        (self.x1_min, self.x1_max, self.x2_min, self.x2_max)
    }

    pub fn dx1(&self) -> f64 {
        (self.x1_max - self.x1_min) / self.n1 as f64
    }

    pub fn dx2(&self) -> f64 {
        (self.x2_max - self.x2_min) / self.n2 as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx1() * self.dx2()
    }

    pub fn x1(&self, i: usize) -> f64 {
        self.x1_min + i as f64 * self.dx1()
    }

    pub fn x2(&self, j: usize) -> f64 {
        self.x2_min + j as f64 * self.dx2()
    }

    /// FFT wavenumber along axis 1 for row index i.
    pub fn k1(&self, i: usize) -> f64 {
        let signed = if i < self.n1 / 2 { i as f64 } else { i as f64 - self.n1 as f64 };
        2.0 * std::f64::consts::PI * signed / (self.x1_max - self.x1_min)
    }

    pub fn k2(&self, j: usize) -> f64 {
        let signed = if j < self.n2 / 2 { j as f64 } else { j as f64 - self.n2 as f64 };
        2.0 * std::f64::consts::PI * signed / (self.x2_max - self.x2_min)
    }

    /// Resolution and padding checks for a packet travelling for
    /// `total_time`. Every violated ratio is reported.
    pub fn validate_for_packet(&self, packet: &GaussianPacket, total_time: f64) -> Result<()> {
        let mut violations = Vec::new();
        let speed = packet.velocity().norm();
        if speed > 0.0 {
            let lambda = 2.0 * std::f64::consts::PI * HBAR / (packet.mass() * speed);
            for (label, dx) in [("dx1", self.dx1()), ("dx2", self.dx2())] {
                let ratio = dx / (lambda / 8.0);
                if ratio > 1.0 {
                    violations.push(format!(
                        "{label} = {dx:.4} um exceeds lambda_dB/8 = {:.4} um (ratio {ratio:.2})",
                        lambda / 8.0
                    ));
                }
            }
        }
        let end = packet.position().add(&packet.velocity().scale(total_time));
        for (which, pos) in [("start", *packet.position()), ("end", end)] {
            for axis in 0..2 {
                let width = packet.axis_width(axis);
                let (lo, hi) = if axis == 0 {
                    (self.x1_min, self.x1_max)
                } else {
                    (self.x2_min, self.x2_max)
                };
                let pad = (pos.get(axis) - lo).min(hi - pos.get(axis));
                let ratio = pad / (6.0 * width);
                if ratio < 1.0 {
                    violations.push(format!(
                        "padding at {which}, axis {}: {pad:.1} um is below 6 widths = {:.1} um (ratio {ratio:.2})",
                        axis + 1,
                        6.0 * width
                    ));
                }
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::GridConfig(violations.join("; ")))
        }
    }
}

/// Discretized complex amplitude, row-major with index `i1 * n2 + i2`.
#[derive(Debug, Clone)]
pub struct WaveField {
    grid: Grid2D,
    amplitudes: Vec<Complex64>,
    time: f64,
    /// |1 - norm| of the raw samples before the single renormalization.
    sampling_norm_defect: f64,
}

impl WaveField {
    /// Sample a packet on the grid and renormalize once.
    pub fn from_packet(packet: &GaussianPacket, grid: &Grid2D, total_time: f64) -> Result<Self> {
        grid.validate_for_packet(packet, total_time)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); grid.len()];
        for i1 in 0..grid.n1() {
            let x1 = grid.x1(i1);
            for i2 in 0..grid.n2() {
                let x = RealVec::new2(x1, grid.x2(i2));
                amplitudes[i1 * grid.n2() + i2] = packet.evaluate(&x)?;
            }
        }
        let raw_norm: f64 =
            amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.cell_area();
        let defect = (1.0 - raw_norm).abs();
        if defect > 1e-6 {
            return Err(Error::GridConfig(format!(
                "sampled norm {raw_norm:.8} is too far from 1; insufficient resolution or padding"
            )));
        }
        let scale = raw_norm.sqrt().recip();
        for a in &mut amplitudes {
            *a *= scale;
        }
        Ok(Self { grid: *grid, amplitudes, time: 0.0, sampling_norm_defect: defect })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn sampling_norm_defect(&self) -> f64 {
        self.sampling_norm_defect
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude_at(&self, i1: usize, i2: usize) -> Complex64 {
        self.amplitudes[i1 * self.grid.n2() + i2]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    /// Grid node closest to a position.
    pub fn nearest_index(&self, x: &RealVec) -> (usize, usize) {
        let i1 = ((x.get(0) - self.grid.x1_min) / self.grid.dx1()).round() as isize;
        let i2 = ((x.get(1) - self.grid.x2_min) / self.grid.dx2()).round() as isize;
        (
            i1.clamp(0, self.grid.n1() as isize - 1) as usize,
            i2.clamp(0, self.grid.n2() as isize - 1) as usize,
        )
    }

    /// Binary checkpoint. Layout, all little-endian:
    /// magic "WPCK", version u32, n1 u32, n2 u32,
    /// x1_min/x1_max/x2_min/x2_max f64, time f64,
    /// then n1*n2 complex amplitudes as (re f64, im f64) pairs, row-major.
    pub fn save_checkpoint<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.n1() as u32).to_le_bytes())?;
        w.write_all(&(self.grid.n2() as u32).to_le_bytes())?;
        for v in [
            self.grid.x1_min,
            self.grid.x1_max,
            self.grid.x2_min,
            self.grid.x2_max,
            self.time,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for a in &self.amplitudes {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_checkpoint<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::CheckpointFormat("bad magic".into()));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointFormat(format!("unsupported version {version}")));
        }
        r.read_exact(&mut u32buf)?;
        let n1 = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u32buf)?;
        let n2 = u32::from_le_bytes(u32buf) as usize;
        let mut f64buf = [0u8; 8];
        let mut reals = [0.0f64; 5];
        for v in &mut reals {
            r.read_exact(&mut f64buf)?;
            *v = f64::from_le_bytes(f64buf);
        }
        let grid = Grid2D::new(n1, n2, reals[0], reals[1], reals[2], reals[3])?;
        let mut amplitudes = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut f64buf)?;
            let re = f64::from_le_bytes(f64buf);
            r.read_exact(&mut f64buf)?;
            let im = f64::from_le_bytes(f64buf);
            amplitudes.push(Complex64::new(re, im));
        }
        Ok(Self { grid, amplitudes, time: reals[4], sampling_norm_defect: 0.0 })
    }
}

/// One sample of the observable time series. Angular momenta are in units
/// of hbar.
#[derive(Debug, Clone, Copy)]
pub struct ObservableRecord {
    pub t: f64,
    pub norm: f64,
    pub mean_position: RealVec,
    pub mean_velocity: RealVec,
    pub mam_total3: f64,
    pub mam_internal3: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ObservableSeries {
    pub records: Vec<ObservableRecord>,
}

impl ObservableSeries {
    /// Mean internal MAM over the trailing fraction of the series.
    pub fn plateau_internal(&self, fraction: f64) -> Option<f64> {
        if self.records.is_empty() {
            return None;
        }
        let tail = ((self.records.len() as f64 * fraction).ceil() as usize).max(1);
        let slice = &self.records[self.records.len() - tail..];
        Some(slice.iter().map(|r| r.mam_internal3).sum::<f64>() / slice.len() as f64)
    }

    /// Time and value of the largest |internal MAM|.
    pub fn peak_abs_internal(&self) -> Option<(f64, f64)> {
        self.records
            .iter()
            .max_by(|a, b| {
                a.mam_internal3
                    .abs()
                    .partial_cmp(&b.mam_internal3.abs())
                    .expect("finite observables")
            })
            .map(|r| (r.t, r.mam_internal3))
    }
}

struct Fft2 {
    n1: usize,
    n2: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    transpose: Vec<Complex64>,
}

impl Fft2 {
    fn new(n1: usize, n2: usize) -> Self {
        let mut planner = FftPlanner::new();
        let row_fwd = planner.plan_fft_forward(n2);
        let row_inv = planner.plan_fft_inverse(n2);
        let col_fwd = planner.plan_fft_forward(n1);
        let col_inv = planner.plan_fft_inverse(n1);
        let scratch_len = row_fwd
            .get_inplace_scratch_len()
            .max(row_inv.get_inplace_scratch_len())
            .max(col_fwd.get_inplace_scratch_len())
            .max(col_inv.get_inplace_scratch_len());
        Self {
            n1,
            n2,
            row_fwd,
            row_inv,
            col_fwd,
            col_inv,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            transpose: vec![Complex64::new(0.0, 0.0); n1 * n2],
        }
    }

    fn transpose_into(&mut self, data: &[Complex64]) {
        for i1 in 0..self.n1 {
            for i2 in 0..self.n2 {
                self.transpose[i2 * self.n1 + i1] = data[i1 * self.n2 + i2];
            }
        }
    }

    fn transpose_back(&self, data: &mut [Complex64]) {
        for i1 in 0..self.n1 {
            for i2 in 0..self.n2 {
                data[i1 * self.n2 + i2] = self.transpose[i2 * self.n1 + i1];
            }
        }
    }

    /// Unnormalized forward transform, in place.
    fn forward(&mut self, data: &mut [Complex64]) {
        let row_fwd = self.row_fwd.clone();
        for row in data.chunks_exact_mut(self.n2) {
            row_fwd.process_with_scratch(row, &mut self.scratch);
        }
        self.transpose_into(data);
        let col_fwd = self.col_fwd.clone();
        for row in self.transpose.chunks_exact_mut(self.n1) {
            col_fwd.process_with_scratch(row, &mut self.scratch);
        }
        self.transpose_back(data);
    }

    /// Unnormalized inverse transform, in place; divide by n1*n2 to invert
    /// `forward`.
    fn inverse_unnormalized(&mut self, data: &mut [Complex64]) {
        let row_inv = self.row_inv.clone();
        for row in data.chunks_exact_mut(self.n2) {
            row_inv.process_with_scratch(row, &mut self.scratch);
        }
        self.transpose_into(data);
        let col_inv = self.col_inv.clone();
        for row in self.transpose.chunks_exact_mut(self.n1) {
            col_inv.process_with_scratch(row, &mut self.scratch);
        }
        self.transpose_back(data);
    }
}

/// Split-step engine bound to one grid, potential, mass and time step.
pub struct SplitStepPropagator {
    grid: Grid2D,
    mass: f64,
    dt: f64,
    /// exp(-i V dt / 2 hbar) per node.
    half_potential: Vec<Complex64>,
    /// exp(-i hbar |k|^2 dt / 2 mu) / (n1 n2) per node (inverse-FFT
    /// normalization folded in).
    kinetic: Vec<Complex64>,
    fft: Fft2,
    steps_since_norm_check: u64,
    reference_norm: f64,
}

impl SplitStepPropagator {
    pub fn new(grid: &Grid2D, potential: &dyn Potential, mass: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::GridConfig(format!("time step {dt} must be positive")));
        }
        let mut half_potential = Vec::with_capacity(grid.len());
        for i1 in 0..grid.n1() {
            for i2 in 0..grid.n2() {
                let v = potential.value(&RealVec::new2(grid.x1(i1), grid.x2(i2)));
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        context: format!("potential at grid node ({i1}, {i2})"),
                    });
                }
                half_potential.push(Complex64::new(0.0, -v * dt / (2.0 * HBAR)).exp());
            }
        }
        let norm_factor = 1.0 / grid.len() as f64;
        let mut kinetic = Vec::with_capacity(grid.len());
        for i1 in 0..grid.n1() {
            let k1 = grid.k1(i1);
            for i2 in 0..grid.n2() {
                let k2 = grid.k2(i2);
                let phase = -HBAR * (k1 * k1 + k2 * k2) * dt / (2.0 * mass);
                kinetic.push(Complex64::new(0.0, phase).exp() * norm_factor);
            }
        }
        Ok(Self {
            grid: *grid,
            mass,
            dt,
            half_potential,
            kinetic,
            fft: Fft2::new(grid.n1(), grid.n2()),
            steps_since_norm_check: 0,
            reference_norm: 1.0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// The kinetic phase per step must stay moderate over the packet's
    /// occupied bandwidth (carrier plus six spectral widths per axis) for
    /// the Strang error to stay controlled.
    pub fn check_time_step(&self, packet: &GaussianPacket) -> Result<()> {
        let mut k_occ_sq = 0.0;
        for axis in 0..2 {
            let omega = packet.omega().get(axis, axis);
            // 1-D momentum spread of a Gaussian with shape a + i b:
            // sigma_p^2 = mu hbar (a^2 + b^2) / (2 b)
            let sigma_k = (packet.mass() * (omega.norm_sqr()) / (2.0 * omega.im * HBAR)).sqrt();
            let carrier = packet.mass() * packet.velocity().get(axis).abs() / HBAR;
            k_occ_sq += (carrier + 6.0 * sigma_k).powi(2);
        }
        let phase = HBAR * k_occ_sq * self.dt / (2.0 * self.mass);
        if phase >= KINETIC_PHASE_LIMIT {
            return Err(Error::GridConfig(format!(
                "kinetic phase per step {phase:.3} rad at the occupied bandwidth exceeds pi/4; reduce dt"
            )));
        }
        Ok(())
    }

    /// One Strang step.
    pub fn step(&mut self, field: &mut WaveField) {
        for (a, p) in field.amplitudes.iter_mut().zip(&self.half_potential) {
            *a *= p;
        }
        self.fft.forward(&mut field.amplitudes);
        for (a, k) in field.amplitudes.iter_mut().zip(&self.kinetic) {
            *a *= k;
        }
        self.fft.inverse_unnormalized(&mut field.amplitudes);
        for (a, p) in field.amplitudes.iter_mut().zip(&self.half_potential) {
            *a *= p;
        }
        field.time += self.dt;
        self.steps_since_norm_check += 1;
    }

    /// Run `steps` steps with the periodic norm guard.
    pub fn run(&mut self, field: &mut WaveField, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step(field);
            if self.steps_since_norm_check >= 1000 {
                let norm = field.norm();
                let drift = (norm - self.reference_norm).abs();
                if drift > NORM_DRIFT_LIMIT {
                    return Err(Error::NormDrift {
                        drift,
                        limit: NORM_DRIFT_LIMIT,
                        steps: self.steps_since_norm_check,
                    });
                }
                self.reference_norm = norm;
                self.steps_since_norm_check = 0;
            }
        }
        Ok(())
    }

    /// Run while recording observables every `stride` steps (plus the
    /// initial and final instants).
    pub fn run_observed(
        &mut self,
        field: &mut WaveField,
        steps: u64,
        stride: u64,
    ) -> Result<ObservableSeries> {
        let stride = stride.max(1);
        let mut series = ObservableSeries::default();
        series.records.push(self.measure(field));
        let mut done = 0;
        while done < steps {
            let chunk = stride.min(steps - done);
            self.run(field, chunk)?;
            done += chunk;
            series.records.push(self.measure(field));
        }
        Ok(series)
    }

    /// Observables of the current field: positions by real-space quadrature,
    /// momenta and the angular-momentum integrand by spectral derivatives.
    pub fn measure(&mut self, field: &WaveField) -> ObservableRecord {
        let grid = &self.grid;
        let area = grid.cell_area();
        let psi = &field.amplitudes;

        let mut norm = 0.0;
        let mut x1_sum = 0.0;
        let mut x2_sum = 0.0;
        for i1 in 0..grid.n1() {
            let x1 = grid.x1(i1);
            for i2 in 0..grid.n2() {
                let w = psi[i1 * grid.n2() + i2].norm_sqr();
                norm += w;
                x1_sum += x1 * w;
                x2_sum += grid.x2(i2) * w;
            }
        }
        let density = norm;
        norm *= area;
        let mean_x1 = x1_sum / density;
        let mean_x2 = x2_sum / density;

        // momentum-space moments
        let mut spectrum = psi.clone();
        self.fft.forward(&mut spectrum);
        let mut pnorm = 0.0;
        let mut k1_sum = 0.0;
        let mut k2_sum = 0.0;
        for i1 in 0..grid.n1() {
            let k1 = grid.k1(i1);
            for i2 in 0..grid.n2() {
                let w = spectrum[i1 * grid.n2() + i2].norm_sqr();
                pnorm += w;
                k1_sum += k1 * w;
                k2_sum += grid.k2(i2) * w;
            }
        }
        let mean_p1 = HBAR * k1_sum / pnorm;
        let mean_p2 = HBAR * k2_sum / pnorm;

        // spectral derivative fields d psi / dx_j
        let mut d1 = spectrum.clone();
        let mut d2 = spectrum;
        let scale = 1.0 / grid.len() as f64;
        for i1 in 0..grid.n1() {
            let k1 = grid.k1(i1);
            for i2 in 0..grid.n2() {
                let idx = i1 * grid.n2() + i2;
                d1[idx] *= Complex64::new(0.0, k1 * scale);
                d2[idx] *= Complex64::new(0.0, grid.k2(i2) * scale);
            }
        }
        self.fft.inverse_unnormalized(&mut d1);
        self.fft.inverse_unnormalized(&mut d2);

        // <x_j p_k> = Re sum conj(psi) x_j (-i hbar dpsi/dx_k)
        let mut x1p2 = 0.0;
        let mut x2p1 = 0.0;
        for i1 in 0..grid.n1() {
            let x1 = grid.x1(i1);
            for i2 in 0..grid.n2() {
                let idx = i1 * grid.n2() + i2;
                let c = psi[idx].conj();
                let m2 = c * Complex64::new(0.0, -HBAR) * d2[idx];
                let m1 = c * Complex64::new(0.0, -HBAR) * d1[idx];
                x1p2 += x1 * m2.re;
                x2p1 += grid.x2(i2) * m1.re;
            }
        }
        x1p2 /= density;
        x2p1 /= density;

        let mam_total3 = (x1p2 - x2p1) / HBAR;
        let mam_internal3 = mam_total3 - (mean_x1 * mean_p2 - mean_x2 * mean_p1) / HBAR;

        ObservableRecord {
            t: field.time,
            norm,
            mean_position: RealVec::new2(mean_x1, mean_x2),
            mean_velocity: RealVec::new2(mean_p1 / self.mass, mean_p2 / self.mass),
            mam_total3,
            mam_internal3,
        }
    }
}
