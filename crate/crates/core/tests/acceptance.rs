//! End-to-end acceptance suite. Each numbered criterion prints one
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`,
//! or on failure); the test fails if any criterion fails.
//!
//! The grid criteria run full-size 1024x512 simulations; the whole suite
//! takes on the order of ten minutes on one core.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wavepacket_core::{
    axial, closed_form_delta_mam, commutator_real, ComplexMatrix, EikonalConfig, EikonalEngine,
    GaussianPacket, Grid2D, ObservableSeries, RealMatrix, RealVec, RidgeParams, ScenarioParams,
    SplitStepPropagator, WaveField, HBAR,
};

const PAPER_MASS: f64 = 7.016003;

fn paper_scenario() -> ScenarioParams {
    ScenarioParams { q: 300.0, v: 4.0, omega1: 0.01, omega2: 0.005, mass: PAPER_MASS }
}

fn default_grid() -> Grid2D {
    Grid2D::new(1024, 512, -600.0, 600.0, -300.0, 300.0).unwrap()
}

/// Full-size ridge (or free, V0 = 0) run; returns the observable series.
fn grid_run(
    omega1: f64,
    omega2: f64,
    v0_ev: f64,
    dt: f64,
    stride: u64,
) -> Result<ObservableSeries, String> {
    let scenario = ScenarioParams { omega1, omega2, ..paper_scenario() };
    let packet = scenario.initial_packet().map_err(|e| e.to_string())?;
    let t_total = scenario.crossing_time();
    let grid = default_grid();
    let mut field = WaveField::from_packet(&packet, &grid, t_total).map_err(|e| e.to_string())?;
    let ridge = RidgeParams::from_ev(v0_ev, 20.0).map_err(|e| e.to_string())?;
    let mut prop =
        SplitStepPropagator::new(&grid, &ridge, packet.mass(), dt).map_err(|e| e.to_string())?;
    prop.check_time_step(&packet).map_err(|e| e.to_string())?;
    let steps = (t_total / dt).round() as u64;
    prop.run_observed(&mut field, steps, stride).map_err(|e| e.to_string())
}

fn plateau(series: &ObservableSeries) -> f64 {
    series.plateau_internal(0.1).expect("non-empty series")
}

/// Criterion 1 + the grid half of criterion 6: one free 150 ms run at the
/// default resolution, checked pointwise against the analytic packet and
/// for internal-MAM constancy.
fn criterion_1_and_6_grid() -> (Result<(), String>, Result<(), String>) {
    let scenario = paper_scenario();
    let packet = scenario.initial_packet().unwrap();
    let t_total = scenario.crossing_time();
    let grid = default_grid();
    let mut field = WaveField::from_packet(&packet, &grid, t_total).unwrap();
    let zero = wavepacket_core::potential::ZeroPotential { dim: 2 };
    let dt = 0.05;
    let mut prop = SplitStepPropagator::new(&grid, &zero, packet.mass(), dt).unwrap();
    prop.check_time_step(&packet).unwrap();
    let started = Instant::now();
    let series = match prop.run_observed(&mut field, (t_total / dt).round() as u64, 20) {
        Ok(s) => s,
        Err(e) => return (Err(e.to_string()), Err(e.to_string())),
    };
    let elapsed = started.elapsed();

    let c1 = (|| {
        let exact = packet.free_propagate(t_total).map_err(|e| e.to_string())?;
        let (i1, i2) = field.nearest_index(exact.position());
        let x = RealVec::new2(grid.x1(i1), grid.x2(i2));
        let expected = exact.evaluate(&x).map_err(|e| e.to_string())?;
        let got = field.amplitude_at(i1, i2);
        let rel = (got - expected).norm() / expected.norm();
        if rel >= 1e-6 {
            return Err(format!("peak amplitude relative error {rel:.3e} >= 1e-6"));
        }
        let last = series.records.last().unwrap();
        let dx = last.mean_position.sub(exact.position()).norm();
        if dx >= 1e-3 {
            return Err(format!("<x> error {dx:.3e} um >= 1e-3 um"));
        }
        if elapsed.as_secs() > 300 {
            return Err(format!("run took {elapsed:?} > 5 min"));
        }
        Ok(())
    })();

    let c6_grid = (|| {
        let (min, max) = series
            .records
            .iter()
            .map(|r| r.mam_internal3)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let spread = max - min;
        if spread >= 1e-6 {
            return Err(format!("grid internal MAM varied by {spread:.3e} hbar >= 1e-6"));
        }
        Ok(())
    })();
    (c1, c6_grid)
}

fn random_scenario(rng: &mut ChaCha8Rng) -> (ScenarioParams, RidgeParams) {
    let q = rng.gen_range(200.0..500.0);
    let v = rng.gen_range(2.0..8.0);
    let mass = rng.gen_range(3.0..15.0);
    let omega1 = rng.gen_range(0.002..0.02);
    let omega2 = rng.gen_range(0.002..0.02);
    let ell = rng.gen_range(5.0..q / 12.0);
    // keep |V0| well below the kinetic scale mu v^2 / 2
    let magnitude = 10f64.powf(rng.gen_range(-16.0..-14.5));
    let v0_ev = if rng.gen_bool(0.5) { magnitude } else { -magnitude };
    (
        ScenarioParams { q, v, omega1, omega2, mass },
        RidgeParams::from_ev(v0_ev, ell).unwrap(),
    )
}

/// Criterion 2: closed form vs generic pipeline over random parameter sets.
fn criterion_2() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(20260823);
    let analytic = EikonalEngine::with_defaults();
    let fd = EikonalEngine::new(EikonalConfig {
        quad_order: 128,
        use_analytic: false,
        ..EikonalConfig::default()
    });
    for trial in 0..100 {
        let (scenario, ridge) = random_scenario(&mut rng);
        let packet = scenario.initial_packet().map_err(|e| e.to_string())?;
        let t = scenario.crossing_time();
        let closed = closed_form_delta_mam(&scenario, &ridge);
        let generic = analytic
            .delta_mam(&packet, &ridge, t)
            .map_err(|e| format!("trial {trial}: analytic pipeline: {e}"))?
            .get(2)
            / HBAR;
        let rel = (generic - closed).abs() / closed.abs().max(1e-300);
        if rel >= 1e-10 {
            return Err(format!(
                "trial {trial}: analytic pipeline off by {rel:.3e} (closed {closed:.6e}, generic {generic:.6e})"
            ));
        }
        let fd_value = fd
            .delta_mam(&packet, &ridge, t)
            .map_err(|e| format!("trial {trial}: FD pipeline: {e}"))?
            .get(2)
            / HBAR;
        let rel_fd = (fd_value - closed).abs() / closed.abs().max(1e-300);
        if rel_fd >= 1e-4 {
            return Err(format!(
                "trial {trial}: FD pipeline off by {rel_fd:.3e} (closed {closed:.6e}, fd {fd_value:.6e})"
            ));
        }
    }
    Ok(())
}

/// Criterion 3: Fig. 2 reproduction at exact paper parameters.
fn criterion_3() -> Result<(), String> {
    let expected = 3.2232e-3;
    for (label, omega1, omega2, sign) in
        [("forward", 0.01, 0.005, 1.0f64), ("swapped", 0.005, 0.01, -1.0)]
    {
        let started = Instant::now();
        let series = grid_run(omega1, omega2, 1e-14, 0.05, 20)?;
        if started.elapsed().as_secs() > 900 {
            return Err(format!("{label}: run exceeded 15 min"));
        }
        let final_value = series.records.last().unwrap().mam_internal3;
        let rel = (final_value - sign * expected).abs() / expected;
        if rel >= 0.10 {
            return Err(format!(
                "{label}: final internal MAM {final_value:.4e} not within 10% of {:.4e}",
                sign * expected
            ));
        }
        let (t_peak, _) = series.peak_abs_internal().unwrap();
        if (t_peak - 75.0).abs() > 2.0 {
            return Err(format!("{label}: |MAM| extremum at {t_peak} ms, outside 75 +- 2 ms"));
        }
    }
    Ok(())
}

/// Criterion 4: Fig. 3 reproduction, V0 sweep.
fn criterion_4() -> Result<(), String> {
    let scenario = paper_scenario();
    let magnitudes = [0.05e-13, 0.1e-13, 0.2e-13, 0.4e-13, 0.8e-13];
    for sign in [1.0f64, -1.0] {
        let mut errors = Vec::new();
        for &mag in &magnitudes {
            let v0 = sign * mag;
            // dt = 0.25 keeps the kinetic phase at the occupied bandwidth
            // under pi/4 and cuts the sweep cost 5x; the Strang error for
            // these weak ridges is far below the 10% tolerance
            let series = grid_run(scenario.omega1, scenario.omega2, v0, 0.25, 60)?;
            let numeric = plateau(&series);
            let predicted =
                closed_form_delta_mam(&scenario, &RidgeParams::from_ev(v0, 20.0).unwrap());
            let rel = (numeric - predicted).abs() / predicted.abs().max(1e-6);
            errors.push((v0, rel));
        }
        for &(v0, rel) in &errors[..3] {
            if rel > 0.10 {
                return Err(format!("V0 = {v0:.2e} eV: rel_error {rel:.3} > 0.10"));
            }
        }
        // eikonal deterioration: error grows from 0.4 to 0.8 x 1e-13 eV
        if errors[4].1 <= errors[3].1 {
            return Err(format!(
                "error not growing for strong ridges: {:.3e} at 0.4e-13 vs {:.3e} at 0.8e-13 (sign {sign})",
                errors[3].1, errors[4].1
            ));
        }
    }
    Ok(())
}

/// Criterion 5: Appendix-B Monte-Carlo identity
/// E[x cross (R x)] = (1/2) axial([R, S^-1]) for x ~ N(0, S^-1 / 2).
fn criterion_5() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples = 1_000_000usize;
    for dim in [2usize, 3] {
        for pair in 0..10 {
            let r = random_symmetric(&mut rng, dim);
            let s = random_spd(&mut rng, dim);
            let chol = cholesky(&s, dim);
            let expected = {
                let comm = commutator_real(&r, &s.inverse().unwrap()).unwrap();
                axial(&comm.antisymmetrize()).unwrap().scale(0.5)
            };
            let mut sum = [0.0f64; 3];
            let mut sum_sq = [0.0f64; 3];
            for _ in 0..samples {
                let x = sample_gaussian(&mut rng, &chol, dim);
                let rx = r.matvec(&x);
                let c = x.cross(&rx);
                for k in 0..3 {
                    sum[k] += c.get(k);
                    sum_sq[k] += c.get(k) * c.get(k);
                }
            }
            for k in 0..3 {
                let mean = sum[k] / samples as f64;
                let var = (sum_sq[k] / samples as f64 - mean * mean).max(0.0);
                let se = (var / samples as f64).sqrt();
                let dev = (mean - expected.get(k)).abs();
                if dev > 3.0 * se + 1e-12 {
                    return Err(format!(
                        "dim {dim} pair {pair} component {k}: |{mean:.5e} - {:.5e}| = {dev:.2e} > 3 SE = {:.2e}",
                        expected.get(k),
                        3.0 * se
                    ));
                }
            }
        }
    }
    Ok(())
}

fn random_symmetric(rng: &mut ChaCha8Rng, dim: usize) -> RealMatrix {
    let mut m = RealMatrix::zeros(dim).unwrap();
    for i in 0..dim {
        for j in 0..dim {
            m.set(i, j, rng.gen_range(-1.0..1.0));
        }
    }
    m.symmetrize()
}

fn random_spd(rng: &mut ChaCha8Rng, dim: usize) -> RealMatrix {
    let a = random_symmetric(rng, dim);
    let mut m = a.matmul(&a.transpose());
    for i in 0..dim {
        m.set(i, i, m.get(i, i) + 0.5);
    }
    m
}

/// Lower-triangular L with L L^T = S.
fn cholesky(s: &RealMatrix, dim: usize) -> RealMatrix {
    let mut l = RealMatrix::zeros(dim).unwrap();
    for i in 0..dim {
        for j in 0..=i {
            let mut acc = s.get(i, j);
            for k in 0..j {
                acc -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                l.set(i, i, acc.sqrt());
            } else {
                l.set(i, j, acc / l.get(j, j));
            }
        }
    }
    l
}

/// x = L^-T z / sqrt(2) has covariance S^-1 / 2 when S = L L^T.
fn sample_gaussian(rng: &mut ChaCha8Rng, l: &RealMatrix, dim: usize) -> RealVec {
    let mut z = [0.0f64; 3];
    for v in z.iter_mut().take(dim) {
        *v = rng.sample(StandardNormal);
    }
    // back-substitution for L^T x = z
    let mut x = [0.0f64; 3];
    for i in (0..dim).rev() {
        let mut acc = z[i];
        for j in i + 1..dim {
            acc -= l.get(j, i) * x[j];
        }
        x[i] = acc / l.get(i, i);
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    if dim == 2 {
        RealVec::new2(x[0] * inv_sqrt2, x[1] * inv_sqrt2)
    } else {
        RealVec::new3(x[0] * inv_sqrt2, x[1] * inv_sqrt2, x[2] * inv_sqrt2)
    }
}

/// Criterion 6, analytic half: free-flight MAM invariance over 1000 random
/// packets.
fn criterion_6_analytic() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..1000 {
        let re = random_symmetric(&mut rng, 2).scale(0.05);
        let im = {
            let a = random_symmetric(&mut rng, 2).scale(0.1);
            let mut m = a.matmul(&a.transpose());
            for i in 0..2 {
                m.set(i, i, m.get(i, i) + 2e-3);
            }
            m
        };
        let packet = GaussianPacket::new(
            rng.gen_range(0.5..20.0),
            RealVec::new2(rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0)),
            RealVec::new2(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)),
            ComplexMatrix::from_parts(&re, &im).unwrap(),
            0.0,
        )
        .map_err(|e| format!("trial {trial}: {e}"))?;
        let t = rng.gen_range(1.0..200.0);
        let before = packet.mam_total().map_err(|e| e.to_string())?;
        let after = packet
            .free_propagate(t)
            .map_err(|e| format!("trial {trial}: {e}"))?
            .mam_total()
            .map_err(|e| e.to_string())?;
        let rel = before.sub(&after).norm() / before.norm().max(1e-6);
        if rel >= 1e-10 {
            return Err(format!("trial {trial}: MAM drifted by {rel:.3e} relative"));
        }
    }
    Ok(())
}

/// Criterion 7: paper widths.
fn criterion_7() -> Result<(), String> {
    for (omega, expected) in [(0.01, 30.09), (0.005, 42.55)] {
        let width = (HBAR / (PAPER_MASS * omega)).sqrt();
        let rounded = (width * 100.0).round() / 100.0;
        if (rounded - expected).abs() > 5e-3 {
            return Err(format!("width for omega {omega}: {width:.4} um, expected {expected}"));
        }
    }
    Ok(())
}

/// Criterion 8: Delta L linear in V0 with quadratic-or-faster residual
/// under lambda-scaling.
fn criterion_8() -> Result<(), String> {
    let engine = EikonalEngine::with_defaults();
    let scenario = paper_scenario();
    let packet = scenario.initial_packet().unwrap();
    let t = scenario.crossing_time();
    let lambdas = [0.25, 0.5, 1.0];
    let mut values = Vec::new();
    for &lambda in &lambdas {
        let ridge = RidgeParams::from_ev(lambda * 1e-14, 20.0).unwrap();
        let dl = engine.delta_mam(&packet, &ridge, t).map_err(|e| e.to_string())?.get(2) / HBAR;
        values.push(dl);
    }
    // least-squares slope through the origin
    let num: f64 = lambdas.iter().zip(&values).map(|(l, v)| l * v).sum();
    let den: f64 = lambdas.iter().map(|l| l * l).sum();
    let slope = num / den;
    for (&lambda, &value) in lambdas.iter().zip(&values) {
        // quadratic-or-faster residual: bound scales with lambda^2
        let residual = (value - slope * lambda).abs();
        let bound = 1e-10 * slope.abs() * lambda * lambda;
        if residual > bound {
            return Err(format!(
                "lambda {lambda}: residual {residual:.3e} exceeds linearity bound {bound:.3e}"
            ));
        }
    }
    Ok(())
}

#[test]
fn acceptance_criteria() {
    let started = Instant::now();
    let (c1, c6_grid) = criterion_1_and_6_grid();
    let c6 = criterion_6_analytic().and(c6_grid);
    let results: Vec<(&str, Result<(), String>)> = vec![
        ("criterion 1: free-propagation oracle", c1),
        ("criterion 2: closed-form/pipeline equivalence", criterion_2()),
        ("criterion 3: Fig. 2 reproduction", criterion_3()),
        ("criterion 4: Fig. 3 sweep", criterion_4()),
        ("criterion 5: Monte-Carlo axial identity", criterion_5()),
        ("criterion 6: conservation suite", c6),
        ("criterion 7: width sanity", criterion_7()),
        ("criterion 8: epsilon-scaling linearity", criterion_8()),
    ];
    let mut failures = 0;
    for (name, result) in &results {
        match result {
            Ok(()) => println!("{name}: PASS"),
            Err(msg) => {
                failures += 1;
                println!("{name}: FAIL — {msg}");
            }
        }
    }
    println!("acceptance suite finished in {:?}", started.elapsed());
    assert_eq!(failures, 0, "{failures} acceptance criteria failed");
}
