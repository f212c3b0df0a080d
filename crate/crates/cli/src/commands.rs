//! The four CLI verbs: simulate, predict, sweep, compare.

use std::fmt::Write as FmtWrite;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use serde_json::{json, Value};
use wavepacket_core::{
    closed_form_delta_mam, EikonalConfig, EikonalEngine, ObservableSeries, RidgeParams,
    SplitStepPropagator, WaveField, HBAR,
};

use crate::config::ResolvedConfig;

/// Run-time capability flag: set whenever a grid propagation starts, so
/// `predict` can attest that it never touched the solver.
static GRID_INVOKED: AtomicBool = AtomicBool::new(false);

pub fn grid_was_invoked() -> bool {
    GRID_INVOKED.load(Ordering::SeqCst)
}

#[derive(Debug)]
pub enum CliError {
    /// Configuration, regime or runtime violation: exit code 2.
    Config(String),
    /// Sweep finished with some rows failed: exit code 3.
    PartialSweep(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::PartialSweep(msg) => write!(f, "partial sweep: {msg}"),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Atomic file write: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    std::fs::write(&tmp, contents).map_err(config_err)?;
    std::fs::rename(&tmp, path).map_err(config_err)?;
    Ok(())
}

/// One grid propagation for the configured scenario with the given ridge
/// strength (native units).
fn run_grid(cfg: &ResolvedConfig, ridge: &RidgeParams) -> Result<ObservableSeries, CliError> {
    GRID_INVOKED.store(true, Ordering::SeqCst);
    let packet = cfg.scenario.initial_packet().map_err(config_err)?;
    let mut field = WaveField::from_packet(&packet, &cfg.grid, cfg.t_total).map_err(config_err)?;
    let mut prop =
        SplitStepPropagator::new(&cfg.grid, ridge, packet.mass(), cfg.dt).map_err(config_err)?;
    prop.check_time_step(&packet).map_err(config_err)?;
    let steps = (cfg.t_total / cfg.dt).round() as u64;
    prop.run_observed(&mut field, steps, cfg.stride).map_err(config_err)
}

fn series_to_csv(series: &ObservableSeries) -> String {
    let mut out = String::from("t_ms,norm,x1_um,x2_um,v1,v2,mam_total_hbar,mam_internal_hbar\n");
    for r in &series.records {
        writeln!(
            out,
            "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
            r.t,
            r.norm,
            r.mean_position.get(0),
            r.mean_position.get(1),
            r.mean_velocity.get(0),
            r.mean_velocity.get(1),
            r.mam_total3,
            r.mam_internal3,
        )
        .expect("string write");
    }
    out
}

pub fn report_regime(cfg: &ResolvedConfig) {
    let r = cfg.scenario.regime_ratios(&cfg.ridge);
    eprintln!(
        "regime ratios: packet_size {:.3}, spreading {:.3}, ridge_width {:.3}",
        r.packet_size, r.spreading, r.ridge_width
    );
    for w in cfg.scenario.regime_warnings(&cfg.ridge) {
        eprintln!("warning: {w}");
    }
}

pub fn simulate(cfg: &ResolvedConfig, out: &Path) -> Result<(), CliError> {
    report_regime(cfg);
    let series = run_grid(cfg, &cfg.ridge)?;
    write_atomic(out, &series_to_csv(&series))?;
    eprintln!("wrote {} rows to {}", series.records.len(), out.display());
    Ok(())
}

/// Analytic prediction report; never invokes the grid.
pub fn predict_report(cfg: &ResolvedConfig, analytic_blocks: bool) -> Result<Value, CliError> {
    let engine = if analytic_blocks {
        EikonalEngine::with_defaults()
    } else {
        EikonalEngine::new(EikonalConfig {
            quad_order: 128,
            use_analytic: false,
            ..EikonalConfig::default()
        })
    };
    let packet = cfg.scenario.initial_packet().map_err(config_err)?;
    let generic =
        engine.delta_mam(&packet, &cfg.ridge, cfg.t_total).map_err(config_err)?.scale(1.0 / HBAR);
    let closed = closed_form_delta_mam(&cfg.scenario, &cfg.ridge);
    let rel_difference = (generic.get(2) - closed).abs() / closed.abs().max(1e-6);
    let ratios = cfg.scenario.regime_ratios(&cfg.ridge);
    Ok(json!({
        "grid_invoked": grid_was_invoked(),
        "blocks": if analytic_blocks { "analytic" } else { "finite-difference" },
        "inputs": {
            "q_um": cfg.scenario.q,
            "v_um_per_ms": cfg.scenario.v,
            "omega1_per_ms": cfg.scenario.omega1,
            "omega2_per_ms": cfg.scenario.omega2,
            "mass_u": cfg.scenario.mass,
            "v0_ev": cfg.v0_ev,
            "ell_um": cfg.ridge.ell,
            "t_total_ms": cfg.t_total,
        },
        "delta_mam_hbar": {
            "generic": [generic.get(0), generic.get(1), generic.get(2)],
            "closed_form": closed,
            "rel_difference": rel_difference,
        },
        "regime_ratios": {
            "packet_size": ratios.packet_size,
            "spreading": ratios.spreading,
            "ridge_width": ratios.ridge_width,
        },
        "warnings": cfg.scenario.regime_warnings(&cfg.ridge),
    }))
}

pub fn predict(cfg: &ResolvedConfig, analytic_blocks: bool, out: Option<&Path>) -> Result<(), CliError> {
    report_regime(cfg);
    let report = predict_report(cfg, analytic_blocks)?;
    let text = serde_json::to_string_pretty(&report).map_err(config_err)?;
    match out {
        Some(path) => write_atomic(path, &(text + "\n"))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn plateau(series: &ObservableSeries) -> f64 {
    series.plateau_internal(0.1).unwrap_or(0.0)
}

pub fn sweep(
    cfg: &ResolvedConfig,
    v0_list_ev: &[f64],
    threads: Option<usize>,
    out: &Path,
) -> Result<(), CliError> {
    if v0_list_ev.is_empty() {
        return Err(CliError::Config("sweep requires a nonempty --v0-list".into()));
    }
    report_regime(cfg);
    let run_row = |&v0_ev: &f64| -> Result<(f64, f64, f64), String> {
        let ridge = RidgeParams::from_ev(v0_ev, cfg.ridge.ell).map_err(|e| e.to_string())?;
        let series = run_grid(cfg, &ridge).map_err(|e| e.to_string())?;
        let numeric = plateau(&series);
        let predicted = closed_form_delta_mam(&cfg.scenario, &ridge);
        let rel_error = (numeric - predicted).abs() / predicted.abs().max(1e-6);
        Ok((numeric, predicted, rel_error))
    };
    let results: Vec<Result<(f64, f64, f64), String>> = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(config_err)?;
            pool.install(|| {
                use rayon::prelude::*;
                v0_list_ev.par_iter().map(run_row).collect()
            })
        }
        None => {
            use rayon::prelude::*;
            v0_list_ev.par_iter().map(run_row).collect()
        }
    };
    let mut csv = String::from("V0_eV,mam_numeric_hbar,mam_predicted_hbar,rel_error\n");
    let mut failures = Vec::new();
    for (v0, result) in v0_list_ev.iter().zip(&results) {
        match result {
            Ok((numeric, predicted, rel)) => {
                writeln!(csv, "{v0:.8e},{numeric:.8e},{predicted:.8e},{rel:.8e}")
                    .expect("string write");
            }
            Err(msg) => {
                writeln!(csv, "# V0_eV={v0:.8e} failed: {msg}").expect("string write");
                failures.push(format!("V0 = {v0:.3e} eV: {msg}"));
            }
        }
    }
    write_atomic(out, &csv)?;
    if failures.is_empty() {
        eprintln!("wrote {} rows to {}", v0_list_ev.len(), out.display());
        Ok(())
    } else {
        Err(CliError::PartialSweep(failures.join("; ")))
    }
}

/// Observable series as read back from a simulate CSV.
struct ParsedSeries {
    t: Vec<f64>,
    mam_internal: Vec<f64>,
}

fn parse_series_csv(path: &Path) -> Result<ParsedSeries, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| CliError::Config("series file is empty".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let index = |name: &str| -> Result<usize, CliError> {
        columns.iter().position(|&c| c == name).ok_or_else(|| {
            CliError::Config(format!(
                "series file {} is missing column {name} (found: {})",
                path.display(),
                columns.join(", ")
            ))
        })
    };
    let t_col = index("t_ms")?;
    let mam_col = index("mam_internal_hbar")?;
    let mut t = Vec::new();
    let mut mam_internal = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |col: usize, name: &str| -> Result<f64, CliError> {
            fields
                .get(col)
                .and_then(|f| f.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    CliError::Config(format!("row {}: bad value in column {name}", lineno + 2))
                })
        };
        t.push(parse(t_col, "t_ms")?);
        mam_internal.push(parse(mam_col, "mam_internal_hbar")?);
    }
    if t.is_empty() {
        return Err(CliError::Config("series file has no data rows".into()));
    }
    Ok(ParsedSeries { t, mam_internal })
}

pub fn compare(
    series_path: &Path,
    prediction_path: &Path,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let started = Instant::now();
    let series = parse_series_csv(series_path)?;
    let prediction_text = std::fs::read_to_string(prediction_path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", prediction_path.display())))?;
    let prediction: Value = serde_json::from_str(&prediction_text)
        .map_err(|e| CliError::Config(format!("parsing {}: {e}", prediction_path.display())))?;
    let closed = prediction
        .pointer("/delta_mam_hbar/closed_form")
        .and_then(Value::as_f64)
        .ok_or_else(|| {
            CliError::Config("prediction file is missing delta_mam_hbar.closed_form".into())
        })?;
    let generic = prediction
        .pointer("/delta_mam_hbar/generic/2")
        .and_then(Value::as_f64)
        .ok_or_else(|| {
            CliError::Config("prediction file is missing delta_mam_hbar.generic".into())
        })?;

    let n = series.t.len();
    let tail = ((n as f64 * 0.1).ceil() as usize).max(1);
    let plateau: f64 =
        series.mam_internal[n - tail..].iter().sum::<f64>() / tail as f64;
    let (peak_time, _) = series
        .t
        .iter()
        .zip(&series.mam_internal)
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite values"))
        .map(|(&t, &v)| (t, v))
        .expect("nonempty series");
    let rel_error = (plateau - closed).abs() / closed.abs().max(1e-6);

    let dt_sample = if n > 1 { series.t[1] - series.t[0] } else { 0.0 };
    let report = json!({
        "plateau_mam_numeric_hbar": plateau,
        "predicted_closed_form_hbar": closed,
        "predicted_generic_hbar": generic,
        "rel_error": rel_error,
        "peak_time_ms": peak_time,
        "regime_ratios": prediction.get("regime_ratios").cloned().unwrap_or(Value::Null),
        "run_metadata": {
            "series_rows": n,
            "t_span_ms": series.t[n - 1] - series.t[0],
            "sample_interval_ms": dt_sample,
            "wall_time_ms": started.elapsed().as_secs_f64() * 1e3,
        },
    });

    println!("plateau internal MAM (numeric): {plateau:.6e} hbar");
    println!("predicted (closed form):        {closed:.6e} hbar");
    println!("predicted (generic pipeline):   {generic:.6e} hbar");
    println!("relative error:                 {rel_error:.4}");
    println!("|MAM| extremum at:              {peak_time:.2} ms");
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(&report).map_err(config_err)?;
        write_atomic(path, &(text + "\n"))?;
        eprintln!("wrote report to {}", path.display());
    }
    Ok(())
}

/// Comma-separated float list for --v0-list.
pub fn parse_v0_list(raw: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad value in --v0-list: \"{s}\"")))
        })
        .collect()
}

/// Default output path per verb when --out is omitted.
pub fn default_out(verb: &str) -> PathBuf {
    PathBuf::from(match verb {
        "simulate" => "observables.csv",
        "sweep" => "sweep.csv",
        _ => "out.json",
    })
}
