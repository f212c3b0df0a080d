//! TOML scenario configuration and its conversion to simulation inputs.
//!
//! All quantities carry explicit unit suffixes; the `[units]` block selects
//! the conventions for the two inputs that differ between sources (ridge
//! strength in eV vs native energy, shape frequencies in 1/s vs 1/ms).
//! Conversion to the native unit system (mass u, length um, time ms)
//! happens exactly once, at ingestion.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use wavepacket_core::{ev_to_native_energy, Grid2D, RidgeParams, ScenarioParams};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Predict,
    Both,
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Both
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsConfig {
    /// "ev" or "native" (u um^2/ms^2).
    #[serde(default = "default_v0_unit")]
    pub v0: String,
    /// "per_s" or "per_ms".
    #[serde(default = "default_omega_unit")]
    pub omega: String,
}

fn default_v0_unit() -> String {
    "ev".into()
}

fn default_omega_unit() -> String {
    "per_s".into()
}

impl Default for UnitsConfig {
    fn default() -> Self {
        Self { v0: default_v0_unit(), omega: default_omega_unit() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    /// Initial distance from the ridge, um; the packet starts at (-q, 0).
    pub q_um: f64,
    /// Mean speed toward the ridge, um/ms.
    pub v_um_per_ms: f64,
    /// Shape frequencies, in the unit selected by `units.omega`.
    pub omega1: f64,
    pub omega2: f64,
    /// Mass, u.
    pub mass_u: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RidgeConfig {
    /// Strength, in the unit selected by `units.v0`.
    pub v0: f64,
    /// Profile width, um.
    pub ell_um: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n1: usize,
    pub n2: usize,
    pub x1_min_um: f64,
    pub x1_max_um: f64,
    pub x2_min_um: f64,
    pub x2_max_um: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n1: 1024,
            n2: 512,
            x1_min_um: -600.0,
            x1_max_um: 600.0,
            x2_min_um: -300.0,
            x2_max_um: 300.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingConfig {
    /// Total propagation time, ms; defaults to the crossing time 2q/v.
    pub t_total_ms: Option<f64>,
    pub dt_ms: f64,
    /// Observables recorded every this many steps.
    pub output_stride: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self { t_total_ms: None, dt_ms: 0.05, output_stride: 20 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub units: UnitsConfig,
    pub packet: PacketConfig,
    pub ridge: RidgeConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub timing: TimingConfig,
}

/// Everything converted to native units, ready to run.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub mode: Mode,
    pub scenario: ScenarioParams,
    pub ridge: RidgeParams,
    pub grid: Grid2D,
    pub t_total: f64,
    pub dt: f64,
    pub stride: u64,
    /// V0 in eV, for reporting.
    pub v0_ev: f64,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("reading {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("parsing {}: {e}", path.display())))
    }

    pub fn resolve(&self) -> Result<ResolvedConfig, ConfigError> {
        let omega_factor = match self.units.omega.as_str() {
            "per_s" => 1e-3,
            "per_ms" => 1.0,
            other => {
                return Err(ConfigError(format!(
                    "units.omega must be \"per_s\" or \"per_ms\", got \"{other}\""
                )))
            }
        };
        let (v0_native, v0_ev) = match self.units.v0.as_str() {
            "ev" => (ev_to_native_energy(self.ridge.v0), self.ridge.v0),
            "native" => (self.ridge.v0, wavepacket_core::native_energy_to_ev(self.ridge.v0)),
            other => {
                return Err(ConfigError(format!(
                    "units.v0 must be \"ev\" or \"native\", got \"{other}\""
                )))
            }
        };
        let scenario = ScenarioParams {
            q: self.packet.q_um,
            v: self.packet.v_um_per_ms,
            omega1: self.packet.omega1 * omega_factor,
            omega2: self.packet.omega2 * omega_factor,
            mass: self.packet.mass_u,
        };
        if !(scenario.q > 0.0 && scenario.v > 0.0 && scenario.mass > 0.0) {
            return Err(ConfigError("packet q_um, v_um_per_ms and mass_u must be positive".into()));
        }
        if !(scenario.omega1 > 0.0 && scenario.omega2 > 0.0) {
            return Err(ConfigError("packet omega1 and omega2 must be positive".into()));
        }
        let ridge = RidgeParams::new(v0_native, self.ridge.ell_um)
            .map_err(|e| ConfigError(e.to_string()))?;
        let grid = Grid2D::new(
            self.grid.n1,
            self.grid.n2,
            self.grid.x1_min_um,
            self.grid.x1_max_um,
            self.grid.x2_min_um,
            self.grid.x2_max_um,
        )
        .map_err(|e| ConfigError(e.to_string()))?;
        let t_total = self.timing.t_total_ms.unwrap_or_else(|| scenario.crossing_time());
        if !(t_total > 0.0 && self.timing.dt_ms > 0.0) {
            return Err(ConfigError("timing.t_total_ms and timing.dt_ms must be positive".into()));
        }
        Ok(ResolvedConfig {
            mode: self.mode,
            scenario,
            ridge,
            grid,
            t_total,
            dt: self.timing.dt_ms,
            stride: self.timing.output_stride.max(1),
            v0_ev,
        })
    }
}
