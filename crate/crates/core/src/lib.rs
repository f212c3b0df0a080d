//! Semiclassical dynamics of rotating Gaussian wave packets in weak
//! external potentials, plus an independent 2-D split-step Fourier solver
//! for cross-checking the analytics.

pub mod eikonal;
pub mod error;
pub mod grid;
pub mod packet;
pub mod potential;
pub mod quadrature;
pub mod ridge;
pub mod tensor;
pub mod units;

pub use eikonal::{delta_mam_from_parts, EikonalConfig, EikonalEngine, HattedQuantities};
pub use error::{Error, Result};
pub use grid::{Grid2D, ObservableRecord, ObservableSeries, SplitStepPropagator, WaveField};
pub use packet::{evolve_omega, GaussianPacket};
pub use potential::{Potential, UDerivatives};
pub use ridge::{closed_form_delta_mam, RegimeRatios, RidgeParams, ScenarioParams};
pub use tensor::{
    axial, commutator, commutator_real, is_positive_definite, ComplexMatrix, RealMatrix, RealVec,
};
pub use units::{ev_to_native_energy, native_energy_to_ev, EV_TO_NATIVE, HBAR};
