//! Pseudo-spectral solver for fractional Leray-alpha, Leray-deconvolution and
//! deconvolution-MHD models on the periodic box `[0, L)^d`, `d = 2, 3`.
//!
//! Fields are stored as Fourier coefficients on a full `n^d` grid with the
//! series normalisation `u(x) = sum_k u_k exp(i k.x)`. Nonlinear terms are
//! evaluated pseudo-spectrally with 2/3-rule dealiasing and time is advanced
//! with an integrating-factor Runge-Kutta scheme that treats viscosity exactly.

pub mod checkpoint;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod filter;
pub mod grid;
pub mod output;
mod par;
pub mod runner;
pub mod stepper;
pub mod validation;

pub use checkpoint::Checkpoint;
pub use config::{parse_config, GridSpec, InitialCondition, RunConfig};
pub use diagnostics::{
    alpha_sweep, energy_budget_residual, energy_record, local_energy_balance,
    local_energy_residual, n_sweep, shell_spectrum, BumpTestFunction, EnergyRecord, SweepReport,
};
pub use dynamics::{
    advect, rhs, total_pressure, ForcingSpec, ModelConfig, ModelKind, SimState, Tendency,
};
pub use error::{Error, Result};
pub use field::{RealVectorField, SpectralScalarField, SpectralVectorField};
pub use filter::{deconvolution_gain, deconvolve, filter_apply, helmholtz_multiplier, FilterParams};
pub use grid::WaveGrid;
pub use runner::{run_config, simulate, RunOutcome};
pub use stepper::{run, step, Integrator, Scheme, StepperConfig};
