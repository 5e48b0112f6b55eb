//! Synthesis and evaluation of ionization-pulse envelopes that transfer
//! population between two bound states coupled through a laser-induced
//! continuum structure.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: physical parameters, envelope families and the control grid.
//! - [`propagator`]: RK4 integration, the closed-form sin-cos efficiency and
//!   adiabatic-basis helpers.
//! - [`optimizer`]: discrete-adjoint gradients, projected-gradient ascent and
//!   bang/interior structure detection.
//! - [`experiments`]: baseline searches, sweeps, smoothing and robustness
//!   scans with CSV/JSON output.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod model;
pub mod optimizer;
pub mod propagator;

pub use error::{Error, Result};
pub use model::{
    effective_detuning, gaussian_pair, sample_onto_grid, sincos_controls, ControlGrid, DetuningMode, Envelope,
    StarkProfile, StateVector, SystemConfig,
};
pub use optimizer::{
    default_starts, detect_structure, gradient, optimize, ControlStructure, Gradient, OptimizationReport, Optimizer,
    OptimizerSettings, Segment, SegmentLabel, Start,
};
pub use propagator::{
    adiabatic_transform, dark_state, propagate, sincos_efficiency_analytic, PropagationResult, Propagator,
};
