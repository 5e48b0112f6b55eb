//! Fixtures shared by the benchmarks.

use lics_core::model::SinCos;
use lics_core::{sample_onto_grid, ControlGrid, DetuningMode, SystemConfig};

/// The dynamic-Stark, `R = 1/4` system used throughout the benches.
pub fn stark_config() -> SystemConfig {
    SystemConfig::new(-6.0, 0.25, DetuningMode::DynamicStark).expect("valid config")
}

/// Sin-cos pulses of normalized duration `at` on `n` intervals.
pub fn sincos_grid(at: f64, n: usize) -> ControlGrid {
    sample_onto_grid(
        &SinCos {
            scale: 1.0,
            duration: at,
        },
        at,
        n,
        1.0,
    )
    .expect("valid grid")
}
