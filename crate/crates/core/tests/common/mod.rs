#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use lics_core::{ControlGrid, DetuningMode, Propagator, SystemConfig};

pub fn random_grid(rng: &mut ChaCha8Rng, bound: f64, max_n: usize) -> ControlGrid {
    let n = rng.gen_range(1..=max_n);
    let duration = rng.gen_range(0.1..5.0);
    let u1 = (0..n).map(|_| rng.gen_range(0.0..=bound)).collect();
    let u2 = (0..n).map(|_| rng.gen_range(0.0..=bound)).collect();
    ControlGrid::new(duration, u1, u2).unwrap()
}

pub fn random_config(rng: &mut ChaCha8Rng) -> SystemConfig {
    let mode = if rng.gen_bool(0.5) {
        DetuningMode::Resonant
    } else {
        DetuningMode::DynamicStark
    };
    SystemConfig::new(rng.gen_range(-10.0..-0.5), rng.gen_range(0.0..1.0), mode).unwrap()
}

pub fn central_difference(config: &SystemConfig, grid: &ControlGrid, eps: f64) -> Vec<f64> {
    let prop = Propagator::default();
    let n = grid.n_intervals();
    let mut out = Vec::with_capacity(2 * n);
    for which in 0..2 {
        for k in 0..n {
            let shifted = |d: f64| {
                let mut u1 = grid.u1().to_vec();
                let mut u2 = grid.u2().to_vec();
                if which == 0 {
                    u1[k] += d;
                } else {
                    u2[k] += d;
                }
                // the box is irrelevant here, so evaluate with a roomy one
                let g = ControlGrid::new(grid.duration(), u1, u2).unwrap();
                prop.efficiency(&config.with_scale(4.0).unwrap(), &g).unwrap()
            };
            out.push((shifted(eps) - shifted(-eps)) / (2.0 * eps));
        }
    }
    out
}

/// Largest adjoint-vs-central-difference error relative to the gradient's ∞-norm.
pub fn gradient_error(config: &SystemConfig, grid: &ControlGrid) -> f64 {
    let g = Propagator::default()
        .gradient(&config.with_scale(4.0).unwrap(), grid)
        .unwrap();
    let fd = central_difference(config, grid, 1e-6);
    let adj: Vec<f64> = g.du1.iter().chain(&g.du2).copied().collect();
    let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    adj.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}
