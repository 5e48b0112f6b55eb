//! Fixed-step RK4 integration of the real four-component amplitude equations
//! under piecewise-constant controls, plus the closed-form sin-cos efficiency
//! and adiabatic-basis helpers.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{effective_detuning, ControlGrid, StateVector, SystemConfig};

pub type Matrix4 = [[f64; 4]; 4];

/// Right-hand side matrix `M(u)` of `dx/dt = M x` for fixed control values.
pub fn generator(config: &SystemConfig, u1: f64, u2: f64) -> Matrix4 {
    let half_q = 0.5 * config.q;
    let p = u1 * u1;
    let s = u2 * u2;
    let c = u1 * u2;
    let loss = -0.5 * (config.incoherence * p + s);
    let delta = effective_detuning(config, u1, u2);
    [
        [-0.5 * p, -half_q * p, -0.5 * c, -half_q * c],
        [half_q * p, -0.5 * p, half_q * c, -0.5 * c],
        [-0.5 * c, -half_q * c, loss, delta - half_q * s],
        [half_q * c, -0.5 * c, half_q * s - delta, loss],
    ]
}

/// Partial derivatives `(∂M/∂u1, ∂M/∂u2)` of [`generator`].
pub(crate) fn generator_derivatives(config: &SystemConfig, u1: f64, u2: f64) -> (Matrix4, Matrix4) {
    let half_q = 0.5 * config.q;
    let (c1, c2) = config.detuning_coefficients();
    let r = config.incoherence;

    // ∂/∂u1: p = u1² -> 2u1, c = u1u2 -> u2, δ -> 2 c1 u1
    let dp = 2.0 * u1;
    let dc = u2;
    let dd = 2.0 * c1 * u1;
    let d1 = [
        [-0.5 * dp, -half_q * dp, -0.5 * dc, -half_q * dc],
        [half_q * dp, -0.5 * dp, half_q * dc, -0.5 * dc],
        [-0.5 * dc, -half_q * dc, -0.5 * r * dp, dd],
        [half_q * dc, -0.5 * dc, -dd, -0.5 * r * dp],
    ];

    // ∂/∂u2: s = u2² -> 2u2, c -> u1, δ -> 2 c2 u2
    let ds = 2.0 * u2;
    let dc = u1;
    let dd = 2.0 * c2 * u2;
    let d2 = [
        [0.0, 0.0, -0.5 * dc, -half_q * dc],
        [0.0, 0.0, half_q * dc, -0.5 * dc],
        [-0.5 * dc, -half_q * dc, -0.5 * ds, dd - half_q * ds],
        [half_q * dc, -0.5 * dc, half_q * ds - dd, -0.5 * ds],
    ];
    (d1, d2)
}

#[inline]
pub(crate) fn matvec(m: &Matrix4, x: &[f64; 4]) -> [f64; 4] {
    let mut y = [0.0; 4];
    for (yi, row) in y.iter_mut().zip(m) {
        *yi = row[0] * x[0] + row[1] * x[1] + row[2] * x[2] + row[3] * x[3];
    }
    y
}

#[inline]
pub(crate) fn matvec_t(m: &Matrix4, x: &[f64; 4]) -> [f64; 4] {
    let mut y = [0.0; 4];
    for (i, row) in m.iter().enumerate() {
        for j in 0..4 {
            y[j] += row[j] * x[i];
        }
    }
    y
}

#[inline]
fn axpy(x: &[f64; 4], a: f64, y: &[f64; 4]) -> [f64; 4] {
    [x[0] + a * y[0], x[1] + a * y[1], x[2] + a * y[2], x[3] + a * y[3]]
}

/// One classical RK4 step of the autonomous linear system `dx/dt = M x`.
#[inline]
pub(crate) fn rk4_step(m: &Matrix4, x: &[f64; 4], h: f64) -> [f64; 4] {
    let k1 = matvec(m, x);
    let k2 = matvec(m, &axpy(x, 0.5 * h, &k1));
    let k3 = matvec(m, &axpy(x, 0.5 * h, &k2));
    let k4 = matvec(m, &axpy(x, h, &k3));
    let w = h / 6.0;
    let mut out = *x;
    for i in 0..4 {
        out[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: StateVector,
}

#[derive(Clone, Debug)]
pub struct PropagationResult {
    /// Every RK4 step including the initial point; empty unless recording.
    pub trajectory: Vec<TrajectoryPoint>,
    pub final_state: StateVector,
    /// Final excited-state population `x3² + x4²`.
    pub efficiency: f64,
    /// Squared norm after each step, starting with the initial state.
    pub norm_history: Vec<f64>,
}

#[derive(Serialize)]
struct TrajectoryRow {
    t: f64,
    x1: f64,
    x2: f64,
    x3: f64,
    x4: f64,
    norm2: f64,
    pop_g: f64,
    pop_e: f64,
}

impl PropagationResult {
    /// Writes `t, x1, x2, x3, x4, norm2, pop_g, pop_e`.
    pub fn write_trajectory_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        for p in &self.trajectory {
            let [x1, x2, x3, x4] = p.state.0;
            wtr.serialize(TrajectoryRow {
                t: p.t,
                x1,
                x2,
                x3,
                x4,
                norm2: p.state.norm_sqr(),
                pop_g: p.state.ground_population(),
                pop_e: p.state.excited_population(),
            })?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_trajectory_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_trajectory_csv(std::fs::File::create(path)?)
    }
}

/// Largest `h * L` allowed for one RK4 step, where `L` bounds `‖M‖∞` over the box.
const MAX_STEP_RATE: f64 = 1.0;

/// Upper bound on the row-sum norm of [`generator`] over `u1², u2² <= A`.
pub(crate) fn rate_bound(config: &SystemConfig) -> f64 {
    let a = config.scale;
    let half_q = 0.5 * config.q.abs();
    let (c1, c2) = config.detuning_coefficients();
    let ground = 2.0 * (0.5 + half_q) * a;
    let excited = (0.5 + 2.0 * half_q + 0.5 * (config.incoherence + 1.0) + c1.abs() + c2.abs()) * a;
    ground.max(excited)
}

/// Fixed-step integrator with at least `substeps` RK4 steps per control
/// interval; coarse grids get more so that every step stays well inside the
/// RK4 stability region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Propagator {
    pub substeps: usize,
}

impl Default for Propagator {
    fn default() -> Self {
        Propagator { substeps: 4 }
    }
}

impl Propagator {
    pub fn new(substeps: usize) -> Result<Self> {
        if substeps == 0 {
            return Err(Error::param("substeps must be >= 1"));
        }
        Ok(Propagator { substeps })
    }

    /// RK4 steps per interval on `grid`. Depends only on the config and the
    /// interval width, never on the control values.
    pub fn steps_per_interval(&self, config: &SystemConfig, grid: &ControlGrid) -> usize {
        let needed = (grid.interval_width() * rate_bound(config) / MAX_STEP_RATE).ceil();
        if needed.is_finite() && needed > self.substeps as f64 {
            needed.min(1e6) as usize
        } else {
            self.substeps
        }
    }

    fn check(&self, config: &SystemConfig, grid: &ControlGrid) -> Result<()> {
        if self.substeps == 0 {
            return Err(Error::param("substeps must be >= 1"));
        }
        config.validate()?;
        grid.check_bounds(config.scale)
    }

    /// Integrates from the ground state.
    pub fn propagate(&self, config: &SystemConfig, grid: &ControlGrid, record: bool) -> Result<PropagationResult> {
        self.propagate_from(config, grid, StateVector::GROUND, record)
    }

    pub fn propagate_from(
        &self,
        config: &SystemConfig,
        grid: &ControlGrid,
        initial: StateVector,
        record: bool,
    ) -> Result<PropagationResult> {
        self.check(config, grid)?;
        let sub = self.steps_per_interval(config, grid);
        let h = grid.interval_width() / sub as f64;
        let steps = grid.n_intervals() * sub;
        let mut norm_history = Vec::with_capacity(steps + 1);
        let mut trajectory = Vec::with_capacity(if record { steps + 1 } else { 0 });
        let mut x = initial.0;
        norm_history.push(initial.norm_sqr());
        if record {
            trajectory.push(TrajectoryPoint { t: 0.0, state: initial });
        }
        let mut step = 0;
        for k in 0..grid.n_intervals() {
            let (u1, u2) = grid.get(k);
            let m = generator(config, u1, u2);
            for _ in 0..sub {
                x = rk4_step(&m, &x, h);
                step += 1;
                let state = StateVector(x);
                let t = step as f64 * h;
                if !state.is_finite() {
                    return Err(Error::NonFinite {
                        time: t,
                        step,
                        state: x,
                    });
                }
                norm_history.push(state.norm_sqr());
                if record {
                    trajectory.push(TrajectoryPoint { t, state });
                }
            }
        }
        let final_state = StateVector(x);
        Ok(PropagationResult {
            trajectory,
            final_state,
            efficiency: final_state.excited_population(),
            norm_history,
        })
    }

    /// Final state only, without bound checks or history. Used by the
    /// optimizer's line search on grids it has already projected.
    pub(crate) fn final_state_unchecked(&self, config: &SystemConfig, grid: &ControlGrid) -> Result<StateVector> {
        let sub = self.steps_per_interval(config, grid);
        let h = grid.interval_width() / sub as f64;
        let mut x = StateVector::GROUND.0;
        for k in 0..grid.n_intervals() {
            let (u1, u2) = grid.get(k);
            let m = generator(config, u1, u2);
            for _ in 0..sub {
                x = rk4_step(&m, &x, h);
            }
            if !x.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite {
                    time: (k + 1) as f64 * grid.interval_width(),
                    step: (k + 1) * sub,
                    state: x,
                });
            }
        }
        Ok(StateVector(x))
    }

    /// Final excited-state population from the ground state.
    pub fn efficiency(&self, config: &SystemConfig, grid: &ControlGrid) -> Result<f64> {
        self.check(config, grid)?;
        Ok(self.final_state_unchecked(config, grid)?.excited_population())
    }
}

/// [`Propagator::propagate`] with the default four substeps per interval.
pub fn propagate(config: &SystemConfig, grid: &ControlGrid, record: bool) -> Result<PropagationResult> {
    Propagator::default().propagate(config, grid, record)
}

/// Closed-form excited-state population of the sin-cos protocol for `R = 0`
/// and `δ = 0`, as a function of `q` and the normalized duration `AT`.
///
/// In the adiabatic basis the dark-state amplitude obeys a constant-coefficient
/// second-order equation, giving
/// `e^{-Re(η)AT} |cosh(κAT) + η/(2κ) sinh(κAT)|²` with `η = (1 - iq)/2` and
/// `κ = ½ sqrt(η² - (π/AT)²)`.
pub fn sincos_efficiency_analytic(q: f64, normalized_duration: f64) -> Result<f64> {
    let at = normalized_duration;
    if !(at > 0.0 && at.is_finite()) {
        return Err(Error::param(format!("AT must be finite and > 0, got {at}")));
    }
    let eta = Complex64::new(0.5, -0.5 * q);
    let rate = std::f64::consts::PI / at;
    let kappa = 0.5 * (eta * eta - rate * rate).sqrt();
    let z = kappa * at;
    // sinh(z)/z is even and entire; keep it finite when κ -> 0.
    let sinhc = if z.norm() < 1e-8 {
        Complex64::new(1.0, 0.0)
    } else {
        z.sinh() / z
    };
    let bracket = z.cosh() + 0.5 * eta * at * sinhc;
    Ok((-eta.re * at).exp() * bracket.norm_sqr())
}

/// Amplitudes in the adiabatic basis for mixing angle `theta`.
pub fn adiabatic_transform(theta: f64, b_g: Complex64, b_e: Complex64) -> (Complex64, Complex64) {
    let (s, c) = theta.sin_cos();
    (c * b_g - s * b_e, s * b_g + c * b_e)
}

/// Zero-eigenvalue eigenstate `(cos θ, -sin θ)` for `R = 0`, `δ = 0`.
pub fn dark_state(theta: f64) -> StateVector {
    let (s, c) = theta.sin_cos();
    StateVector([c, 0.0, -s, 0.0])
}
