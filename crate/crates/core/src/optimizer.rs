//! Discrete-adjoint gradients and box-constrained ascent on the final
//! excited-state population.
//!
//! The gradient is the exact transpose of the RK4 scheme used by
//! [`Propagator`], so it is the derivative of the objective that the line
//! search actually evaluates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sample_onto_grid, ControlGrid, CounterintuitiveRamp, GaussianPulses, SinCos, SystemConfig};
use crate::propagator::{generator, generator_derivatives, matvec, matvec_t, Matrix4, Propagator};

/// Derivatives of the final population with respect to every control sample,
/// together with the discrete costate.
#[derive(Clone, Debug)]
pub struct Gradient {
    pub efficiency: f64,
    pub du1: Vec<f64>,
    pub du2: Vec<f64>,
    /// Adjoint vector at every RK4 step boundary; the last entry is the
    /// terminal value `(0, 0, 2 x3(T), 2 x4(T))`.
    pub costate: Vec<[f64; 4]>,
}

impl Gradient {
    /// ∞-norm of the projected gradient `clamp(u + g) - u` on the box `[0, bound]`.
    pub fn projected_norm(&self, grid: &ControlGrid, bound: f64) -> f64 {
        let proj = |u: f64, g: f64| ((u + g).clamp(0.0, bound) - u).abs();
        grid.u1()
            .iter()
            .zip(&self.du1)
            .chain(grid.u2().iter().zip(&self.du2))
            .map(|(&u, &g)| proj(u, g))
            .fold(0.0, f64::max)
    }
}

impl Propagator {
    /// Exact gradient of the RK4-discretized final population by reverse-mode
    /// transposition of the forward sweep.
    pub fn gradient(&self, config: &SystemConfig, grid: &ControlGrid) -> Result<Gradient> {
        config.validate()?;
        grid.check_bounds(config.scale)?;
        self.gradient_unchecked(config, grid)
    }

    pub(crate) fn gradient_unchecked(&self, config: &SystemConfig, grid: &ControlGrid) -> Result<Gradient> {
        let n = grid.n_intervals();
        let sub = self.steps_per_interval(config, grid);
        let h = grid.interval_width() / sub as f64;

        // forward sweep, keeping the state at the start of every step
        let mut states = Vec::with_capacity(n * sub + 1);
        let mut x = [1.0, 0.0, 0.0, 0.0];
        states.push(x);
        for k in 0..n {
            let (u1, u2) = grid.get(k);
            let m = generator(config, u1, u2);
            for _ in 0..sub {
                x = crate::propagator::rk4_step(&m, &x, h);
                states.push(x);
            }
            if !x.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite {
                    time: (k + 1) as f64 * grid.interval_width(),
                    step: (k + 1) * sub,
                    state: x,
                });
            }
        }
        let efficiency = x[2] * x[2] + x[3] * x[3];

        // backward sweep
        let mut costate = vec![[0.0; 4]; n * sub + 1];
        let mut lambda = [0.0, 0.0, 2.0 * x[2], 2.0 * x[3]];
        costate[n * sub] = lambda;
        let mut du1 = vec![0.0; n];
        let mut du2 = vec![0.0; n];
        for k in (0..n).rev() {
            let (u1, u2) = grid.get(k);
            let m = generator(config, u1, u2);
            let mut m_bar = [[0.0; 4]; 4];
            for j in (0..sub).rev() {
                let idx = k * sub + j;
                lambda = rk4_step_adjoint(&m, &states[idx], h, &lambda, &mut m_bar);
                costate[idx] = lambda;
            }
            let (d1, d2) = generator_derivatives(config, u1, u2);
            du1[k] = contract(&m_bar, &d1);
            du2[k] = contract(&m_bar, &d2);
        }
        Ok(Gradient {
            efficiency,
            du1,
            du2,
            costate,
        })
    }
}

/// Gradient with the default integrator settings.
pub fn gradient(config: &SystemConfig, grid: &ControlGrid) -> Result<Gradient> {
    Propagator::default().gradient(config, grid)
}

fn contract(a: &Matrix4, b: &Matrix4) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

fn add_outer(acc: &mut Matrix4, w: &[f64; 4], y: &[f64; 4]) {
    for i in 0..4 {
        for j in 0..4 {
            acc[i][j] += w[i] * y[j];
        }
    }
}

/// Transpose of one RK4 step. Returns the adjoint of the step input and
/// accumulates the adjoint of `M` into `m_bar`.
fn rk4_step_adjoint(m: &Matrix4, x: &[f64; 4], h: f64, lambda: &[f64; 4], m_bar: &mut Matrix4) -> [f64; 4] {
    let stage = |a: f64, k: &[f64; 4]| -> [f64; 4] { std::array::from_fn(|i| x[i] + a * k[i]) };
    let y1 = *x;
    let k1 = matvec(m, &y1);
    let y2 = stage(0.5 * h, &k1);
    let k2 = matvec(m, &y2);
    let y3 = stage(0.5 * h, &k2);
    let k3 = matvec(m, &y3);
    let y4 = stage(h, &k3);

    let mut x_bar = *lambda;
    let mut k1_bar: [f64; 4] = std::array::from_fn(|i| h / 6.0 * lambda[i]);
    let mut k2_bar: [f64; 4] = std::array::from_fn(|i| h / 3.0 * lambda[i]);
    let mut k3_bar: [f64; 4] = std::array::from_fn(|i| h / 3.0 * lambda[i]);
    let k4_bar: [f64; 4] = std::array::from_fn(|i| h / 6.0 * lambda[i]);

    add_outer(m_bar, &k4_bar, &y4);
    let y4_bar = matvec_t(m, &k4_bar);
    for i in 0..4 {
        x_bar[i] += y4_bar[i];
        k3_bar[i] += h * y4_bar[i];
    }

    add_outer(m_bar, &k3_bar, &y3);
    let y3_bar = matvec_t(m, &k3_bar);
    for i in 0..4 {
        x_bar[i] += y3_bar[i];
        k2_bar[i] += 0.5 * h * y3_bar[i];
    }

    add_outer(m_bar, &k2_bar, &y2);
    let y2_bar = matvec_t(m, &k2_bar);
    for i in 0..4 {
        x_bar[i] += y2_bar[i];
        k1_bar[i] += 0.5 * h * y2_bar[i];
    }

    add_outer(m_bar, &k1_bar, &y1);
    let y1_bar = matvec_t(m, &k1_bar);
    for i in 0..4 {
        x_bar[i] += y1_bar[i];
    }
    x_bar
}

/// Settings for projected-gradient ascent with Armijo backtracking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSettings {
    pub armijo: f64,
    pub shrink: f64,
    pub initial_step: f64,
    /// Stop once the projected-gradient ∞-norm falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Use Barzilai-Borwein trial steps instead of restarting every line
    /// search at `initial_step`.
    pub spectral_steps: bool,
    pub substeps: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            armijo: 1e-4,
            shrink: 0.5,
            initial_step: 1.0,
            tolerance: 1e-6,
            max_iterations: 5000,
            spectral_steps: true,
            substeps: 4,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::param("iteration budget must be >= 1"));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::param(format!(
                "armijo constant must lie in (0, 1), got {}",
                self.armijo
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::param(format!(
                "shrink factor must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::param("initial step must be > 0"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::param("tolerance must be >= 0"));
        }
        if self.substeps == 0 {
            return Err(Error::param("substeps must be >= 1"));
        }
        Ok(())
    }
}

/// Initial control guess for one ascent run.
#[derive(Clone, Debug, PartialEq)]
pub enum Start {
    SinCos,
    /// Gaussian pair stretched over `[0, T]` with `τ/T_g = delay_ratio`.
    Gaussian {
        delay_ratio: f64,
    },
    AllMax,
    CounterintuitiveRamp,
    /// An explicit grid, resampled if its intervals differ from the target.
    Grid {
        label: String,
        grid: ControlGrid,
    },
}

impl Start {
    pub fn label(&self) -> String {
        match self {
            Start::SinCos => "sincos".into(),
            Start::Gaussian { .. } => "gaussian".into(),
            Start::AllMax => "all_max".into(),
            Start::CounterintuitiveRamp => "ramp".into(),
            Start::Grid { label, .. } => label.clone(),
        }
    }

    pub fn grid(&self, config: &SystemConfig, duration: f64, n_intervals: usize) -> Result<ControlGrid> {
        let a = config.scale;
        match self {
            Start::SinCos => sample_onto_grid(&SinCos { scale: a, duration }, duration, n_intervals, a),
            Start::Gaussian { delay_ratio } => {
                let pulses = GaussianPulses::fitted(a, duration, *delay_ratio, 2.0);
                sample_onto_grid(&pulses, duration, n_intervals, a)
            }
            Start::AllMax => {
                let b = config.control_bound();
                ControlGrid::constant(duration, n_intervals, b, b)
            }
            Start::CounterintuitiveRamp => {
                sample_onto_grid(&CounterintuitiveRamp { scale: a, duration }, duration, n_intervals, a)
            }
            Start::Grid { grid, .. } => {
                let same = grid.n_intervals() == n_intervals && (grid.duration() - duration).abs() <= 1e-12 * duration;
                if same {
                    let g = grid.with_duration(duration)?;
                    let bound = config.control_bound();
                    let clamp = |v: &[f64]| v.iter().map(|x| x.clamp(0.0, bound)).collect();
                    ControlGrid::new(duration, clamp(g.u1()), clamp(g.u2()))
                } else {
                    sample_onto_grid(&|t: f64| grid.value_at(t), duration, n_intervals, a)
                }
            }
        }
    }
}

/// Sin-cos, fitted Gaussian pair, all-max and counterintuitive ramp.
pub fn default_starts() -> Vec<Start> {
    vec![
        Start::SinCos,
        Start::Gaussian { delay_ratio: 0.5 },
        Start::AllMax,
        Start::CounterintuitiveRamp,
    ]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub grid: ControlGrid,
    pub efficiency: f64,
    pub initial_efficiency: f64,
    pub iterations: usize,
    pub projected_gradient_norm: f64,
    pub converged: bool,
    pub start_label: String,
    /// Efficiency after every accepted step, starting with the initial guess.
    pub history: Vec<f64>,
}

impl OptimizationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Optimizer {
    pub settings: OptimizerSettings,
}

impl Optimizer {
    pub fn new(settings: OptimizerSettings) -> Result<Self> {
        settings.validate()?;
        Ok(Optimizer { settings })
    }

    fn propagator(&self) -> Propagator {
        Propagator {
            substeps: self.settings.substeps,
        }
    }

    /// Runs every start (in parallel) and keeps the best result: highest
    /// efficiency, then fewest iterations, then earliest start.
    pub fn optimize(
        &self,
        config: &SystemConfig,
        duration: f64,
        n_intervals: usize,
        starts: &[Start],
    ) -> Result<OptimizationReport> {
        self.settings.validate()?;
        config.validate()?;
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::param(format!("duration must be finite and > 0, got {duration}")));
        }
        if n_intervals == 0 {
            return Err(Error::param("n_intervals must be >= 1"));
        }
        if starts.is_empty() {
            return Err(Error::param("at least one start is required"));
        }
        let reports: Vec<Result<OptimizationReport>> = starts
            .par_iter()
            .map(|start| {
                let grid = start.grid(config, duration, n_intervals)?;
                self.ascend(config, grid, &start.label())
            })
            .collect();
        let mut best: Option<OptimizationReport> = None;
        for report in reports {
            let report = report?;
            let better = match &best {
                None => true,
                Some(b) => {
                    report.efficiency > b.efficiency
                        || (report.efficiency == b.efficiency && report.iterations < b.iterations)
                }
            };
            if better {
                best = Some(report);
            }
        }
        Ok(best.expect("starts is non-empty"))
    }

    /// Projected-gradient ascent from a single admissible grid.
    pub fn ascend(&self, config: &SystemConfig, start: ControlGrid, label: &str) -> Result<OptimizationReport> {
        let s = &self.settings;
        s.validate()?;
        config.validate()?;
        start.check_bounds(config.scale)?;
        let prop = self.propagator();
        let bound = config.control_bound();
        // Scaling by 1/h turns the per-sample gradient into a discretized
        // function-space gradient, so unit steps are meaningful at any resolution.
        let metric = 1.0 / start.interval_width();

        let mut grid = start;
        let mut grad = prop.gradient_unchecked(config, &grid)?;
        let initial_efficiency = grad.efficiency;
        let mut history = vec![grad.efficiency];
        let mut pg_norm = grad.projected_norm(&grid, bound);
        let mut converged = pg_norm < s.tolerance;
        let mut iterations = 0;
        let mut trial_step = s.initial_step;

        while !converged && iterations < s.max_iterations {
            let f = grad.efficiency;
            let mut step = trial_step;
            let accepted = loop {
                let candidate = project_step(&grid, &grad, step * metric, bound)?;
                let predicted = directional(&grad, &grid, &candidate);
                if predicted <= 0.0 {
                    // projection removed every ascent component
                    break None;
                }
                let next = prop.gradient_unchecked(config, &candidate)?;
                if next.efficiency >= f + s.armijo * predicted {
                    break Some((candidate, next));
                }
                step *= s.shrink;
                if step < 1e-14 * s.initial_step {
                    break None;
                }
            };
            let Some((candidate, next)) = accepted else {
                log::debug!("{label}: line search stalled after {iterations} iterations");
                break;
            };
            iterations += 1;
            trial_step = if s.spectral_steps {
                spectral_step(&grid, &grad, &candidate, &next, metric).unwrap_or(s.initial_step)
            } else {
                s.initial_step
            };
            grid = candidate;
            grad = next;
            history.push(grad.efficiency);
            pg_norm = grad.projected_norm(&grid, bound);
            converged = pg_norm < s.tolerance;
        }

        Ok(OptimizationReport {
            efficiency: grad.efficiency,
            initial_efficiency,
            iterations,
            projected_gradient_norm: pg_norm,
            converged,
            start_label: label.to_string(),
            history,
            grid,
        })
    }
}

/// [`Optimizer::optimize`] with default settings.
pub fn optimize(
    config: &SystemConfig,
    duration: f64,
    n_intervals: usize,
    starts: &[Start],
) -> Result<OptimizationReport> {
    Optimizer::default().optimize(config, duration, n_intervals, starts)
}

fn project_step(grid: &ControlGrid, grad: &Gradient, step: f64, bound: f64) -> Result<ControlGrid> {
    let mut out = grid.clone();
    let (u1, u2) = out.controls_mut();
    for (u, g) in u1.iter_mut().zip(&grad.du1).chain(u2.iter_mut().zip(&grad.du2)) {
        *u = (*u + step * g).clamp(0.0, bound);
    }
    Ok(out)
}

fn directional(grad: &Gradient, from: &ControlGrid, to: &ControlGrid) -> f64 {
    let a: f64 = grad
        .du1
        .iter()
        .zip(to.u1().iter().zip(from.u1()))
        .map(|(g, (b, a))| g * (b - a))
        .sum();
    let b: f64 = grad
        .du2
        .iter()
        .zip(to.u2().iter().zip(from.u2()))
        .map(|(g, (b, a))| g * (b - a))
        .sum();
    a + b
}

/// Barzilai-Borwein step `<s, s> / <s, -y>` in the scaled metric; `None`
/// when the curvature along `s` is not negative.
fn spectral_step(
    old: &ControlGrid,
    old_grad: &Gradient,
    new: &ControlGrid,
    new_grad: &Gradient,
    metric: f64,
) -> Option<f64> {
    let mut ss = 0.0;
    let mut sy = 0.0;
    let pairs = [
        (old.u1(), new.u1(), &old_grad.du1, &new_grad.du1),
        (old.u2(), new.u2(), &old_grad.du2, &new_grad.du2),
    ];
    for (uo, un, go, gn) in pairs {
        for k in 0..uo.len() {
            let s = un[k] - uo[k];
            let y = metric * (gn[k] - go[k]);
            ss += s * s;
            sy += s * y;
        }
    }
    if sy < 0.0 && ss > 0.0 {
        Some((ss / -sy).clamp(1e-8, 1e8))
    } else {
        None
    }
}

/// Classification of a control sample relative to the box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentLabel {
    BangMax,
    Interior,
    BangMin,
}

impl SegmentLabel {
    pub fn is_bang(self) -> bool {
        !matches!(self, SegmentLabel::Interior)
    }
}

/// A maximal run of intervals with the same label; `first..=last` indexes the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub label: SegmentLabel,
    pub first: usize,
    pub last: usize,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlStructure {
    pub u1: Vec<Segment>,
    pub u2: Vec<Segment>,
}

impl ControlStructure {
    /// Times at which the label of either control changes, per control.
    pub fn switching_times(&self) -> (Vec<f64>, Vec<f64>) {
        let sw = |segs: &[Segment]| segs.iter().skip(1).map(|s| s.t_start).collect();
        (sw(&self.u1), sw(&self.u2))
    }

    /// One bang segment and one interior segment, in either order.
    pub fn is_bang_interior(segments: &[Segment]) -> bool {
        segments.len() == 2 && segments[0].label.is_bang() != segments[1].label.is_bang()
    }
}

/// Default labelling tolerance, as a fraction of `sqrt(A)`.
pub const STRUCTURE_TOLERANCE: f64 = 1e-3;

/// Labels each interval as bang-max, bang-min or interior (within
/// `tolerance * sqrt(A)` of a bound) and merges runs into segments.
pub fn detect_structure(grid: &ControlGrid, tolerance: f64, scale: f64) -> ControlStructure {
    let bound = scale.sqrt();
    let band = tolerance * bound;
    let label = |v: f64| {
        if v >= bound - band {
            SegmentLabel::BangMax
        } else if v <= band {
            SegmentLabel::BangMin
        } else {
            SegmentLabel::Interior
        }
    };
    let segments = |values: &[f64]| {
        let mut out: Vec<Segment> = Vec::new();
        for (k, &v) in values.iter().enumerate() {
            let l = label(v);
            let (t0, t1) = grid.interval(k);
            match out.last_mut() {
                Some(seg) if seg.label == l => {
                    seg.last = k;
                    seg.t_end = t1;
                }
                _ => out.push(Segment {
                    label: l,
                    first: k,
                    last: k,
                    t_start: t0,
                    t_end: t1,
                }),
            }
        }
        out
    };
    ControlStructure {
        u1: segments(grid.u1()),
        u2: segments(grid.u2()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DetuningMode;
    use approx::assert_abs_diff_eq;

    fn fd_gradient(config: &SystemConfig, grid: &ControlGrid, eps: f64) -> (Vec<f64>, Vec<f64>) {
        let prop = Propagator::default();
        let eval = |g: &ControlGrid| prop.final_state_unchecked(config, g).unwrap().excited_population();
        let mut d1 = vec![0.0; grid.n_intervals()];
        let mut d2 = vec![0.0; grid.n_intervals()];
        for k in 0..grid.n_intervals() {
            for (which, out) in [(0, &mut d1), (1, &mut d2)] {
                let mut plus = grid.clone();
                let mut minus = grid.clone();
                {
                    let (a, b) = plus.controls_mut();
                    if which == 0 {
                        a[k] += eps
                    } else {
                        b[k] += eps
                    }
                }
                {
                    let (a, b) = minus.controls_mut();
                    if which == 0 {
                        a[k] -= eps
                    } else {
                        b[k] -= eps
                    }
                }
                out[k] = (eval(&plus) - eval(&minus)) / (2.0 * eps);
            }
        }
        (d1, d2)
    }

    #[test]
    fn zero_controls_have_zero_u1_gradient() {
        let cfg = SystemConfig::new(-6.0, 0.25, DetuningMode::Resonant).unwrap();
        let grid = ControlGrid::zeros(2.0, 10).unwrap();
        let g = gradient(&cfg, &grid).unwrap();
        let (f1, f2) = fd_gradient(&cfg, &grid, 1e-6);
        for k in 0..10 {
            assert_eq!(g.du1[k], 0.0);
            assert!(f1[k].abs() < 1e-10);
            assert!(f2[k].abs() < 1e-10);
        }
        assert_eq!(g.efficiency, 0.0);
    }

    #[test]
    fn terminal_costate() {
        let cfg = SystemConfig::new(-6.0, 0.25, DetuningMode::DynamicStark).unwrap();
        let grid = Start::SinCos.grid(&cfg, 2.0, 20).unwrap();
        let g = gradient(&cfg, &grid).unwrap();
        let fin = propagate_final(&cfg, &grid);
        let last = g.costate.last().unwrap();
        assert_eq!(last, &[0.0, 0.0, 2.0 * fin[2], 2.0 * fin[3]]);
        assert_eq!(g.costate.len(), 20 * 4 + 1);
    }

    fn propagate_final(cfg: &SystemConfig, grid: &ControlGrid) -> [f64; 4] {
        crate::propagator::propagate(cfg, grid, false).unwrap().final_state.0
    }

    #[test]
    fn sincos_gradient_matches_differences() {
        let cfg = SystemConfig::new(-6.0, 0.25, DetuningMode::Resonant).unwrap();
        let grid = Start::SinCos.grid(&cfg, 3.0, 40).unwrap();
        let g = gradient(&cfg, &grid).unwrap();
        let (f1, f2) = fd_gradient(&cfg, &grid, 1e-6);
        let scale = g.du1.iter().chain(&g.du2).fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..40 {
            assert!(
                (g.du1[k] - f1[k]).abs() < 1e-5 * scale,
                "u1[{k}]: {} vs {}",
                g.du1[k],
                f1[k]
            );
            assert!(
                (g.du2[k] - f2[k]).abs() < 1e-5 * scale,
                "u2[{k}]: {} vs {}",
                g.du2[k],
                f2[k]
            );
        }
    }

    #[test]
    fn settings_validation() {
        let bad = OptimizerSettings {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(Optimizer::new(bad).is_err());
        let cfg = SystemConfig::default();
        assert!(optimize(&cfg, 1.0, 10, &[]).is_err());
        assert!(optimize(&cfg, 0.0, 10, &default_starts()).is_err());
    }

    #[test]
    fn ascent_is_monotone_and_feasible() {
        let cfg = SystemConfig::new(-6.0, 0.25, DetuningMode::Resonant).unwrap();
        let opt = Optimizer::new(OptimizerSettings {
            max_iterations: 200,
            ..Default::default()
        })
        .unwrap();
        let report = opt.optimize(&cfg, 3.0, 60, &default_starts()).unwrap();
        assert!(report.history.windows(2).all(|w| w[1] >= w[0]));
        report.grid.check_bounds(cfg.scale).unwrap();
        assert!(report.efficiency >= report.initial_efficiency);
    }

    #[test]
    fn structure_of_flat_grids() {
        let max = ControlGrid::constant(1.0, 10, 1.0, 1.0).unwrap();
        let s = detect_structure(&max, STRUCTURE_TOLERANCE, 1.0);
        assert_eq!(s.u1.len(), 1);
        assert_eq!(s.u1[0].label, SegmentLabel::BangMax);
        assert_eq!((s.u1[0].first, s.u1[0].last), (0, 9));
        let zero = ControlGrid::zeros(1.0, 10).unwrap();
        let s = detect_structure(&zero, STRUCTURE_TOLERANCE, 1.0);
        assert_eq!(s.u2.len(), 1);
        assert_eq!(s.u2[0].label, SegmentLabel::BangMin);
    }

    #[test]
    fn structure_segments_and_switches() {
        let grid = ControlGrid::new(4.0, vec![0.5, 0.6, 1.0, 1.0], vec![1.0, 0.9995, 0.3, 0.0]).unwrap();
        let s = detect_structure(&grid, STRUCTURE_TOLERANCE, 1.0);
        assert!(ControlStructure::is_bang_interior(&s.u1));
        assert_eq!(s.u1[1].label, SegmentLabel::BangMax);
        assert_eq!(s.u2.len(), 3);
        let (sw1, sw2) = s.switching_times();
        assert_abs_diff_eq!(sw1[0], 2.0);
        assert_eq!(sw2, vec![2.0, 3.0]);
    }
}
