//! Baseline searches, duration/R/q sweeps, saturation extraction, pulse
//! smoothing and distortion robustness, with CSV and JSON manifest output.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sample_onto_grid, ControlGrid, DetuningMode, GaussianPulses, SinCos, SystemConfig};
use crate::optimizer::{default_starts, OptimizationReport, Optimizer, OptimizerSettings, Start};
use crate::propagator::Propagator;

/// One efficiency curve over a strictly increasing axis, with optional
/// per-point metadata columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis_name: String,
    pub axis_values: Vec<f64>,
    pub efficiencies: Vec<f64>,
    pub metadata_columns: Vec<String>,
    pub metadata: Vec<Vec<String>>,
}

impl SweepResult {
    pub fn new(axis_name: impl Into<String>, metadata_columns: &[&str]) -> Self {
        SweepResult {
            axis_name: axis_name.into(),
            axis_values: Vec::new(),
            efficiencies: Vec::new(),
            metadata_columns: metadata_columns.iter().map(|s| s.to_string()).collect(),
            metadata: Vec::new(),
        }
    }

    pub fn push(&mut self, axis: f64, efficiency: f64, meta: Vec<String>) {
        debug_assert_eq!(meta.len(), self.metadata_columns.len());
        self.axis_values.push(axis);
        self.efficiencies.push(efficiency);
        self.metadata.push(meta);
    }

    pub fn len(&self) -> usize {
        self.axis_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis_values.is_empty()
    }

    /// `(axis value, efficiency)` of the first maximum.
    pub fn argmax(&self) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (&a, &e) in self.axis_values.iter().zip(&self.efficiencies) {
            if best.is_none_or(|(_, b)| e > b) {
                best = Some((a, e));
            }
        }
        best
    }

    pub fn max(&self) -> Option<f64> {
        self.argmax().map(|(_, e)| e)
    }

    /// Parses metadata column `name` at row `i` as a number.
    pub fn meta_f64(&self, i: usize, name: &str) -> Option<f64> {
        let c = self.metadata_columns.iter().position(|m| m == name)?;
        self.metadata.get(i)?.get(c)?.parse().ok()
    }

    /// Writes `axis, efficiency, metadata...` with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header = vec![self.axis_name.clone(), "efficiency".to_string()];
        header.extend(self.metadata_columns.iter().cloned());
        wtr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![self.axis_values[i].to_string(), self.efficiencies[i].to_string()];
            row.extend(self.metadata[i].iter().cloned());
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn check_increasing(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::param(format!("{what} grid is empty")));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::param(format!("{what} grid contains {bad}")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(format!("{what} grid must be strictly increasing")));
    }
    Ok(())
}

/// Rounds away accumulated float noise (`0.1 * 3 = 0.30000000000000004`) so
/// grid values print the way they were specified.
fn snap(x: f64) -> f64 {
    let s = (x * 1e12).round() / 1e12;
    if s.is_finite() {
        s
    } else {
        x
    }
}

/// Evenly spaced grid `start, start + step, ...` up to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(Error::param(format!("invalid range {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| snap(start + i as f64 * step)).collect())
}

/// Metadata written next to every sweep CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config: SystemConfig,
    pub seed: u64,
    pub parameters: serde_json::Value,
}

impl Manifest {
    pub fn new(experiment: impl Into<String>, config: SystemConfig, seed: u64, parameters: serde_json::Value) -> Self {
        Manifest {
            tool: "lics".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            experiment: experiment.into(),
            config,
            seed,
            parameters,
        }
    }
}

/// Writes `<dir>/<name>.csv` and `<dir>/<name>.json`, returning both paths.
pub fn write_sweep(dir: &Path, name: &str, sweep: &SweepResult, manifest: &Manifest) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{name}.csv"));
    let json_path = dir.join(format!("{name}.json"));
    sweep.write_csv(std::fs::File::create(&csv_path)?)?;
    let mut f = std::fs::File::create(&json_path)?;
    serde_json::to_writer_pretty(&mut f, manifest)?;
    f.write_all(b"\n")?;
    Ok((csv_path, json_path))
}

/// Gaussian-pair grid search settings: widths `AT_g` and ratios `τ/T_g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSearch {
    pub width_start: f64,
    pub width_stop: f64,
    pub width_step: f64,
    pub ratio_start: f64,
    pub ratio_stop: f64,
    pub ratio_step: f64,
    /// Longest control interval used when sampling the pulses.
    pub max_interval: f64,
    pub min_intervals: usize,
}

impl Default for BaselineSearch {
    fn default() -> Self {
        BaselineSearch {
            width_start: 0.1,
            width_stop: 20.0,
            width_step: 0.1,
            ratio_start: 0.0,
            ratio_stop: 1.5,
            ratio_step: 0.05,
            max_interval: 0.05,
            min_intervals: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub efficiency: f64,
    /// Pulse width parameter `T_g` in units of `1/A`.
    pub width: f64,
    /// Half delay `τ` between the pulse centres.
    pub half_delay: f64,
}

impl BaselineSearch {
    /// Control grid for one Gaussian pair on its truncated window.
    pub fn grid(&self, scale: f64, width: f64, half_delay: f64) -> Result<ControlGrid> {
        let pulses = GaussianPulses::new(scale, width, half_delay)?;
        let window = pulses.window();
        let n = ((window / self.max_interval).ceil() as usize).max(self.min_intervals);
        sample_onto_grid(&pulses, window, n, scale)
    }

    pub fn efficiency(&self, config: &SystemConfig, width: f64, half_delay: f64) -> Result<f64> {
        let grid = self.grid(config.scale, width, half_delay)?;
        Propagator::default().efficiency(config, &grid)
    }

    /// Exhaustive search; ties go to the smallest width, then the smallest delay.
    pub fn run(&self, config: &SystemConfig) -> Result<BaselineResult> {
        config.validate()?;
        let widths = linear_grid(self.width_start, self.width_stop, self.width_step)?;
        let ratios = linear_grid(self.ratio_start, self.ratio_stop, self.ratio_step)?;
        if widths[0] <= 0.0 {
            return Err(Error::param("Gaussian widths must be > 0"));
        }
        let scale = config.scale;
        let points: Vec<(f64, f64)> = widths
            .iter()
            .flat_map(|&w| ratios.iter().map(move |&r| (snap(w / scale), snap(r * w / scale))))
            .collect();
        let values: Vec<f64> = points
            .par_iter()
            .map(|&(w, tau)| self.efficiency(config, w, tau))
            .collect::<Result<_>>()?;
        let mut best = BaselineResult {
            efficiency: f64::NEG_INFINITY,
            width: 0.0,
            half_delay: 0.0,
        };
        for (&(width, half_delay), &efficiency) in points.iter().zip(&values) {
            if efficiency > best.efficiency {
                best = BaselineResult {
                    efficiency,
                    width,
                    half_delay,
                };
            }
        }
        Ok(best)
    }
}

/// Best Gaussian-pair efficiency over the default width/delay grid.
pub fn gaussian_baseline_search(config: &SystemConfig) -> Result<BaselineResult> {
    BaselineSearch::default().run(config)
}

/// Sin-cos efficiency for every normalized duration in `at_grid`.
pub fn sincos_sweep(config: &SystemConfig, at_grid: &[f64], n_intervals: usize) -> Result<SweepResult> {
    config.validate()?;
    check_increasing(at_grid, "AT")?;
    if at_grid[0] <= 0.0 {
        return Err(Error::param("durations must be > 0"));
    }
    let prop = Propagator::default();
    let values: Vec<f64> = at_grid
        .par_iter()
        .map(|&at| {
            let duration = at / config.scale;
            let grid = sample_onto_grid(
                &SinCos {
                    scale: config.scale,
                    duration,
                },
                duration,
                n_intervals,
                config.scale,
            )?;
            prop.efficiency(config, &grid)
        })
        .collect::<Result<_>>()?;
    let mut sweep = SweepResult::new("AT", &[]);
    for (&at, &e) in at_grid.iter().zip(&values) {
        sweep.push(at, e, Vec::new());
    }
    Ok(sweep)
}

/// Settings shared by duration sweeps and saturation searches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DurationSweep {
    /// Control-interval width in units of `1/A`. Durations that are multiples
    /// of it chain warm starts exactly.
    pub interval_width: f64,
    pub optimizer: OptimizerSettings,
    /// Run the standard start set at every point, not only the warm start.
    pub standard_starts: bool,
}

impl Default for DurationSweep {
    fn default() -> Self {
        DurationSweep {
            interval_width: 0.025,
            optimizer: OptimizerSettings::default(),
            standard_starts: true,
        }
    }
}

/// Result of one point of a warm-started duration chain.
#[derive(Clone, Debug)]
pub struct ChainPoint {
    pub normalized_duration: f64,
    pub report: OptimizationReport,
}

impl DurationSweep {
    /// Optimizes one duration, seeding with `previous` padded by zero intervals
    /// (or resampled when the interval widths differ).
    pub fn step(
        &self,
        optimizer: &Optimizer,
        config: &SystemConfig,
        normalized_duration: f64,
        previous: Option<&ControlGrid>,
    ) -> Result<OptimizationReport> {
        let duration = normalized_duration / config.scale;
        let w = self.interval_width;
        let lattice_n = ((duration / w).round() as usize).max(1);
        let on_lattice = (lattice_n as f64 * w - duration).abs() <= 1e-9 * duration.max(1.0);
        let (n, duration) = if on_lattice {
            (lattice_n, lattice_n as f64 * w)
        } else {
            (((duration / w).ceil() as usize).max(1), duration)
        };
        let mut starts = if self.standard_starts || previous.is_none() {
            default_starts()
        } else {
            Vec::new()
        };
        if let Some(prev) = previous {
            let exact = on_lattice && (prev.interval_width() - w).abs() <= 1e-12 * w && n >= prev.n_intervals();
            let seed = if exact {
                prev.padded_with_zeros(n - prev.n_intervals())
            } else {
                prev.clone()
            };
            starts.insert(
                0,
                Start::Grid {
                    label: "warm".into(),
                    grid: seed,
                },
            );
            // zero padding is a stationary point of the new tail, so a warm-only
            // chain also needs the previous optimum stretched over the new duration
            if !self.standard_starts {
                starts.push(Start::Grid {
                    label: "stretched".into(),
                    grid: prev.with_duration(duration)?,
                });
            }
        }
        optimizer.optimize(config, duration, n, &starts)
    }

    /// Sequential warm-started chain over increasing durations.
    pub fn chain(&self, config: &SystemConfig, at_grid: &[f64]) -> Result<Vec<ChainPoint>> {
        config.validate()?;
        check_increasing(at_grid, "AT")?;
        if at_grid[0] <= 0.0 {
            return Err(Error::param("durations must be > 0"));
        }
        let optimizer = Optimizer::new(self.optimizer.clone())?;
        let mut out: Vec<ChainPoint> = Vec::with_capacity(at_grid.len());
        for &at in at_grid {
            let previous = out.last().map(|p| &p.report.grid);
            let report = self.step(&optimizer, config, at, previous)?;
            if let Some(p) = out.last() {
                if report.efficiency < p.report.efficiency {
                    log::warn!(
                        "efficiency dropped from {} to {} at AT = {at}; warm start was resampled",
                        p.report.efficiency,
                        report.efficiency
                    );
                }
            }
            out.push(ChainPoint {
                normalized_duration: at,
                report,
            });
        }
        Ok(out)
    }
}

fn chain_to_sweep(points: &[ChainPoint]) -> SweepResult {
    let mut sweep = SweepResult::new("AT", &["n_intervals", "iterations", "projected_gradient_norm", "start"]);
    for p in points {
        let r = &p.report;
        sweep.push(
            p.normalized_duration,
            r.efficiency,
            vec![
                r.grid.n_intervals().to_string(),
                r.iterations.to_string(),
                format!("{:e}", r.projected_gradient_norm),
                r.start_label.clone(),
            ],
        );
    }
    sweep
}

/// Optimized efficiency along a warm-started chain of durations.
pub fn optimal_duration_sweep(config: &SystemConfig, at_grid: &[f64], settings: &DurationSweep) -> Result<SweepResult> {
    Ok(chain_to_sweep(&settings.chain(config, at_grid)?))
}

/// Stopping rule for the large-duration plateau.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaturationSearch {
    pub sweep: DurationSweep,
    pub start: f64,
    /// Minimum ladder step.
    pub step: f64,
    /// Relative growth of the ladder step once `growth * AT` exceeds `step`.
    pub growth: f64,
    pub gain_tolerance: f64,
    pub cap: f64,
}

impl Default for SaturationSearch {
    fn default() -> Self {
        SaturationSearch {
            // continuation ladder: the full start set only at the first point
            sweep: DurationSweep {
                standard_starts: false,
                ..DurationSweep::default()
            },
            start: 0.1,
            step: 0.1,
            growth: 0.1,
            gain_tolerance: 1e-4,
            cap: 50.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Saturation {
    pub efficiency: f64,
    pub normalized_duration: f64,
    /// False when the cap was reached while the efficiency was still rising.
    pub saturated: bool,
    pub sweep: SweepResult,
    pub grid: ControlGrid,
}

impl SaturationSearch {
    /// Next ladder point, rounded to a whole number of minimum steps.
    fn next(&self, at: f64) -> f64 {
        self.next_unclamped(at).min(self.cap)
    }

    fn next_unclamped(&self, at: f64) -> f64 {
        let inc = (self.growth * at / self.step).round().max(1.0) * self.step;
        snap(((at + inc) / self.step).round() * self.step)
    }

    pub fn run(&self, config: &SystemConfig) -> Result<Saturation> {
        config.validate()?;
        if !(self.start > 0.0 && self.step > 0.0 && self.cap >= self.start) {
            return Err(Error::param("invalid saturation ladder"));
        }
        let optimizer = Optimizer::new(self.sweep.optimizer.clone())?;
        let mut points: Vec<ChainPoint> = Vec::new();
        let mut at = self.start;
        let mut saturated = false;
        loop {
            let previous = points.last().map(|p| &p.report.grid);
            let report = self.sweep.step(&optimizer, config, at, previous)?;
            // A step truncated by the cap is shorter than the ladder's usual
            // increment, so its gain is rescaled before the plateau test.
            let gain = points.last().map(|p| {
                let full = self.next_unclamped(p.normalized_duration) - p.normalized_duration;
                let taken = at - p.normalized_duration;
                (report.efficiency - p.report.efficiency) * full / taken
            });
            log::debug!(
                "saturation {} R={} AT={at}: {}",
                config.detuning_mode,
                config.incoherence,
                report.efficiency
            );
            points.push(ChainPoint {
                normalized_duration: at,
                report,
            });
            if gain.is_some_and(|g| g < self.gain_tolerance) {
                saturated = true;
                break;
            }
            if at >= self.cap {
                break;
            }
            at = self.next(at);
        }
        let best = points
            .iter()
            .max_by(|a, b| a.report.efficiency.total_cmp(&b.report.efficiency))
            .expect("ladder has at least one point");
        Ok(Saturation {
            efficiency: best.report.efficiency,
            normalized_duration: best.normalized_duration,
            saturated,
            grid: best.report.grid.clone(),
            sweep: chain_to_sweep(&points),
        })
    }
}

/// Plateau of the optimized efficiency with the default ladder.
pub fn saturation_limit(config: &SystemConfig) -> Result<Saturation> {
    SaturationSearch::default().run(config)
}

fn saturation_sweep(
    axis: &str,
    axis_values: &[f64],
    configs: Vec<SystemConfig>,
    search: &SaturationSearch,
) -> Result<SweepResult> {
    let results: Vec<Saturation> = configs.par_iter().map(|c| search.run(c)).collect::<Result<_>>()?;
    let mut sweep = SweepResult::new(axis, &["AT", "saturated"]);
    for (&v, s) in axis_values.iter().zip(&results) {
        sweep.push(
            v,
            s.efficiency,
            vec![s.normalized_duration.to_string(), s.saturated.to_string()],
        );
    }
    Ok(sweep)
}

/// Saturation efficiency as a function of the incoherence ratio `R`.
pub fn r_sweep(
    base: &SystemConfig,
    mode: DetuningMode,
    r_grid: &[f64],
    search: &SaturationSearch,
) -> Result<SweepResult> {
    check_increasing(r_grid, "R")?;
    let configs = r_grid
        .iter()
        .map(|&r| {
            let c = SystemConfig {
                incoherence: r,
                detuning_mode: mode,
                ..*base
            };
            c.validate().map(|_| c)
        })
        .collect::<Result<Vec<_>>>()?;
    saturation_sweep("R", r_grid, configs, search)
}

/// Saturation efficiency as a function of the Fano parameter `q`.
pub fn fano_sweep(base: &SystemConfig, q_grid: &[f64], search: &SaturationSearch) -> Result<SweepResult> {
    check_increasing(q_grid, "q")?;
    let configs = q_grid
        .iter()
        .map(|&q| {
            let c = SystemConfig { q, ..*base };
            c.validate().map(|_| c)
        })
        .collect::<Result<Vec<_>>>()?;
    saturation_sweep("q", q_grid, configs, search)
}

/// Second derivatives of the natural cubic spline through `(x, y)`.
fn natural_spline_moments(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior equations
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        if i > 1 {
            let w = h0 / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
    }
    for i in (1..n - 1).rev() {
        let next = if i + 1 < n - 1 { upper[i] * m[i + 1] } else { 0.0 };
        m[i] = (rhs[i] - next) / diag[i];
    }
    m
}

fn eval_spline(x: &[f64], y: &[f64], m: &[f64], t: f64) -> f64 {
    let j = match x.partition_point(|&k| k <= t) {
        0 => 0,
        p => (p - 1).min(x.len() - 2),
    };
    let h = x[j + 1] - x[j];
    let a = (x[j + 1] - t) / h;
    let b = (t - x[j]) / h;
    a * y[j] + b * y[j + 1] + ((a * a * a - a) * m[j] + (b * b * b - b) * m[j + 1]) * h * h / 6.0
}

/// Keeps every `factor`-th sample (plus the last one), rebuilds the full grid
/// with a natural cubic spline through the kept midpoints, and clamps to the box.
pub fn smooth_controls(grid: &ControlGrid, factor: usize, scale: f64) -> Result<ControlGrid> {
    if factor < 2 {
        return Err(Error::param(format!("undersampling factor must be >= 2, got {factor}")));
    }
    let n = grid.n_intervals();
    if n < 2 {
        return Err(Error::grid("smoothing needs at least 2 samples"));
    }
    let mut knots: Vec<usize> = (0..n).step_by(factor).collect();
    if *knots.last().unwrap() != n - 1 {
        knots.push(n - 1);
    }
    let x: Vec<f64> = knots.iter().map(|&k| grid.midpoint(k)).collect();
    let bound = scale.sqrt();
    let rebuild = |values: &[f64]| -> Vec<f64> {
        let y: Vec<f64> = knots.iter().map(|&k| values[k]).collect();
        let m = natural_spline_moments(&x, &y);
        (0..n)
            .map(|k| eval_spline(&x, &y, &m, grid.midpoint(k)).clamp(0.0, bound))
            .collect()
    };
    ControlGrid::new(grid.duration(), rebuild(grid.u1()), rebuild(grid.u2()))
}

/// Default distortion grid `0, 0.05, ..., 2`.
pub fn default_alphas() -> Vec<f64> {
    (0..=40).map(|i| snap(i as f64 * 0.05)).collect()
}

/// Efficiency under distorted widths `α Γ(t)` (controls scaled by `sqrt(α)`).
/// When `baseline` is given it is reported as a constant column.
pub fn robustness_scan(
    config: &SystemConfig,
    grid: &ControlGrid,
    alphas: &[f64],
    baseline: Option<f64>,
) -> Result<SweepResult> {
    config.validate()?;
    grid.check_bounds(config.scale)?;
    check_increasing(alphas, "alpha")?;
    if let Some(a) = alphas.iter().find(|&&a| a < 0.0) {
        return Err(Error::param(format!("distortion parameter must be >= 0, got {a}")));
    }
    let prop = Propagator::default();
    let values: Vec<f64> = alphas
        .par_iter()
        .map(|&alpha| {
            if alpha == 0.0 {
                return Ok(0.0);
            }
            // the distorted pulses are admissible for the box sqrt(αA)
            let distorted = SystemConfig {
                scale: alpha * config.scale,
                ..*config
            };
            prop.efficiency(&distorted, &grid.scaled(alpha.sqrt())?)
        })
        .collect::<Result<_>>()?;
    let columns: &[&str] = if baseline.is_some() {
        &["gaussian_baseline"]
    } else {
        &[]
    };
    let mut sweep = SweepResult::new("alpha", columns);
    for (&a, &e) in alphas.iter().zip(&values) {
        sweep.push(a, e, baseline.iter().map(|b| b.to_string()).collect());
    }
    Ok(sweep)
}

/// Which column of the comparison table a cell belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gaussian,
    SinCos,
    Optimal,
}

/// One computed cell with its winning parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableCell {
    pub efficiency: Option<f64>,
    /// `T_g, τ` for Gaussian pulses; `AT` otherwise.
    pub parameters: Vec<f64>,
    pub error: Option<String>,
}

impl TableCell {
    fn from_result(r: Result<(f64, Vec<f64>)>) -> Self {
        match r {
            Ok((e, p)) => TableCell {
                efficiency: Some(e),
                parameters: p,
                error: None,
            },
            Err(err) => TableCell {
                efficiency: None,
                parameters: Vec::new(),
                error: Some(err.to_string()),
            },
        }
    }

    fn annotation(&self) -> String {
        match (&self.efficiency, &self.error) {
            (Some(e), _) => {
                let params = self
                    .parameters
                    .iter()
                    .map(|p| format!("{p:.2}"))
                    .collect::<Vec<_>>()
                    .join(",");
                format!("{e:.4} ({params})")
            }
            (None, Some(err)) => format!("error: {err}"),
            (None, None) => "-".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableRow {
    pub mode: DetuningMode,
    pub r: f64,
    pub gaussian: TableCell,
    pub sincos: TableCell,
    pub optimal: TableCell,
}

/// Settings for the Gaussian / sin-cos / optimal comparison.
#[derive(Clone, Debug, Default)]
pub struct ComparisonTable {
    pub q: f64,
    pub baseline: BaselineSearch,
    pub saturation: SaturationSearch,
}

/// The four incoherence ratios of the comparison table.
pub const TABLE_RATIOS: [f64; 4] = [0.0, 1.0 / 16.0, 0.25, 1.0];

/// Sin-cos durations scanned for the table: `0.01..=20` in steps of 0.01.
pub fn table_sincos_grid() -> Vec<f64> {
    (1..=2000).map(|i| snap(i as f64 * 0.01)).collect()
}

impl ComparisonTable {
    pub fn new(q: f64) -> Self {
        ComparisonTable {
            q,
            ..Default::default()
        }
    }

    pub fn cell(&self, mode: DetuningMode, r: f64, method: Method) -> TableCell {
        let run = || -> Result<(f64, Vec<f64>)> {
            let config = SystemConfig::new(self.q, r, mode)?;
            match method {
                Method::Gaussian => {
                    let b = self.baseline.run(&config)?;
                    Ok((b.efficiency, vec![b.width, b.half_delay]))
                }
                Method::SinCos => {
                    let s = sincos_sweep(&config, &table_sincos_grid(), 200)?;
                    let (at, e) = s.argmax().expect("non-empty grid");
                    Ok((e, vec![at]))
                }
                Method::Optimal => {
                    let s = self.saturation.run(&config)?;
                    Ok((s.efficiency, vec![s.normalized_duration]))
                }
            }
        };
        TableCell::from_result(run())
    }

    /// All 8 `(mode, R)` rows; cells run concurrently and failures stay local.
    pub fn run(&self) -> Vec<TableRow> {
        let keys: Vec<(DetuningMode, f64)> = [DetuningMode::Resonant, DetuningMode::DynamicStark]
            .iter()
            .flat_map(|&m| TABLE_RATIOS.iter().map(move |&r| (m, r)))
            .collect();
        keys.par_iter()
            .map(|&(mode, r)| {
                let (gaussian, (sincos, optimal)) = rayon::join(
                    || self.cell(mode, r, Method::Gaussian),
                    || {
                        rayon::join(
                            || self.cell(mode, r, Method::SinCos),
                            || self.cell(mode, r, Method::Optimal),
                        )
                    },
                );
                TableRow {
                    mode,
                    r,
                    gaussian,
                    sincos,
                    optimal,
                }
            })
            .collect()
    }
}

/// CSV with one line per row: `mode, R, gaussian, T_g, tau, sincos, AT, optimal, AT`.
pub fn write_table_csv<W: Write>(rows: &[TableRow], writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    wtr.write_record([
        "mode",
        "R",
        "gaussian",
        "gaussian_T",
        "gaussian_tau",
        "sincos",
        "sincos_AT",
        "optimal",
        "optimal_AT",
    ])?;
    let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in rows {
        wtr.write_record([
            row.mode.to_string(),
            row.r.to_string(),
            num(row.gaussian.efficiency),
            num(row.gaussian.parameters.first().copied()),
            num(row.gaussian.parameters.get(1).copied()),
            num(row.sincos.efficiency),
            num(row.sincos.parameters.first().copied()),
            num(row.optimal.efficiency),
            num(row.optimal.parameters.first().copied()),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Aligned text table, one block per detuning mode.
pub fn format_table(rows: &[TableRow]) -> String {
    let mut out = String::new();
    for mode in [DetuningMode::Resonant, DetuningMode::DynamicStark] {
        out.push_str(&format!("detuning: {mode}\n"));
        out.push_str(&format!(
            "{:<8} {:<26} {:<26} {:<26}\n",
            "R", "Gaussian (T, tau)", "Sin-Cos (AT)", "Optimal (AT)"
        ));
        for row in rows.iter().filter(|r| r.mode == mode) {
            out.push_str(&format!(
                "{:<8} {:<26} {:<26} {:<26}\n",
                format!("{:.4}", row.r),
                row.gaussian.annotation(),
                row.sincos.annotation(),
                row.optimal.annotation()
            ));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear_grid_counts() {
        let g = linear_grid(0.0, 1.0, 0.05).unwrap();
        assert_eq!(g.len(), 21);
        assert_abs_diff_eq!(*g.last().unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(linear_grid(0.1, 20.0, 0.1).unwrap().len(), 200);
        assert!(linear_grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn spline_reproduces_constants_and_lines() {
        let c = ControlGrid::constant(2.0, 57, 0.4, 0.9).unwrap();
        let s = smooth_controls(&c, 20, 1.0).unwrap();
        for k in 0..57 {
            assert_abs_diff_eq!(s.u1()[k], 0.4, epsilon = 1e-14);
            assert_abs_diff_eq!(s.u2()[k], 0.9, epsilon = 1e-14);
        }
        let n = 200;
        let ramp: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
        let down: Vec<f64> = ramp.iter().map(|v| 1.0 - v).collect();
        let g = ControlGrid::new(3.0, ramp.clone(), down.clone()).unwrap();
        let s = smooth_controls(&g, 20, 1.0).unwrap();
        for k in 0..n {
            assert_abs_diff_eq!(s.u1()[k], ramp[k], epsilon = 1e-10);
            assert_abs_diff_eq!(s.u2()[k], down[k], epsilon = 1e-10);
        }
    }

    #[test]
    fn spline_interpolates_knots() {
        let vals: Vec<f64> = (0..41).map(|k| 0.5 + 0.4 * (k as f64 * 0.3).sin()).collect();
        let g = ControlGrid::new(1.0, vals.clone(), vals.clone()).unwrap();
        let s = smooth_controls(&g, 4, 1.0).unwrap();
        for k in (0..41).step_by(4) {
            assert_abs_diff_eq!(s.u1()[k], vals[k], epsilon = 1e-14);
        }
        assert!(smooth_controls(&g, 1, 1.0).is_err());
        let short = ControlGrid::constant(1.0, 1, 0.0, 0.0).unwrap();
        assert!(smooth_controls(&short, 2, 1.0).is_err());
    }

    #[test]
    fn robustness_endpoints() {
        let cfg = SystemConfig::new(-6.0, 0.25, DetuningMode::Resonant).unwrap();
        let grid = Start::SinCos.grid(&cfg, 1.9, 100).unwrap();
        let reference = Propagator::default().efficiency(&cfg, &grid).unwrap();
        let scan = robustness_scan(&cfg, &grid, &[0.0, 1.0], Some(0.71)).unwrap();
        assert_eq!(scan.efficiencies[0], 0.0);
        assert_eq!(scan.efficiencies[1], reference);
        assert_eq!(scan.meta_f64(1, "gaussian_baseline"), Some(0.71));
        assert!(robustness_scan(&cfg, &grid, &[-0.5, 1.0], None).is_err());
    }

    #[test]
    fn sweep_csv_layout() {
        let mut s = SweepResult::new("R", &["AT", "saturated"]);
        s.push(0.0, 0.5, vec!["1.5".into(), "true".into()]);
        s.push(0.25, 0.25, vec!["2".into(), "false".into()]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "R,efficiency,AT,saturated\n0,0.5,1.5,true\n0.25,0.25,2,false\n"
        );
        assert_eq!(s.argmax(), Some((0.0, 0.5)));
        assert_eq!(s.meta_f64(0, "AT"), Some(1.5));
    }

    #[test]
    fn grids_must_increase() {
        let cfg = SystemConfig::default();
        assert!(sincos_sweep(&cfg, &[1.0, 1.0], 10).is_err());
        assert!(sincos_sweep(&cfg, &[], 10).is_err());
        assert!(fano_sweep(&cfg, &[-2.0, -4.0], &SaturationSearch::default()).is_err());
    }

    #[test]
    fn saturation_ladder_steps() {
        let s = SaturationSearch::default();
        assert_abs_diff_eq!(s.next(0.1), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(s.next(1.0), 1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(s.next(2.0), 2.2, epsilon = 1e-12);
        assert_abs_diff_eq!(s.next(10.0), 11.0, epsilon = 1e-12);
        assert_eq!(s.next(49.0), 50.0);
    }
}
