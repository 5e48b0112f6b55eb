//! Physical parameters, control envelopes and the control grid.
//!
//! Everything lives in the rotated amplitude frame where the pump-induced
//! phase has been removed, so `b_g = x1 + i x2` and `b_e = x3 + i x4`. Times
//! are measured in units of `1/A` and the controls are square roots of the
//! ionization widths, `u1 = sqrt(Γ^p_g)` and `u2 = sqrt(Γ^s_e)`.

use std::f64::consts::FRAC_PI_2;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the effective two-photon detuning is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningMode {
    /// Effective two-photon resonance, `δ ≡ 0`.
    Resonant,
    /// `δ` follows the intensity-dependent Stark shifts and width difference.
    DynamicStark,
}

impl std::fmt::Display for DetuningMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DetuningMode::Resonant => f.write_str("resonant"),
            DetuningMode::DynamicStark => f.write_str("dynamic_stark"),
        }
    }
}

/// Stark-shift coefficients per unit intensity, in units of the matching
/// ionization-width coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarkProfile {
    pub ground_pump: f64,
    pub ground_stokes: f64,
    pub excited_pump: f64,
    pub excited_stokes: f64,
}

impl Default for StarkProfile {
    fn default() -> Self {
        StarkProfile {
            ground_pump: 1.0,
            ground_stokes: -1.0,
            excited_pump: 1.0,
            excited_stokes: 3.0,
        }
    }
}

fn default_scale() -> f64 {
    1.0
}

/// Physical parameters of the effective two-level problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Fano parameter.
    pub q: f64,
    /// Incoherent-ionization ratio `R` (pump-driven loss of the excited state).
    #[serde(rename = "R")]
    pub incoherence: f64,
    pub detuning_mode: DetuningMode,
    /// Intensity scale `A`; the controls are bounded by `sqrt(A)`.
    #[serde(rename = "A", default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub stark_profile: StarkProfile,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            q: -6.0,
            incoherence: 0.0,
            detuning_mode: DetuningMode::Resonant,
            scale: 1.0,
            stark_profile: StarkProfile::default(),
        }
    }
}

impl SystemConfig {
    pub fn new(q: f64, incoherence: f64, detuning_mode: DetuningMode) -> Result<Self> {
        let config = SystemConfig {
            q,
            incoherence,
            detuning_mode,
            ..SystemConfig::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        self.scale = scale;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.q.is_finite() {
            return Err(Error::param(format!("Fano parameter must be finite, got {}", self.q)));
        }
        if !(self.incoherence >= 0.0 && self.incoherence.is_finite()) {
            return Err(Error::param(format!(
                "incoherence ratio R must be finite and >= 0, got {}",
                self.incoherence
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::param(format!(
                "scale A must be finite and > 0, got {}",
                self.scale
            )));
        }
        let s = &self.stark_profile;
        if ![s.ground_pump, s.ground_stokes, s.excited_pump, s.excited_stokes]
            .iter()
            .all(|c| c.is_finite())
        {
            return Err(Error::param("stark profile coefficients must be finite"));
        }
        Ok(())
    }

    /// Upper bound on either control, `sqrt(A)`.
    pub fn control_bound(&self) -> f64 {
        self.scale.sqrt()
    }

    /// Coefficients `(c1, c2)` with `δ = c1 u1² + c2 u2²`; zero in resonant mode.
    pub fn detuning_coefficients(&self) -> (f64, f64) {
        match self.detuning_mode {
            DetuningMode::Resonant => (0.0, 0.0),
            DetuningMode::DynamicStark => {
                let s = &self.stark_profile;
                (
                    s.excited_pump - s.ground_pump - 0.5 * self.q,
                    s.excited_stokes - s.ground_stokes + 0.5 * self.q,
                )
            }
        }
    }
}

/// Effective two-photon detuning for the given control values.
///
/// With zero bare detuning the Stark shifts and the `q`-weighted width
/// difference reduce to a quadratic form in the controls. For the default
/// profile this is `-(q/2) u1² + (4 + q/2) u2²`.
pub fn effective_detuning(config: &SystemConfig, u1: f64, u2: f64) -> f64 {
    let (c1, c2) = config.detuning_coefficients();
    c1 * u1 * u1 + c2 * u2 * u2
}

/// Gaussian pump and Stokes envelopes `(f_p, f_s)` with common width and a
/// delay of `2 tau`; the Stokes pulse comes first for `tau > 0`.
pub fn gaussian_pair(width: f64, half_delay: f64, t: f64) -> Result<(f64, f64)> {
    if !(width > 0.0) {
        return Err(Error::param(format!("Gaussian width must be > 0, got {width}")));
    }
    let fp = (-((t - half_delay) / width).powi(2)).exp();
    let fs = (-((t + half_delay) / width).powi(2)).exp();
    Ok((fp, fs))
}

/// Sin-cos protocol: the mixing angle grows linearly from 0 to π/2 over `[0, T]`.
pub fn sincos_controls(scale: f64, duration: f64, t: f64) -> Result<(f64, f64)> {
    if !(duration > 0.0) {
        return Err(Error::param(format!("duration must be > 0, got {duration}")));
    }
    if !(0.0..=duration).contains(&t) {
        return Err(Error::param(format!("time {t} outside [0, {duration}]")));
    }
    let theta = FRAC_PI_2 * t / duration;
    let amp = scale.sqrt();
    Ok((amp * theta.sin(), amp * theta.cos()))
}

/// A continuous pair of control envelopes `t -> (u1, u2)` on `[0, T]`.
pub trait Envelope {
    fn controls(&self, t: f64) -> (f64, f64);
}

impl<F> Envelope for F
where
    F: Fn(f64) -> (f64, f64),
{
    fn controls(&self, t: f64) -> (f64, f64) {
        self(t)
    }
}

/// Both controls held at fixed values.
#[derive(Clone, Copy, Debug)]
pub struct Constant {
    pub u1: f64,
    pub u2: f64,
}

impl Envelope for Constant {
    fn controls(&self, _t: f64) -> (f64, f64) {
        (self.u1, self.u2)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SinCos {
    pub scale: f64,
    pub duration: f64,
}

impl Envelope for SinCos {
    fn controls(&self, t: f64) -> (f64, f64) {
        let theta = FRAC_PI_2 * (t / self.duration).clamp(0.0, 1.0);
        let amp = self.scale.sqrt();
        (amp * theta.sin(), amp * theta.cos())
    }
}

/// Gaussian pulse pair shifted onto `[0, window]`, where the window spans
/// `margin` widths beyond each pulse centre.
#[derive(Clone, Copy, Debug)]
pub struct GaussianPulses {
    pub scale: f64,
    pub width: f64,
    pub half_delay: f64,
    pub margin: f64,
}

impl GaussianPulses {
    /// Truncation margin used for the baseline pulses; envelopes at the window
    /// edges are below `e^-16`.
    pub const BASELINE_MARGIN: f64 = 4.0;

    pub fn new(scale: f64, width: f64, half_delay: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::param(format!("Gaussian width must be > 0, got {width}")));
        }
        if !(half_delay >= 0.0) {
            return Err(Error::param(format!("half delay must be >= 0, got {half_delay}")));
        }
        Ok(GaussianPulses {
            scale,
            width,
            half_delay,
            margin: Self::BASELINE_MARGIN,
        })
    }

    /// Pulses stretched so the window `[-(τ + mT), τ + mT]` covers `[0, duration]`.
    pub fn fitted(scale: f64, duration: f64, delay_ratio: f64, margin: f64) -> Self {
        let width = duration / (2.0 * (delay_ratio + margin));
        GaussianPulses {
            scale,
            width,
            half_delay: delay_ratio * width,
            margin,
        }
    }

    pub fn window(&self) -> f64 {
        2.0 * (self.half_delay + self.margin * self.width)
    }
}

impl Envelope for GaussianPulses {
    fn controls(&self, t: f64) -> (f64, f64) {
        let centred = t - 0.5 * self.window();
        let fp = (-((centred - self.half_delay) / self.width).powi(2)).exp();
        let fs = (-((centred + self.half_delay) / self.width).powi(2)).exp();
        ((self.scale * fp).sqrt(), (self.scale * fs).sqrt())
    }
}

/// Counterintuitive piecewise-linear ramp: `u2` starts at the bound and falls
/// over the second half, `u1` rises over the first half and stays there.
#[derive(Clone, Copy, Debug)]
pub struct CounterintuitiveRamp {
    pub scale: f64,
    pub duration: f64,
}

impl Envelope for CounterintuitiveRamp {
    fn controls(&self, t: f64) -> (f64, f64) {
        let s = (t / self.duration).clamp(0.0, 1.0);
        let amp = self.scale.sqrt();
        (amp * (2.0 * s).min(1.0), amp * (2.0 * (1.0 - s)).min(1.0))
    }
}

/// The four real amplitudes `(x1, x2, x3, x4)` with `b_g = x1 + i x2` and
/// `b_e = x3 + i x4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector(pub [f64; 4]);

impl StateVector {
    pub const GROUND: StateVector = StateVector([1.0, 0.0, 0.0, 0.0]);

    pub fn from_amplitudes(b_g: Complex64, b_e: Complex64) -> Self {
        StateVector([b_g.re, b_g.im, b_e.re, b_e.im])
    }

    pub fn b_g(&self) -> Complex64 {
        Complex64::new(self.0[0], self.0[1])
    }

    pub fn b_e(&self) -> Complex64 {
        Complex64::new(self.0[2], self.0[3])
    }

    pub fn ground_population(&self) -> f64 {
        self.0[0] * self.0[0] + self.0[1] * self.0[1]
    }

    pub fn excited_population(&self) -> f64 {
        self.0[2] * self.0[2] + self.0[3] * self.0[3]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.ground_population() + self.excited_population()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

/// Piecewise-constant samples of both controls on `n_intervals` equal
/// intervals of `[0, T]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct ControlGrid {
    #[serde(rename = "T")]
    duration: f64,
    n_intervals: usize,
    u1: Vec<f64>,
    u2: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(rename = "T")]
    duration: f64,
    n_intervals: usize,
    u1: Vec<f64>,
    u2: Vec<f64>,
}

impl TryFrom<RawGrid> for ControlGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        if raw.u1.len() != raw.n_intervals {
            return Err(Error::grid(format!(
                "n_intervals = {} but u1 has {} entries",
                raw.n_intervals,
                raw.u1.len()
            )));
        }
        ControlGrid::new(raw.duration, raw.u1, raw.u2)
    }
}

#[derive(Serialize, Deserialize)]
struct GridRow {
    t_start: f64,
    t_end: f64,
    u1: f64,
    u2: f64,
}

impl ControlGrid {
    pub fn new(duration: f64, u1: Vec<f64>, u2: Vec<f64>) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::grid(format!("duration must be finite and > 0, got {duration}")));
        }
        if u1.is_empty() {
            return Err(Error::grid("at least one interval is required"));
        }
        if u1.len() != u2.len() {
            return Err(Error::grid(format!(
                "control lengths differ: u1 has {}, u2 has {}",
                u1.len(),
                u2.len()
            )));
        }
        if let Some(k) = u1.iter().chain(&u2).position(|v| !v.is_finite()) {
            return Err(Error::grid(format!("non-finite control sample at position {k}")));
        }
        Ok(ControlGrid {
            duration,
            n_intervals: u1.len(),
            u1,
            u2,
        })
    }

    pub fn constant(duration: f64, n_intervals: usize, u1: f64, u2: f64) -> Result<Self> {
        ControlGrid::new(duration, vec![u1; n_intervals], vec![u2; n_intervals])
    }

    pub fn zeros(duration: f64, n_intervals: usize) -> Result<Self> {
        ControlGrid::constant(duration, n_intervals, 0.0, 0.0)
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn n_intervals(&self) -> usize {
        self.n_intervals
    }

    pub fn interval_width(&self) -> f64 {
        self.duration / self.n_intervals as f64
    }

    pub fn u1(&self) -> &[f64] {
        &self.u1
    }

    pub fn u2(&self) -> &[f64] {
        &self.u2
    }

    pub fn get(&self, k: usize) -> (f64, f64) {
        (self.u1[k], self.u2[k])
    }

    /// Interval `k` as `(t_start, t_end)`.
    pub fn interval(&self, k: usize) -> (f64, f64) {
        let h = self.interval_width();
        (k as f64 * h, (k + 1) as f64 * h)
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.interval_width()
    }

    pub(crate) fn controls_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.u1, &mut self.u2)
    }

    /// Checks `0 <= u/sqrt(A) <= 1` elementwise.
    pub fn check_bounds(&self, scale: f64) -> Result<()> {
        let bound = scale.sqrt();
        for (name, values) in [("u1", &self.u1), ("u2", &self.u2)] {
            if let Some(k) = values.iter().position(|&v| !(0.0..=bound).contains(&v)) {
                return Err(Error::grid(format!("{name}[{k}] = {} outside [0, {bound}]", values[k])));
            }
        }
        Ok(())
    }

    /// Same controls scaled by `factor`, duration unchanged.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        ControlGrid::new(
            self.duration,
            self.u1.iter().map(|v| v * factor).collect(),
            self.u2.iter().map(|v| v * factor).collect(),
        )
    }

    /// Same controls on a stretched time axis.
    pub fn with_duration(&self, duration: f64) -> Result<Self> {
        ControlGrid::new(duration, self.u1.clone(), self.u2.clone())
    }

    /// Appends `extra` zero intervals of the current width.
    pub fn padded_with_zeros(&self, extra: usize) -> Self {
        let h = self.interval_width();
        let mut u1 = self.u1.clone();
        let mut u2 = self.u2.clone();
        u1.resize(self.n_intervals + extra, 0.0);
        u2.resize(self.n_intervals + extra, 0.0);
        ControlGrid {
            duration: h * (self.n_intervals + extra) as f64,
            n_intervals: self.n_intervals + extra,
            u1,
            u2,
        }
    }

    /// Piecewise-constant value at time `t`; zero beyond the end of the grid.
    pub fn value_at(&self, t: f64) -> (f64, f64) {
        if t < 0.0 || t >= self.duration {
            return (0.0, 0.0);
        }
        let k = ((t / self.interval_width()) as usize).min(self.n_intervals - 1);
        self.get(k)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        for k in 0..self.n_intervals {
            let (t_start, t_end) = self.interval(k);
            wtr.serialize(GridRow {
                t_start,
                t_end,
                u1: self.u1[k],
                u2: self.u2[k],
            })?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads the `(t_start, t_end, u1, u2)` format. Rows must tile `[0, T]`
    /// with equal intervals.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let rows: Vec<GridRow> = rdr.deserialize().collect::<Result<_, _>>()?;
        let last = rows.last().ok_or_else(|| Error::grid("control CSV has no rows"))?;
        let duration = last.t_end;
        let n = rows.len();
        let h = duration / n as f64;
        for (k, row) in rows.iter().enumerate() {
            let tol = 1e-9 * duration.max(1.0);
            if (row.t_start - k as f64 * h).abs() > tol || (row.t_end - (k + 1) as f64 * h).abs() > tol {
                return Err(Error::grid(format!(
                    "row {} spans [{}, {}], expected uniform intervals of width {h}",
                    k + 1,
                    row.t_start,
                    row.t_end
                )));
            }
        }
        ControlGrid::new(
            duration,
            rows.iter().map(|r| r.u1).collect(),
            rows.iter().map(|r| r.u2).collect(),
        )
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        ControlGrid::read_csv(std::fs::File::open(path)?)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Midpoint-samples `envelope` onto `n_intervals` equal intervals of
/// `[0, duration]`, clamping every value to `[0, sqrt(scale)]`.
pub fn sample_onto_grid<E: Envelope + ?Sized>(
    envelope: &E,
    duration: f64,
    n_intervals: usize,
    scale: f64,
) -> Result<ControlGrid> {
    if n_intervals < 1 {
        return Err(Error::grid("n_intervals must be >= 1"));
    }
    if !(duration > 0.0) {
        return Err(Error::grid(format!("duration must be > 0, got {duration}")));
    }
    let bound = scale.sqrt();
    let h = duration / n_intervals as f64;
    let (u1, u2): (Vec<f64>, Vec<f64>) = (0..n_intervals)
        .map(|k| {
            let (a, b) = envelope.controls((k as f64 + 0.5) * h);
            (clamp_control(a, bound), clamp_control(b, bound))
        })
        .unzip();
    ControlGrid::new(duration, u1, u2)
}

fn clamp_control(v: f64, bound: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, bound)
    }
}
