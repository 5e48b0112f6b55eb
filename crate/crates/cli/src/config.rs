use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lics_core::experiments::{linear_grid, BaselineSearch, DurationSweep, SaturationSearch};
use lics_core::{OptimizerSettings, SystemConfig};

/// Pulse family used by `simulate`, or the duration for `optimize`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Protocol {
    /// Gaussian pair with width `T_g` and half delay `τ`, both in units of `1/A`.
    Gaussian { width: f64, half_delay: f64 },
    Sincos {
        #[serde(rename = "AT")]
        duration: f64,
    },
    Optimal {
        #[serde(rename = "AT")]
        duration: f64,
    },
    /// Control grid in the `t_start,t_end,u1,u2` CSV format; relative paths
    /// resolve against the config file's directory.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub n_intervals: usize,
    pub substeps: usize,
    pub optimizer: OptimizerSettings,
    /// Interval width for warm-started duration ladders.
    pub interval_width: f64,
    pub baseline: BaselineSearch,
    pub saturation_cap: f64,
    pub gain_tolerance: f64,
    /// Run the full start set at every saturation-ladder point instead of
    /// continuing from the previous optimum.
    pub saturation_standard_starts: bool,
    pub smoothing_factor: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        let sat = SaturationSearch::default();
        Numerics {
            n_intervals: 200,
            substeps: 4,
            optimizer: OptimizerSettings::default(),
            interval_width: sat.sweep.interval_width,
            baseline: BaselineSearch::default(),
            saturation_cap: sat.cap,
            gain_tolerance: sat.gain_tolerance,
            saturation_standard_starts: sat.sweep.standard_starts,
            smoothing_factor: 20,
        }
    }
}

/// Axis values for `sweep`: either explicit or an inclusive range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Axis {
    Values { values: Vec<f64> },
    Range { start: f64, stop: f64, step: f64 },
}

impl Axis {
    pub fn values(&self) -> lics_core::Result<Vec<f64>> {
        match self {
            Axis::Values { values } => Ok(values.clone()),
            Axis::Range { start, stop, step } => linear_grid(*start, *stop, *step),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub protocol: Option<Protocol>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub sweep: Option<Axis>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut config: RunConfig = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        config.validate().map_err(|e| format!("{}: {e}", path.display()))?;
        if let Some(Protocol::File { path: p }) = &mut config.protocol {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> lics_core::Result<()> {
        self.system.validate()?;
        self.numerics.optimizer.validate()?;
        if self.numerics.n_intervals == 0 || self.numerics.substeps == 0 {
            return Err(lics_core::Error::InvalidParameter(
                "n_intervals and substeps must be >= 1".into(),
            ));
        }
        if !(self.numerics.interval_width > 0.0) {
            return Err(lics_core::Error::InvalidParameter("interval_width must be > 0".into()));
        }
        Ok(())
    }

    pub fn optimizer_settings(&self) -> OptimizerSettings {
        OptimizerSettings {
            substeps: self.numerics.substeps,
            ..self.numerics.optimizer.clone()
        }
    }

    pub fn duration_sweep(&self) -> DurationSweep {
        DurationSweep {
            interval_width: self.numerics.interval_width,
            optimizer: self.optimizer_settings(),
            ..DurationSweep::default()
        }
    }

    pub fn saturation(&self) -> SaturationSearch {
        SaturationSearch {
            sweep: DurationSweep {
                standard_starts: self.numerics.saturation_standard_starts,
                ..self.duration_sweep()
            },
            cap: self.numerics.saturation_cap,
            gain_tolerance: self.numerics.gain_tolerance,
            ..SaturationSearch::default()
        }
    }
}
