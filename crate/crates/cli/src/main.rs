//! `lics`: simulate, optimize and sweep ionization-pulse protocols.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use config::{Protocol, RunConfig};
use lics_core::experiments::{
    default_alphas, fano_sweep, format_table, optimal_duration_sweep, r_sweep, robustness_scan, sincos_sweep,
    smooth_controls, write_sweep, write_table_csv, BaselineSearch, ComparisonTable, Manifest, SweepResult,
};
use lics_core::model::{GaussianPulses, SinCos};
use lics_core::{default_starts, sample_onto_grid, ControlGrid, Optimizer, Propagator, SystemConfig};

#[derive(Parser, Debug)]
#[command(
    name = "lics",
    version,
    about = "Pulse synthesis for population transfer through a continuum"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `output`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed recorded in manifests (overrides the config's `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    Duration,
    R,
    Q,
    Sincos,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate the configured protocol and print the final efficiency.
    Simulate,
    /// Optimize the controls for the configured duration.
    Optimize,
    /// Run a duration, R, q or sin-cos sweep.
    Sweep {
        #[arg(long, value_enum)]
        kind: SweepKind,
    },
    /// Efficiency of a pulse under distorted widths αΓ(t).
    Robustness {
        /// Control grid CSV (t_start,t_end,u1,u2).
        #[arg(long)]
        pulse: PathBuf,
        /// Comma-separated α values; defaults to 0..=2 in steps of 0.05.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        /// Gaussian reference level; searched when omitted.
        #[arg(long)]
        baseline: Option<f64>,
    },
    /// Gaussian / sin-cos / optimal comparison for all eight (mode, R) cells.
    Table1,
    /// Undersample a pulse and rebuild it with a natural cubic spline.
    Smooth {
        #[arg(long)]
        pulse: PathBuf,
        /// Undersampling factor (config default 20).
        #[arg(long)]
        factor: Option<usize>,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
}

impl From<lics_core::Error> for Failure {
    fn from(e: lics_core::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

struct Context {
    run: RunConfig,
    out: PathBuf,
    seed: u64,
}

impl Context {
    fn new(cli: &Cli) -> CliResult<Self> {
        let run = match &cli.config {
            Some(path) => RunConfig::load(path).map_err(Failure::Config)?,
            None => RunConfig {
                system: SystemConfig::default(),
                protocol: None,
                numerics: Default::default(),
                sweep: None,
                output: None,
                seed: 0,
            },
        };
        let out = cli
            .out
            .clone()
            .or_else(|| run.output.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let seed = cli.seed.unwrap_or(run.seed);
        std::fs::create_dir_all(&out)?;
        Ok(Context { run, out, seed })
    }

    fn system(&self) -> SystemConfig {
        self.run.system
    }

    fn propagator(&self) -> Propagator {
        Propagator {
            substeps: self.run.numerics.substeps,
        }
    }

    fn protocol(&self) -> CliResult<&Protocol> {
        self.run
            .protocol
            .as_ref()
            .ok_or_else(|| Failure::Config("config has no `protocol` section".into()))
    }

    fn manifest(&self, experiment: &str, parameters: serde_json::Value) -> Manifest {
        Manifest::new(experiment, self.system(), self.seed, parameters)
    }

    fn optimize(&self, normalized_duration: f64) -> CliResult<lics_core::OptimizationReport> {
        let optimizer = Optimizer::new(self.run.optimizer_settings())?;
        let sys = self.system();
        Ok(optimizer.optimize(
            &sys,
            normalized_duration / sys.scale,
            self.run.numerics.n_intervals,
            &default_starts(),
        )?)
    }

    fn protocol_grid(&self) -> CliResult<ControlGrid> {
        let sys = self.system();
        let n = self.run.numerics.n_intervals;
        let grid = match self.protocol()? {
            Protocol::Gaussian { width, half_delay } => {
                let pulses = GaussianPulses::new(sys.scale, *width, *half_delay)?;
                let base = BaselineSearch {
                    min_intervals: n,
                    ..self.run.numerics.baseline.clone()
                };
                base.grid(sys.scale, pulses.width, pulses.half_delay)?
            }
            Protocol::Sincos { duration } => {
                let d = duration / sys.scale;
                sample_onto_grid(
                    &SinCos {
                        scale: sys.scale,
                        duration: d,
                    },
                    d,
                    n,
                    sys.scale,
                )?
            }
            Protocol::Optimal { duration } => self.optimize(*duration)?.grid,
            Protocol::File { path } => load_grid(path)?,
        };
        Ok(grid)
    }
}

fn load_grid(path: &Path) -> CliResult<ControlGrid> {
    ControlGrid::load_csv(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Config(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn cmd_simulate(ctx: &Context) -> CliResult<()> {
    let grid = ctx.protocol_grid()?;
    let result = ctx.propagator().propagate(&ctx.system(), &grid, true)?;
    result.save_trajectory_csv(ctx.out.join("trajectory.csv"))?;
    grid.save_csv(ctx.out.join("controls.csv"))?;
    println!("{:.6}", result.efficiency);
    Ok(())
}

fn cmd_optimize(ctx: &Context) -> CliResult<()> {
    let duration = match ctx.protocol()? {
        Protocol::Optimal { duration } | Protocol::Sincos { duration } => *duration,
        other => {
            return Err(Failure::Config(format!(
                "optimize needs a protocol with an AT (optimal or sincos), got {other:?}"
            )))
        }
    };
    let report = ctx.optimize(duration)?;
    write_json(&ctx.out.join("optimization.json"), &report)?;
    report.grid.save_csv(ctx.out.join("optimal_controls.csv"))?;
    let structure = lics_core::detect_structure(
        &report.grid,
        lics_core::optimizer::STRUCTURE_TOLERANCE,
        ctx.system().scale,
    );
    write_json(&ctx.out.join("structure.json"), &structure)?;
    println!("{:.6}", report.efficiency);
    Ok(())
}

fn cmd_sweep(ctx: &Context, kind: SweepKind) -> CliResult<()> {
    let sys = ctx.system();
    let axis = |default: &[f64]| -> CliResult<Vec<f64>> {
        match &ctx.run.sweep {
            Some(a) => Ok(a.values()?),
            None => Ok(default.to_vec()),
        }
    };
    let (name, sweep): (&str, SweepResult) = match kind {
        SweepKind::Duration => {
            let grid = axis(&lics_core::experiments::linear_grid(0.1, 10.0, 0.1)?)?;
            (
                "sweep_duration",
                optimal_duration_sweep(&sys, &grid, &ctx.run.duration_sweep())?,
            )
        }
        SweepKind::R => {
            let grid = axis(&lics_core::experiments::linear_grid(0.0, 1.0, 0.05)?)?;
            (
                "sweep_r",
                r_sweep(&sys, sys.detuning_mode, &grid, &ctx.run.saturation())?,
            )
        }
        SweepKind::Q => {
            let grid = axis(&lics_core::experiments::linear_grid(-10.0, -0.5, 0.5)?)?;
            ("sweep_q", fano_sweep(&sys, &grid, &ctx.run.saturation())?)
        }
        SweepKind::Sincos => {
            let grid = axis(&lics_core::experiments::linear_grid(0.1, 20.0, 0.1)?)?;
            ("sweep_sincos", sincos_sweep(&sys, &grid, ctx.run.numerics.n_intervals)?)
        }
    };
    let manifest = ctx.manifest(
        name,
        json!({ "kind": format!("{kind:?}").to_lowercase(), "numerics": ctx.run.numerics, "axis": sweep.axis_values }),
    );
    let (csv, _) = write_sweep(&ctx.out, name, &sweep, &manifest)?;
    if let Some((a, e)) = sweep.argmax() {
        println!("max {e:.6} at {} = {a}", sweep.axis_name);
    }
    eprintln!("wrote {}", csv.display());
    Ok(())
}

fn cmd_robustness(ctx: &Context, pulse: &Path, alphas: Option<&[f64]>, baseline: Option<f64>) -> CliResult<()> {
    let sys = ctx.system();
    let grid = load_grid(pulse)?;
    let alphas = alphas.map(|a| a.to_vec()).unwrap_or_else(default_alphas);
    let baseline = match baseline {
        Some(b) => b,
        None => ctx.run.numerics.baseline.run(&sys)?.efficiency,
    };
    let scan = robustness_scan(&sys, &grid, &alphas, Some(baseline))?;
    let manifest = ctx.manifest(
        "robustness",
        json!({ "pulse": pulse.display().to_string(), "alphas": alphas, "gaussian_baseline": baseline }),
    );
    let (csv, _) = write_sweep(&ctx.out, "robustness", &scan, &manifest)?;
    eprintln!("wrote {}", csv.display());
    Ok(())
}

fn cmd_table1(ctx: &Context) -> CliResult<()> {
    let table = ComparisonTable {
        q: ctx.system().q,
        baseline: ctx.run.numerics.baseline.clone(),
        saturation: ctx.run.saturation(),
    };
    let rows = table.run();
    let path = ctx.out.join("table1.csv");
    write_table_csv(&rows, std::fs::File::create(&path)?)?;
    write_json(
        &ctx.out.join("table1.json"),
        &ctx.manifest("table1", json!({ "rows": rows })),
    )?;
    print!("{}", format_table(&rows));
    let failed = rows
        .iter()
        .flat_map(|r| [&r.gaussian, &r.sincos, &r.optimal])
        .filter(|c| c.error.is_some())
        .count();
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} table cells failed")));
    }
    Ok(())
}

fn cmd_smooth(ctx: &Context, pulse: &Path, factor: Option<usize>) -> CliResult<()> {
    let sys = ctx.system();
    let grid = load_grid(pulse)?;
    let factor = factor.unwrap_or(ctx.run.numerics.smoothing_factor);
    let smooth = smooth_controls(&grid, factor, sys.scale)?;
    let prop = ctx.propagator();
    let before = prop.efficiency(&sys, &grid)?;
    let after = prop.efficiency(&sys, &smooth)?;
    smooth.save_csv(ctx.out.join("smoothed_controls.csv"))?;
    println!("{before:.6} {after:.6}");
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let ctx = Context::new(cli)?;
    match &cli.command {
        Command::Simulate => cmd_simulate(&ctx),
        Command::Optimize => cmd_optimize(&ctx),
        Command::Sweep { kind } => cmd_sweep(&ctx, *kind),
        Command::Robustness {
            pulse,
            alphas,
            baseline,
        } => cmd_robustness(&ctx, pulse, alphas.as_deref(), *baseline),
        Command::Table1 => cmd_table1(&ctx),
        Command::Smooth { pulse, factor } => cmd_smooth(&ctx, pulse, *factor),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
