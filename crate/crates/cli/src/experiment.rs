//! Running configured experiments and writing their artifacts.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fipm_core::euler::Euler1d;
use fipm_core::fv::{project_ic, snapshot_csv, telemetry_csv, FvError, MomentField, RunOutput, Scheme};
use fipm_core::realizability::{count_escapes, filter_image_scan, scan_csv, scan_gains, ScanGrid};
use fipm_core::riemann::{reference_statistics, RiemannError};
use fipm_core::stats::{compare, errors_csv, stats_csv, stats_from_moments, summary_csv, Comparison, StatField, StatsError};
use fipm_core::{DualSolverConfig, EulerEntropy, StochasticSpace};
use thiserror::Error;

use crate::config::{filter_spec, parse_config_with, ConfigError, ExperimentConfig};
use crate::plot::gnuplot_script;

/// Environment variable that replaces `output_root`.
pub const OUTPUT_ROOT_ENV: &str = "FIPM_OUTPUT_ROOT";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver aborted: {0}")]
    Solver(#[from] FvError),
    #[error("reference solution: {0}")]
    Reference(#[from] RiemannError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(_) => 3,
            _ => 1,
        }
    }
}

pub fn output_root(cfg: &ExperimentConfig) -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| cfg.output_root.clone())
}

pub fn run_dir(cfg: &ExperimentConfig) -> PathBuf {
    output_root(cfg).join(&cfg.name)
}

pub fn build_scheme(cfg: &ExperimentConfig) -> Result<(Scheme, MomentField), RunError> {
    let space = StochasticSpace::legendre(cfg.degree, cfg.quad_nodes)
        .map_err(|e| ConfigError::Invalid {
            origin: crate::config::Origin::Default,
            key: "quad_nodes".into(),
            message: e.to_string(),
        })?;
    let solver = DualSolverConfig {
        tolerance: cfg.tau,
        regularization: cfg.eta,
        max_iterations: cfg.max_iterations,
        ..DualSolverConfig::default()
    };
    let scheme = Scheme::new(
        cfg.grid,
        cfg.closure,
        cfg.filter,
        solver,
        space,
        Box::new(Euler1d::new(cfg.gas)),
        Box::new(EulerEntropy::new(cfg.gas.gamma)),
    )?;
    let ic = cfg.initial_condition();
    ic.validate(&cfg.grid)?;
    let field = project_ic(&ic, &cfg.grid, scheme.space().basis());
    Ok((scheme, field))
}

/// A finished run with its statistics and the exact reference.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: ExperimentConfig,
    pub output: RunOutput,
    pub stats: StatField,
    pub reference: StatField,
    pub comparison: Comparison,
    pub runtime: Duration,
}

pub fn reference_for(cfg: &ExperimentConfig, t: f64) -> Result<StatField, RunError> {
    Ok(reference_statistics(
        &cfg.grid.centers(),
        t,
        cfg.x0,
        cfg.sigma,
        &cfg.left,
        &cfg.right,
        cfg.reference_nodes,
        cfg.gas.gamma,
    )?)
}

/// Run without touching the file system.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation, RunError> {
    let started = Instant::now();
    let (scheme, field) = build_scheme(cfg)?;
    let output = scheme.run(field, &cfg.snapshots)?;
    let runtime = started.elapsed();
    let stats = stats_from_moments(&cfg.grid.centers(), output.field.interior());
    let reference = reference_for(cfg, output.t)?;
    let comparison = compare(&stats, &reference, cfg.delta_region, 0)?;
    Ok(Simulation {
        config: cfg.clone(),
        output,
        stats,
        reference,
        comparison,
        runtime,
    })
}

pub fn write_artifacts(sim: &Simulation, dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir)?;
    let cfg = &sim.config;
    let x = cfg.grid.centers();
    fs::write(dir.join("config.cfg"), cfg.to_text())?;
    fs::write(dir.join("moments.csv"), snapshot_csv(&x, &sim.output.field))?;
    for (t, field) in &sim.output.snapshots {
        fs::write(dir.join(format!("snapshot_t{t}.csv")), snapshot_csv(&x, field))?;
    }
    fs::write(dir.join("telemetry.csv"), telemetry_csv(&sim.output.reports))?;
    fs::write(dir.join("stats.csv"), stats_csv(&sim.stats))?;
    fs::write(dir.join("reference.csv"), stats_csv(&sim.reference))?;
    fs::write(dir.join("errors.csv"), errors_csv(&sim.stats, &sim.reference)?)?;
    fs::write(dir.join("summary.csv"), summary_csv(&sim.comparison))?;
    fs::write(dir.join("plot.gp"), gnuplot_script(&cfg.name, cfg.delta_region))?;
    Ok(())
}

pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<Simulation, RunError> {
    let sim = simulate(cfg)?;
    write_artifacts(&sim, dir)?;
    Ok(sim)
}

/// One row of a parameter sweep; metrics are `NaN` for failed runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub delta_e: f64,
    pub delta_var: f64,
    pub runtime: f64,
    pub error: Option<String>,
}

/// Run the experiment once per value of `key`. Invalid overrides stop the
/// sweep before any run; solver failures are recorded and the sweep goes on.
pub fn sweep(
    text: &str,
    overrides: &[String],
    key: &str,
    values: &[String],
    dir: &Path,
) -> Result<Vec<SweepRow>, RunError> {
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .map(|v| {
            let mut o = overrides.to_vec();
            o.push(format!("{key}={v}"));
            parse_config_with(text, &o)
        })
        .collect::<Result<_, _>>()?;
    fs::create_dir_all(dir)?;
    let mut rows = Vec::new();
    for (value, cfg) in values.iter().zip(&configs) {
        let started = Instant::now();
        let row = match run_experiment(cfg, &dir.join(format!("{key}={value}"))) {
            Ok(sim) => SweepRow {
                value: value.clone(),
                delta_e: sim.comparison.delta.delta_mean,
                delta_var: sim.comparison.delta.delta_variance,
                runtime: sim.runtime.as_secs_f64(),
                error: None,
            },
            Err(e) => SweepRow {
                value: value.clone(),
                delta_e: f64::NAN,
                delta_var: f64::NAN,
                runtime: started.elapsed().as_secs_f64(),
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    fs::write(dir.join("sweep.csv"), sweep_csv(&rows))?;
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("value,deltaE,deltaVar,runtime\n");
    for r in rows {
        out.push_str(&format!("{},{:e},{:e},{:.3}\n", r.value, r.delta_e, r.delta_var, r.runtime));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSummary {
    pub filter: String,
    pub lambda: f64,
    pub gains: [f64; 3],
    pub realizable: usize,
    pub escaped: usize,
    pub file: PathBuf,
}

/// Scan the `û0 = 1` slice for every configured filter and strength.
pub fn scan_figure1(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<ScanSummary>, RunError> {
    fs::create_dir_all(dir)?;
    let grid = ScanGrid {
        n1: cfg.scan.resolution,
        n2: cfg.scan.resolution,
        ..ScanGrid::default()
    };
    let mut out = Vec::new();
    for kind in &cfg.scan.filters {
        for &lambda in &cfg.scan.lambdas {
            let spec = filter_spec(*kind, lambda, cfg.filter_order);
            let gains = scan_gains(&spec, cfg.scan.dt);
            let points = filter_image_scan(gains, &grid);
            let file = dir.join(format!("scan_{}_lambda{}.csv", kind.name(), lambda));
            fs::write(&file, scan_csv(&points))?;
            out.push(ScanSummary {
                filter: kind.name().to_string(),
                lambda,
                gains,
                realizable: points.iter().filter(|p| p.inside_before).count(),
                escaped: count_escapes(&points),
                file,
            });
        }
    }
    let mut table = String::from("filter,lambda,g0,g1,g2,realizable,escaped\n");
    for s in &out {
        table.push_str(&format!(
            "{},{},{:e},{:e},{:e},{},{}\n",
            s.filter, s.lambda, s.gains[0], s.gains[1], s.gains[2], s.realizable, s.escaped
        ));
    }
    fs::write(dir.join("scan_summary.csv"), table)?;
    Ok(out)
}
