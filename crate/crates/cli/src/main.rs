use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fipm_cli::experiment::{run_dir, scan_figure1, sweep};
use fipm_cli::{load_config_text, parse_config_with, run_experiment, RunError};

/// Filtered intrusive UQ solvers for the uncertain shock tube.
#[derive(Parser)]
#[command(name = "fipm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        /// Config file or preset name.
        config: String,
        /// Override a key, e.g. `--set cells=400`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Print the resolved config and stop.
        #[arg(long)]
        dry_run: bool,
    },
    /// Run once per value of a numeric key.
    Sweep {
        config: String,
        #[arg(long)]
        key: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        dry_run: bool,
    },
    /// Images of the realizable N = 2 slice under the configured filters.
    ScanFigure1 {
        config: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        dry_run: bool,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), RunError> {
    match command {
        Command::Run { config, set, dry_run } => {
            let cfg = parse_config_with(&load_config_text(&config)?, &set)?;
            print!("{}", cfg.to_text());
            if dry_run {
                return Ok(());
            }
            let dir = run_dir(&cfg);
            let sim = run_experiment(&cfg, &dir)?;
            let c = sim.comparison;
            eprintln!(
                "done: t = {}, {} steps in {:.2}s; deltaE = {:e}, deltaVar = {:e}, L1(E rho) = {:e}",
                sim.output.t,
                sim.output.reports.len(),
                sim.runtime.as_secs_f64(),
                c.delta.delta_mean,
                c.delta.delta_variance,
                c.l1_mean
            );
            eprintln!("artifacts in {}", dir.display());
            Ok(())
        }
        Command::Sweep {
            config,
            key,
            values,
            set,
            dry_run,
        } => {
            let text = load_config_text(&config)?;
            let cfg = parse_config_with(&text, &set)?;
            print!("{}", cfg.to_text());
            let values: Vec<String> = values
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            println!("# sweep {key} over [{}]", values.join(", "));
            if dry_run {
                return Ok(());
            }
            let dir = run_dir(&cfg).join(format!("sweep_{key}"));
            let rows = sweep(&text, &set, &key, &values, &dir)?;
            print!("{}", fipm_cli::experiment::sweep_csv(&rows));
            for r in rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("{key}={}: {}", r.value, r.error.as_deref().unwrap_or(""));
            }
            Ok(())
        }
        Command::ScanFigure1 { config, set, dry_run } => {
            let cfg = parse_config_with(&load_config_text(&config)?, &set)?;
            print!("{}", cfg.to_text());
            if dry_run {
                return Ok(());
            }
            let dir = run_dir(&cfg);
            for s in scan_figure1(&cfg, &dir)? {
                println!(
                    "{} lambda={}: {} realizable points, {} leave the set ({})",
                    s.filter,
                    s.lambda,
                    s.realizable,
                    s.escaped,
                    s.file.display()
                );
            }
            Ok(())
        }
    }
}
