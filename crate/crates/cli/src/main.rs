//! `deadcore` command-line front end.
//!
//! Exit status: 0 when everything ran and passed, 1 when a verdict failed or a
//! run aborted, 2 for usage and configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use deadcore::config::{parse_f64, ExperimentConfig};
use deadcore::error::Error;
use deadcore::experiment::{default_output_root, load_run_dir, rates_at, run_experiment, OUTPUT_ROOT_ENV};
use deadcore::suite::{default_config_dir, verify_all, write_suite_csv, SuiteOptions, CONFIG_DIR_ENV};

#[derive(Parser)]
#[command(name = "deadcore", version, about = "Dead-core experiments for the p-Laplacian with strong absorption")]
struct Cli {
    /// Output root for experiment directories [env: DEADCORE_OUTPUT, default: ./output]
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write its artifacts.
    Run {
        config: PathBuf,
        /// Replace an existing output directory.
        #[arg(long)]
        force: bool,
    },
    /// Run the bundled verification suite and print a verdict table.
    VerifyAll {
        /// Comma-separated criterion ids (e.g. `C3,C7`); default is all.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Replace existing output directories.
        #[arg(long)]
        force: bool,
        /// Directory holding the bundled configs [env: DEADCORE_CONFIGS, default: ./configs]
        #[arg(long)]
        configs: Option<PathBuf>,
        /// Evaluate in memory without writing experiment directories.
        #[arg(long)]
        no_write: bool,
    },
    /// Growth, non-degeneracy and gradient fits on a stored run.
    Rates {
        run_dir: PathBuf,
        x: String,
        t: String,
        /// Comma-separated radii; fractions such as `1/8` are accepted.
        #[arg(default_value = "1/4,1/8,1/16,1/32")]
        radii: String,
        /// Slope tolerance for the growth and gradient fits.
        #[arg(long, default_value_t = 0.25)]
        tolerance: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            Error::Config { .. }
            | Error::InvalidParams(_)
            | Error::InvalidArgument(_)
            | Error::OutputExists(_),
        ) => 2,
        _ => 1,
    }
}

fn output_root(cli: &Option<PathBuf>) -> PathBuf {
    cli.clone().unwrap_or_else(default_output_root)
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, force } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = run_experiment(&cfg, &output_root(&cli.output), force)?;
            for a in &out.analyses {
                for r in &a.rows {
                    println!(
                        "{} {}/{}: measured {:.6e}, target {}",
                        r.verdict, r.experiment, r.quantity, r.measured, r.target
                    );
                }
            }
            if let Some(dir) = &out.dir {
                println!("artifacts in {}", dir.display());
            }
            Ok(out.passed())
        }
        Command::VerifyAll {
            only,
            force,
            configs,
            no_write,
        } => {
            let root = output_root(&cli.output);
            let opts = SuiteOptions {
                only,
                output_root: (!no_write).then(|| root.clone()),
                force,
            };
            let dir = configs.unwrap_or_else(default_config_dir);
            let summary = verify_all(&dir, &opts)
                .with_context(|| format!("set --configs or {CONFIG_DIR_ENV}, and --output or {OUTPUT_ROOT_ENV}"))?;
            print!("{}", summary.table());
            if !no_write {
                let path = root.join("verify-all.csv");
                write_suite_csv(&summary, &path)?;
                println!("summary in {}", path.display());
            }
            if !summary.passed() {
                eprintln!("failing criteria: {}", summary.failing().join(", "));
            }
            Ok(summary.passed())
        }
        Command::Rates {
            run_dir,
            x,
            t,
            radii,
            tolerance,
        } => {
            let x = parse_f64("x", &x)?;
            let t = parse_f64("t", &t)?;
            let radii = radii
                .split(',')
                .map(|r| parse_f64("radii", r.trim()))
                .collect::<Result<Vec<f64>, _>>()?;
            let field = load_run_dir(&run_dir)
                .with_context(|| format!("loading run directory {}", run_dir.display()))?;
            let reports = rates_at(&field, (x, t), &radii, tolerance)?;
            let mut ok = true;
            for rep in &reports {
                ok &= rep.verdict.is_pass();
                println!("{}", rep.to_probe_report().to_json());
            }
            Ok(ok)
        }
    }
}
