use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ptfourwell::acceptance;
use ptfourwell::config::{self, ScenarioConfig};
use ptfourwell::par::Execution;
use ptfourwell::scenario::{self, Status, Sweep};
use ptfourwell::Error;

#[derive(Parser)]
#[command(name = "ptfourwell", version, about = "PT-symmetric double well embedded in a Hermitian four-well system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Repeat the run over `key = a..b` in `n` steps, e.g. `gamma=0.1:0.9:5`.
        #[arg(long)]
        sweep: Option<Sweep>,
        /// Run sweeps and root searches on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Run the built-in acceptance suite.
    Check,
}

fn input_error(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(Status::of_error(e).exit_code() as u8)
}

fn run(config: PathBuf, out: Option<PathBuf>, sweep: Option<Sweep>, exec: Execution) -> ExitCode {
    let text = match std::fs::read_to_string(&config) {
        Ok(t) => t,
        Err(source) => return input_error(&Error::Io { path: config, source }),
    };
    let entries = match config::parse_entries(&text) {
        Ok(e) => e,
        Err(e) => return input_error(&e),
    };
    let cfg: ScenarioConfig = match config::from_entries(&entries) {
        Ok(c) => c,
        Err(e) => return input_error(&e),
    };
    let out = out.or(cfg.output.clone());

    let Some(sweep) = sweep else {
        return match scenario::run_scenario_with(&cfg, out.as_deref(), exec) {
            Ok(o) => {
                print!("{}", o.report.render());
                ExitCode::from(o.report.status.exit_code() as u8)
            }
            Err(e) => input_error(&e),
        };
    };

    let mut worst = 0;
    for (v, result) in scenario::run_sweep(&entries, &sweep, out.as_deref(), exec) {
        let code = match result {
            Ok(o) => {
                let r = &o.report;
                println!(
                    "{} = {v}: {:?}, max residual {:.1e}, two-mode deviation {:.1e}",
                    sweep.key,
                    r.status,
                    r.max_residuals.max_abs(),
                    r.equivalence_error
                );
                r.status.exit_code()
            }
            Err(e) => {
                println!("{} = {v}: error: {e}", sweep.key);
                Status::of_error(&e).exit_code()
            }
        };
        // input errors win over numerical failures, which win over tolerance failures
        worst = match (worst, code) {
            (2, _) | (_, 2) => 2,
            (a, b) => a.max(b),
        };
    }
    ExitCode::from(worst as u8)
}

fn check() -> ExitCode {
    let outcomes = acceptance::run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(Status::ToleranceFailure.exit_code() as u8)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            sweep,
            sequential,
        } => {
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::default()
            };
            run(config, out, sweep, exec)
        }
        Command::Check => check(),
    }
}
