use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contact_thermo::selftest::{run_selftest, InjectedFault, DEFAULT_SEED};
use contact_thermo_cli::config;
use contact_thermo_cli::run::{self, RunError, RunOutcome, Status};

/// Structure-preserving simulation of isolated thermodynamic systems.
///
/// Exit codes: 0 success, 2 configuration error, 3 step failure,
/// 4 law-audit failure (with --strict) or failed self-test.
#[derive(Parser)]
#[command(name = "contact-thermo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write `<name>.csv`, `<name>.json` and `<name>.txt`.
    Run {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        /// Fail with exit code 4 when a thermodynamic law is violated.
        #[arg(long)]
        strict: bool,
    },
    /// Check the geometric and discrete identities on random samples.
    Selftest {
        #[arg(long, value_name = "N", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, hide = true, value_name = "FAULT")]
        inject_fault: Option<InjectedFault>,
    },
    /// Run several experiments concurrently into one output directory.
    Batch {
        #[arg(long, value_name = "PATH", required = true, num_args = 1..)]
        config: Vec<PathBuf>,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        strict: bool,
    },
}

fn report(result: &Result<RunOutcome, RunError>, strict: bool) -> Status {
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            println!("wrote        {}", outcome.csv.display());
            outcome.status(strict)
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.status()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Run { config, out, strict } => {
            let result = config::load(&config).map_err(RunError::from).and_then(|exp| run::run(&exp, &out));
            report(&result, strict)
        }
        Command::Selftest { seed, inject_fault } => {
            let r = run_selftest(seed, inject_fault);
            print!("{r}");
            if r.passed() {
                Status::Success
            } else {
                Status::AuditFailure
            }
        }
        Command::Batch { config, out, strict } => {
            let mut worst = Status::Success;
            for (i, (path, result)) in run::batch(&config, &out).iter().enumerate() {
                if i > 0 {
                    println!();
                }
                println!("== {}", path.display());
                worst = worst.max(report(result, strict));
            }
            worst
        }
    };
    ExitCode::from(status.code())
}
