use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gwp::cli::{check, plot, simulate, CliError};

/// Gaussian wave packet dynamics with conserved angular momentum.
#[derive(Parser)]
#[command(name = "gwp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a JSON config and write trajectory CSV plus metadata.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a property suite and print a JSON report.
    Check {
        #[arg(long)]
        suite: String,
        /// Run config; the bundled quartic fixture when omitted.
        #[arg(long)]
        fixture: Option<PathBuf>,
        #[arg(long, default_value_t = check::DEFAULT_SEED)]
        seed: u64,
    },
    /// Plot CSV columns to SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        cols: Vec<String>,
        /// Abscissa column.
        #[arg(long, default_value = "t")]
        x: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out } => {
            for path in simulate::simulate(&config, &out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Check { suite, fixture, seed } => {
            let report = check::check(&suite, fixture.as_deref(), seed)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.passed {
                Ok(())
            } else {
                let failed: Vec<String> = report
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| format!("{} = {:e} (margin {:e})", c.name, c.value, c.margin))
                    .collect();
                Err(CliError::Invariant(format!("{suite} failed: {}", failed.join("; "))))
            }
        }
        Command::Plot { input, cols, x, out } => plot::plot(&input, &cols, &x, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors; all usage errors exit 1
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gwp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
