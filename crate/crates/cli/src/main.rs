use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gsqg_cli::{commands, output_prefix, CliError};

#[derive(Parser, Debug)]
#[command(name = "gsqg", version, about = "Travelling vortex pairs of the generalized SQG equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the energy maximizer; writes PREFIX.csv and PREFIX.json
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output prefix (default: the config path without extension)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Start from a saved solution PREFIX instead of the configured init
        #[arg(long, value_name = "PREFIX")]
        resume: Option<PathBuf>,
    },
    /// Sample the Lamb dipole (s = 1) on the configured grid
    Lamb {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve a saved field for evolution.horizon; writes a trace and the final field
    Evolve {
        #[arg(long)]
        config: PathBuf,
        /// Field CSV
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve a dipole and track its distance to the translation orbit
    Stability {
        #[arg(long)]
        config: PathBuf,
        /// Saved solution PREFIX; solves from the config when absent
        #[arg(long, value_name = "PREFIX")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the orbit distance between two saved fields
    Distance { a: PathBuf, b: PathBuf },
    /// Run the kernel checks and print a table
    VerifyKernel {
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Map a field to the lambda = nu = 1 normalization
    Rescale {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { config, out, resume } => {
            commands::solve(&config, &output_prefix(&config, out.as_deref()), resume.as_deref())
        }
        Command::Lamb { config, out } => commands::lamb(&config, &output_prefix(&config, out.as_deref())),
        Command::Evolve { config, input, out } => {
            commands::evolve(&config, &input, &output_prefix(&config, out.as_deref()))
        }
        Command::Stability { config, input, out } => {
            commands::stability(&config, input.as_deref(), &output_prefix(&config, out.as_deref()))
        }
        Command::Distance { a, b } => commands::distance(&a, &b),
        Command::VerifyKernel { s, n, seed } => commands::verify_kernel_suite(s, n, seed),
        Command::Rescale { input, s, lambda, nu, out } => commands::rescale_field(&input, s, lambda, nu, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
