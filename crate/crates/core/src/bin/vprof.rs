//! Command-line entry point. Exit codes: 0 success, 1 configuration error,
//! 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use value_profiles::cli;

#[derive(Parser)]
#[command(
    name = "vprof",
    version,
    about = "Value-profile agents: simulation, model recovery and analysis"
)]
struct Args {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one trial log per generator run.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the recovery experiment and write confusion matrices and fits.
    Recover {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze fitted models from a `recover` output directory.
    Analyze {
        #[arg(long)]
        fits: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the default configuration.
    DefaultConfig,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }

    let result = match &args.command {
        Command::Simulate { config, out } => cli::cmd_simulate(config, out).map(|files| {
            println!("wrote {} trial logs to {}", files.len(), out.display());
        }),
        Command::Recover { config, out } => cli::cmd_recover(config, out).map(|res| {
            print!("{}", cli::recovery_summary(&res));
            println!("\nwrote results to {}", out.display());
        }),
        Command::Analyze { fits, out } => cli::cmd_analyze(fits, out).map(|report| {
            print!("{}", cli::analysis_summary(&report));
            println!("\nwrote panels to {}", out.display());
        }),
        Command::DefaultConfig => {
            print!("{}", cli::DEFAULT_CONFIG);
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
