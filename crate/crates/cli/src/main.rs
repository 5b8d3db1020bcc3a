use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use daqsim_cli::error::{CliError, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK};
use daqsim_cli::{run_file, Command, Protocol};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "daqsim", version, about = "Run digital, analog and digital-analog simulation protocols")]
struct Cli {
    /// Suppress progress lines on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time series of the configured observables.
    Simulate(RunArgs),
    /// Error against the exact evolution for each step count in `trotter_scan`.
    TrotterScan(RunArgs),
    /// Lab-frame versus effective-model fidelity.
    FrameCompare(RunArgs),
    /// Gate fidelity and duration estimates.
    Budget(RunArgs),
    /// Print the protocol registry.
    ListProtocols,
}

#[derive(Args)]
struct RunArgs {
    /// Config files.
    configs: Vec<PathBuf>,
    /// Config file; may be repeated.
    #[arg(long = "config", value_name = "PATH")]
    config: Vec<PathBuf>,
    /// Output directory, overriding `output.path`. With several configs each run writes
    /// to a subdirectory named after its config file.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run up to this many configs concurrently.
    #[arg(long, value_name = "N", default_value_t = 1)]
    parallel: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::ListProtocols => {
            for p in Protocol::ALL {
                println!("{}\t{}", p.name(), p.description());
            }
            return ExitCode::SUCCESS;
        }
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::TrotterScan(a) => (Command::TrotterScan, a),
        Cmd::FrameCompare(a) => (Command::FrameCompare, a),
        Cmd::Budget(a) => (Command::Budget, a),
    };
    let configs: Vec<PathBuf> = args.configs.into_iter().chain(args.config).collect();
    if configs.is_empty() {
        eprintln!("error: no config given");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let many = configs.len() > 1;
    let job = |path: &PathBuf| -> i32 {
        let out = args.out.as_ref().map(|o| {
            if many {
                o.join(path.file_stem().unwrap_or_default())
            } else {
                o.clone()
            }
        });
        match run_file(cmd, path, out.as_deref()) {
            Ok(report) => {
                if !cli.quiet {
                    println!("{} {}: wrote {}", cmd.name(), path.display(), report.out_dir.display());
                }
                EXIT_OK
            }
            Err(e) => report_error(path, &e),
        }
    };
    let codes: Vec<i32> = if args.parallel > 1 && many {
        match rayon::ThreadPoolBuilder::new().num_threads(args.parallel).build() {
            Ok(pool) => pool.install(|| configs.par_iter().map(job).collect()),
            Err(e) => {
                eprintln!("error: cannot start worker pool: {e}");
                return ExitCode::from(EXIT_FAILURE as u8);
            }
        }
    } else {
        configs.iter().map(job).collect()
    };
    ExitCode::from(codes.into_iter().max().unwrap_or(EXIT_OK) as u8)
}

fn report_error(path: &std::path::Path, e: &CliError) -> i32 {
    eprintln!("error: {}: {e}", path.display());
    e.exit_code()
}
