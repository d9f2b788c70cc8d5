use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qds_cli::{report_summary, run, CliError, Pipeline};

#[derive(Parser)]
#[command(name = "qds", version, about = "Conservativity certificates for truncated Lindblad models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to `output.dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
}

#[derive(Subcommand)]
enum Command {
    /// Certificates (CF, Assumption C, phi-domination, resolvent bound) per N.
    Check(RunArgs),
    /// Leakage curves and deficiencies along the ladder.
    Simulate(RunArgs),
    /// Relative-bound certificate for a sampled weight W.
    Bound(RunArgs),
    /// Fit (a, b, p) per N.
    Fit(RunArgs),
    /// Ladder-extrapolated conservativity verdict.
    Verdict(RunArgs),
    /// Summarise a run directory.
    Report { dir: PathBuf },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("qds: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (pipeline, args) = match cli.command {
        Command::Report { dir } => {
            return match report_summary(&dir) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            };
        }
        Command::Check(a) => (Pipeline::Check, a),
        Command::Simulate(a) => (Pipeline::Simulate, a),
        Command::Bound(a) => (Pipeline::Bound, a),
        Command::Fit(a) => (Pipeline::Fit, a),
        Command::Verdict(a) => (Pipeline::Verdict, a),
    };
    match run(pipeline, &args.config, args.out.as_deref(), args.jobs.map(usize::from)) {
        Ok(done) => {
            println!(
                "{}: {} -> {}",
                pipeline.name(),
                done.manifest.outcome,
                done.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
