use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dqbc_cli::bench::{BenchOp, BenchSize};
use dqbc_cli::commands::{self, FitArgs, InterpolateArgs};
use dqbc_cli::fit::FitOptions;
use dqbc_cli::CliError;
use dqbc_core::verify::Suite;

#[derive(Parser)]
#[command(name = "dqbc", version, about = "Video frame interpolation with densely queried bilateral correlation")]
struct Cli {
    /// Worker threads for data-parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesise the frame between two images.
    Interpolate {
        frame0: PathBuf,
        frame1: PathBuf,
        output: PathBuf,
        /// Weight archive; freshly initialised weights are used if omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// JSON run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured initialisation seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write both motion fields and both occlusion maps next to the output.
        #[arg(long)]
        dump_flow: bool,
    },
    /// Run the numerical property suites.
    Check {
        #[arg(value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
    },
    /// Time the core kernels and print CSV.
    Bench {
        #[arg(long, value_enum, default_value_t = OpArg::All)]
        op: OpArg,
        /// Comma-separated HxWxC sizes.
        #[arg(long, value_delimiter = ',', default_value = "32x32x96")]
        sizes: Vec<BenchSize>,
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
    },
    /// Fit a motion field between two frames by gradient descent on the warp error.
    FitMotion {
        frame0: PathBuf,
        frame1: PathBuf,
        #[arg(long, default_value_t = 500)]
        iterations: usize,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        /// Constant reference flow `dx,dy` for reporting endpoint error.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_flow)]
        truth_flow: Option<(f64, f64)>,
    },
    /// Write a deterministically initialised weight archive.
    InitWeights {
        output: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Oracle,
    Grad,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpArg {
    All,
    Gather,
    Warp,
    Conv,
    Upsample,
}

fn parse_flow(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected dx,dy, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads;
    let mut stdout = std::io::stdout();
    match cli.command {
        Command::Interpolate { frame0, frame1, output, weights, config, seed, dump_flow } => {
            commands::cmd_interpolate(&InterpolateArgs { frame0, frame1, output, weights, config, seed, threads, dump_flow })
        }
        Command::Check { suite } => {
            let suites = match suite {
                SuiteArg::All => Suite::ALL.to_vec(),
                SuiteArg::Oracle => vec![Suite::Oracle],
                SuiteArg::Grad => vec![Suite::Grad],
                SuiteArg::Exact => vec![Suite::Exact],
            };
            commands::cmd_check(&suites, threads, &mut stdout)
        }
        Command::Bench { op, sizes, repetitions } => {
            let ops = match op {
                OpArg::All => BenchOp::ALL.to_vec(),
                OpArg::Gather => vec![BenchOp::Gather],
                OpArg::Warp => vec![BenchOp::Warp],
                OpArg::Conv => vec![BenchOp::Conv],
                OpArg::Upsample => vec![BenchOp::Upsample],
            };
            commands::cmd_bench(&ops, &sizes, repetitions, threads, &mut stdout)
        }
        Command::FitMotion { frame0, frame1, iterations, step, truth_flow } => commands::cmd_fit_motion(
            &FitArgs { frame0, frame1, options: FitOptions { iterations, step }, truth: truth_flow, threads },
            &mut stdout,
        ),
        Command::InitWeights { output, config, seed } => {
            commands::cmd_init_weights(&output, config.as_deref(), seed, &mut stdout)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dqbc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
