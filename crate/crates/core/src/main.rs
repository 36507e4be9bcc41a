use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use lawkeeper::cli::{render_details, render_report, run_pipeline, Mode, ReportFormat, RunConfig};
use lawkeeper::prover::ProverConfig;

/// Verify type class laws by instantiation, TIP emission and induction.
#[derive(Parser, Debug)]
#[command(name = "lawkeeper", version)]
struct Args {
    /// emit, prove or both
    #[arg(long, default_value = "both")]
    mode: Mode,
    /// Directory for the generated `.smt2` files.
    #[arg(long, env = "LAWKEEPER_OUT", default_value = "tip-out")]
    out: PathBuf,
    /// Seconds allowed per proof task.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    #[arg(long, default_value_t = 3)]
    refute_depth: usize,
    /// Largest term size considered during lemma exploration.
    #[arg(long, default_value_t = 7)]
    explore_size: usize,
    /// Nested inductions on recursive types allowed per branch.
    #[arg(long, default_value_t = 2)]
    induction_depth: usize,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Treat unknown outcomes as failures.
    #[arg(long)]
    strict: bool,
    /// Print proofs, counterexamples and reasons after the report.
    #[arg(long)]
    trace: bool,
    /// table or lines
    #[arg(long, default_value = "table")]
    format: ReportFormat,
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let prover = ProverConfig {
        timeout: Duration::from_secs(args.timeout),
        refute_depth: args.refute_depth,
        explore_max_term_size: args.explore_size,
        induction_depth: args.induction_depth,
        ..ProverConfig::default()
    };
    let config = RunConfig {
        inputs: args.files,
        out_dir: args.out,
        mode: args.mode,
        prover,
        trace: args.trace,
        format: args.format,
        strict: args.strict,
        jobs: args.jobs,
    };
    match run_pipeline(&config) {
        Ok(report) => {
            print!("{}", render_report(&report.rows, config.format));
            if config.format == ReportFormat::Table {
                let details: Vec<_> = report.rows.iter().filter(|r| config.trace || r.outcome != lawkeeper::cli::Outcome::Proved).cloned().collect();
                print!("{}", render_details(&details));
            }
            ExitCode::from(report.status as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
