use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hjreg_cli::commands;
use hjreg_cli::config::ExperimentConfig;
use hjreg_cli::error::CliError;
use hjreg_cli::suite;

#[derive(Parser)]
#[command(name = "hjreg", version, about = "Shifted eikonal solvers, obstacle reconstruction and regularity measurements")]
struct Args {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Built-in suite for `acceptance`.
    #[arg(long, global = true, default_value = suite::SUITE_ID)]
    suite: String,

    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Upper and lower viscosity solutions, plus any vanishing-viscosity runs.
    SolveHj,
    /// Double-obstacle reconstruction and contact sets.
    SolveObstacle,
    /// Moduli, bounds and normalized-frame diagnostics.
    Measure,
    /// Runs a built-in acceptance suite and prints one line per criterion.
    Acceptance,
}

fn load(args: &Args) -> Result<ExperimentConfig, CliError> {
    let path = args.config.as_ref().ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn create_out(args: &Args) -> Result<(), CliError> {
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Solver(e.into()))
}

fn run(args: &Args) -> Result<(), CliError> {
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(CliError::Config("--jobs: must be positive".into()));
    }
    match args.command {
        Command::Acceptance => {
            if args.suite != suite::SUITE_ID {
                return Err(CliError::Config(format!("--suite: unknown suite {:?}, available: {}", args.suite, suite::SUITE_ID)));
            }
            let seed = match &args.config {
                Some(_) => load(args)?.seed,
                None => args.seed.unwrap_or(0),
            };
            let report = suite::run_paper_core(&args.out, jobs, seed)?;
            print!("{}", report.table());
            match report.failed() {
                0 => Ok(()),
                failed => Err(CliError::Criteria { failed, total: report.criteria.len() }),
            }
        }
        _ => {
            let cfg = load(args)?;
            create_out(args)?;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
            pool.install(|| match args.command {
                Command::SolveHj => commands::solve_hj(&cfg, &args.out),
                Command::SolveObstacle => commands::solve_obstacle(&cfg, &args.out),
                Command::Measure => commands::measure(&cfg, &args.out),
                Command::Acceptance => unreachable!(),
            })
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hjreg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
