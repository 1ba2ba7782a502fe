//! Command line front end: run one trial, sweep a batch, or lint a
//! scenario file. Exit code 0 on success, 2 on scenario errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use warpgrid_harness::batch::{aggregates_to_table, rows_to_csv, run_batch};
use warpgrid_harness::scenario::Scenario;
use warpgrid_harness::svg::render_svg;
use warpgrid_harness::trial::{run_trial, trajectory_csv};

#[derive(Parser)]
#[command(name = "warpgrid", about = "Harmonic-field navigation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single seeded trial.
    Run(RunArgs),
    /// Run a seeded batch over obstacle counts and write per-trial CSV.
    Batch(BatchArgs),
    /// Parse and validate a scenario file.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Override the scenario's obstacle count (randomized placement).
    #[arg(long)]
    obstacles: Option<usize>,
    /// Write an SVG rendering of the finished trial.
    #[arg(long)]
    svg_out: Option<PathBuf>,
    /// Write the traversed trajectory as CSV (tick,x,y).
    #[arg(long)]
    traj_out: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Number of seeds per obstacle count.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// First seed; trials use seed_base..seed_base+seeds.
    #[arg(long, default_value_t = 1)]
    seed_base: u64,
    /// Obstacle counts to sweep, e.g. 1,2,4,8,12,16.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2, 4, 8, 12, 16])]
    obstacles: Vec<usize>,
    /// Per-trial CSV output path.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Run trials one at a time instead of on the thread pool.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
}

fn load(path: &std::path::Path) -> Result<Scenario, ExitCode> {
    match Scenario::load(path) {
        Ok(sc) => Ok(sc),
        Err(e) => {
            eprintln!("scenario error: {e}");
            Err(ExitCode::from(2))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let scenario = match load(&args.scenario) {
                Ok(s) => s,
                Err(c) => return c,
            };
            let record = match run_trial(&scenario, args.seed, args.obstacles) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("scenario error: {e}");
                    return ExitCode::from(2);
                }
            };
            let m = &record.metrics;
            println!(
                "{} seed={} obstacles={} outcome={} length_cm={:.1} ticks={} max_turn_deg={:.1}",
                scenario.name,
                record.seed,
                record.obstacle_count,
                m.outcome.as_str(),
                m.path_length_cm,
                m.ticks_elapsed,
                m.max_turn_deg()
            );
            if let Some(path) = args.svg_out {
                if let Err(e) = std::fs::write(&path, render_svg(&scenario, Some(&record))) {
                    eprintln!("failed to write {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
            }
            if let Some(path) = args.traj_out {
                if let Err(e) = std::fs::write(&path, trajectory_csv(&record)) {
                    eprintln!("failed to write {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
            }
            ExitCode::SUCCESS
        }
        Command::Batch(args) => {
            let scenario = match load(&args.scenario) {
                Ok(s) => s,
                Err(c) => return c,
            };
            let seeds: Vec<u64> = (args.seed_base..args.seed_base + args.seeds).collect();
            let report = match run_batch(&scenario, &seeds, &args.obstacles, !args.sequential) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("scenario error: {e}");
                    return ExitCode::from(2);
                }
            };
            print!("{}", aggregates_to_table(&report.aggregates));
            if let Some(path) = args.csv_out {
                if let Err(e) = std::fs::write(&path, rows_to_csv(&report.rows)) {
                    eprintln!("failed to write {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
            }
            ExitCode::SUCCESS
        }
        Command::Validate(args) => match load(&args.scenario) {
            Ok(sc) => {
                println!(
                    "{}: ok ({}x{} m, {} walls, grid {}x{})",
                    sc.name,
                    sc.extent[0],
                    sc.extent[1],
                    sc.walls.len(),
                    sc.grid_spec().width_cells(),
                    sc.grid_spec().height_cells()
                );
                ExitCode::SUCCESS
            }
            Err(c) => c,
        },
    }
}
