use std::path::PathBuf;
use std::process::ExitCode;

use agent_core::harness::{self, EvalOptions, EvolveOptions, HarnessError};
use clap::{Parser, Subcommand};
use log::error;

#[derive(Parser, Debug)]
#[command(name = "agent", version, about = "Evolve, replay and inspect recurrent controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a config file.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads for fitness evaluation (default: all cores).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        threads: Option<u64>,
        /// Overrides `experiment.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `experiment.output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Replay a saved genome.
    Eval {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long)]
        env: String,
        #[arg(long)]
        episodes: usize,
        #[arg(long)]
        seed: u64,
        /// Write one CSV trajectory per episode into this directory.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Feed raw observations instead of the [-1, 1] scaled ones used in training.
        #[arg(long)]
        raw_observations: bool,
    },
    /// Print node, edge and depth statistics of a genome.
    Inspect {
        #[arg(long)]
        genome: PathBuf,
    },
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Evolve { config, threads, seed, output_dir } => {
            let options = EvolveOptions { threads: threads.map(|t| t as usize), seed, output_dir };
            let summary = harness::cmd_evolve(&config, &options)?;
            let last = summary.reports.last().expect("at least generation 0");
            harness::print_report(&format!(
                "generations: {}\nevaluations: {}\nbest fitness: {}\nsolved: {}\noutput: {}\n",
                last.generation,
                last.evaluations,
                last.best_fitness,
                summary.solved,
                summary.output_dir.display()
            ));
            Ok(summary.exit_code())
        }
        Command::Eval { genome, env, episodes, seed, trace, raw_observations } => {
            let options =
                EvalOptions { episodes, seed, trace_dir: trace, normalize_observations: !raw_observations };
            let summary = harness::cmd_eval(&genome, &env, &options)?;
            harness::print_report(&summary.to_string());
            Ok(0)
        }
        Command::Inspect { genome } => {
            harness::print_report(&harness::cmd_inspect(&genome)?.to_string());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AGENT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
