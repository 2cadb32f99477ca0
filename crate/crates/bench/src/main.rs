use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use infoplan_bench::config::{BenchConfig, Experiment};
use infoplan_bench::{run, RunOptions};

#[derive(Parser)]
#[command(name = "infoplan", version, about = "Belief-space planning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write `<out>/<experiment>.csv`.
    Bench {
        /// time-vs-K, time-vs-N, total-return or bounds-audit
        experiment: Experiment,
        /// JSON file merged over the experiment's preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides `trials` from the configuration.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Also write `<out>/<experiment>.svg`.
        #[arg(long)]
        plot: bool,
        /// Start from the full-size preset instead of the desk-scale one.
        #[arg(long)]
        paper_scale: bool,
    },
    /// Print the resolved configuration of an experiment as JSON.
    Config {
        experiment: Experiment,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        paper_scale: bool,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Bench {
            experiment,
            config,
            seed,
            trials,
            jobs,
            out,
            plot,
            paper_scale,
        } => bench(experiment, config, seed, trials, jobs, out, plot, paper_scale),
        Command::Config {
            experiment,
            config,
            paper_scale,
        } => match BenchConfig::load(experiment, paper_scale, config.as_deref()) {
            Ok(cfg) => {
                println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn bench(
    experiment: Experiment,
    config: Option<PathBuf>,
    seed: u64,
    trials: Option<usize>,
    jobs: usize,
    out: PathBuf,
    plot: bool,
    paper_scale: bool,
) -> ExitCode {
    let mut cfg = match BenchConfig::load(experiment, paper_scale, config.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(t) = trials {
        if t == 0 {
            eprintln!("error: --trials must be at least 1");
            return ExitCode::from(2);
        }
        cfg.trials = t;
    }
    let opts = RunOptions {
        seed,
        jobs,
        out_dir: &out,
        plot,
    };
    match run(experiment, &cfg, &opts) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            println!("wrote {}", report.csv_path.display());
            if let Some(svg) = &report.svg_path {
                println!("wrote {}", svg.display());
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("{experiment}: assertions failed");
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
