use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use spikelab::harness::{self, Dataset, ExperimentConfig, ScenarioMode};
use spikelab::Result;

#[derive(Parser)]
#[command(name = "spikelab", version, about = "Spiking network continual-learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train over the scenario and store a snapshot
    Train(Common),
    /// Evaluate a stored snapshot
    Eval(Common),
    /// Run the size search only
    Search(Common),
    /// Search (if configured), train, and evaluate at each eval point
    Run(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    scenario: Option<ScenarioMode>,
    /// Comma-separated class list, e.g. 0,1,2
    #[arg(long, value_delimiter = ',')]
    tasks: Option<Vec<u8>>,
    #[arg(long)]
    samples_per_task: Option<usize>,
    #[arg(long)]
    n_exc: Option<usize>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.network.seed = s;
            cfg.scenario.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(m) = self.scenario {
            cfg.scenario.mode = m;
        }
        if let Some(t) = &self.tasks {
            cfg.scenario.tasks = t.clone();
        }
        if let Some(n) = self.samples_per_task {
            cfg.scenario.samples_per_task = n;
        }
        if let Some(n) = self.n_exc {
            cfg.network.n_exc = n;
        }
        if let Some(d) = &self.data_dir {
            cfg.data.dir = Some(d.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (cmd, common) = match &cli.command {
        Command::Train(c) => ("train", c),
        Command::Eval(c) => ("eval", c),
        Command::Search(c) => ("search", c),
        Command::Run(c) => ("run", c),
    };
    let cfg = common.resolve()?;
    let data = Dataset::load(&cfg.data)?;
    match cmd {
        "train" => harness::run_train(&cfg, &data).map(|_| ()),
        "eval" => harness::run_eval(&cfg, &data).map(|p| {
            println!("overall accuracy {:.4}", p.report.overall);
        }),
        "search" => harness::run_search_only(&cfg, &data).map(|o| {
            println!("n_exc {}", o.best.n_exc);
        }),
        _ => harness::run_experiment(&cfg, &data).map(|r| {
            if let Some(last) = r.points.last() {
                println!("n_exc {} overall accuracy {:.4}", r.n_exc, last.report.overall);
            }
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
