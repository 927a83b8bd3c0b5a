use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cfxl::dlpc::Architecture;
use cfxl::env::Scenario;
use cfxl::harness::{
    evaluate_checkpoint, load_config, run_experiment, simulate, sweep, sweep_csv, write_artifacts, ExperimentConfig,
    SweepAxis,
};
use cfxl::marl::{load_checkpoint, save_checkpoint, Variant};
use cfxl::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cfxl",
    version,
    about = "Cell-free XL-MIMO simulator and power-control trainer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Channel statistics and closed-form vs Monte-Carlo SE at full power.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Monte-Carlo draws.
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
    },
    /// Train a controller and write metrics, summary and checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a saved checkpoint greedily.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Run one experiment per value of a configuration axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// ns-per-row, nr-per-row, ue-spacing, bs-spacing, n-ue, n-bs or seed.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Print the effective configuration as TOML.
    DumpConfig {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file (missing keys take defaults).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset used when no file is given: desk or paper.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (stdout when omitted, where applicable).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    architecture: Option<Architecture>,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(_), Some(_)) => return Err(Error::config("preset", "give either --config or --preset, not both")),
            (Some(p), None) => load_config(p)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(a) = self.architecture {
            cfg.architecture = a;
        }
        if let Some(s) = self.scenario {
            cfg.scenario = s;
        }
        if let Some(e) = self.episodes {
            cfg.episodes = e;
        }
        if let Some(s) = self.steps {
            cfg.steps = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(out: Option<&Path>, file: &str, bytes: &[u8]) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(file), bytes)?;
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, draws } => {
            let cfg = common.resolve()?;
            let report = simulate(&cfg, draws)?;
            emit(
                common.out.as_deref(),
                "simulation.json",
                serde_json::to_string_pretty(&report)?.as_bytes(),
            )
        }
        Command::Train { common } => {
            let cfg = common.resolve()?;
            let out = common
                .out
                .clone()
                .ok_or_else(|| Error::config("out", "train needs an output directory"))?;
            let art = run_experiment(&cfg)?;
            write_artifacts(&art, &out)?;
            save_checkpoint(&out.join("checkpoint.json"), &art.learners)?;
            std::fs::write(out.join("config.toml"), cfg.to_toml()?)?;
            println!(
                "final sum SE {} bit/s/Hz, convergence episode {}",
                art.summary.final_sum_se,
                art.summary
                    .convergence_episode
                    .map_or_else(|| "none".to_string(), |c| c.to_string())
            );
            Ok(())
        }
        Command::Eval { common, checkpoint } => {
            let cfg = common.resolve()?;
            let learners = load_checkpoint(&checkpoint)?;
            let point = evaluate_checkpoint(&cfg, learners)?;
            emit(
                common.out.as_deref(),
                "eval.json",
                serde_json::to_string_pretty(&point)?.as_bytes(),
            )
        }
        Command::Sweep { common, axis, values } => {
            let cfg = common.resolve()?;
            let axis: SweepAxis = axis.parse()?;
            let rows = sweep(&cfg, axis, &values)?;
            emit(common.out.as_deref(), "sweep.csv", &sweep_csv(&rows)?)
        }
        Command::DumpConfig { common } => {
            let cfg = common.resolve()?;
            emit(common.out.as_deref(), "config.toml", cfg.to_toml()?.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
