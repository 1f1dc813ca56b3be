use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use modemlab::cli::{self, RunConfig};
use modemlab::Result;

#[derive(Parser)]
#[command(name = "modemlab", version, about = "ML vs neural detection for GAM and Gaussian codebooks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a disc-GAM constellation as CSV.
    Constellation {
        #[arg(long, default_value_t = 8)]
        k1: u32,
        #[arg(long, default_value_t = 1.0)]
        power: f64,
        #[arg(long, default_value = "constellation.csv")]
        out: PathBuf,
    },
    /// Write a Gaussian codebook file for `k`.
    Codebook {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "codebook.txt")]
        out: PathBuf,
    },
    /// Train a network at `train_eb_n0_db`; writes model.mlp and loss_history.csv.
    Train {
        #[command(flatten)]
        run: RunArgs,
    },
    /// BER sweep over `snr_grid`; writes ber.csv.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Trained model to evaluate next to ML.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Per-query timing over `k_grid`; writes timing.csv.
    Bench {
        #[command(flatten)]
        run: RunArgs,
    },
    /// BER against training-set size; writes ber_vs_trainsize.csv.
    TrainSizeStudy {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut pairs = match &self.config {
            Some(path) => cli::load_config_file(path)?,
            None => Vec::new(),
        };
        for s in &self.sets {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| modemlab::Error::Config(format!("--set expects KEY=VALUE, got `{s}`")))?;
            pairs.push((k.to_string(), v.to_string()));
        }
        let flags = [
            ("profile", self.profile.clone()),
            ("task", self.task.clone()),
            ("k", self.k.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("out_dir", self.out_dir.as_ref().map(|p| p.display().to_string())),
        ];
        pairs.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
        let cfg = RunConfig::from_pairs(&pairs)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("MODEMLAB_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| modemlab::Error::Config(format!("MODEMLAB_THREADS=`{v}` is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| modemlab::Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Constellation { k1, power, out } => {
            cli::cmd_constellation(k1, power, &out)?;
            println!("{}", out.display());
        }
        Command::Codebook { run, out } => {
            cli::cmd_codebook(&run.resolve()?, &out)?;
            println!("{}", out.display());
        }
        Command::Train { run } => {
            let o = cli::cmd_train(&run.resolve()?)?;
            println!("{}\n{}", o.model_path.display(), o.loss_path.display());
        }
        Command::Evaluate { run, model } => {
            println!("{}", cli::cmd_evaluate(&run.resolve()?, model.as_deref())?.display());
        }
        Command::Bench { run } => {
            println!("{}", cli::cmd_bench(&run.resolve()?)?.0.display());
        }
        Command::TrainSizeStudy { run } => {
            println!("{}", cli::cmd_training_size_study(&run.resolve()?)?.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
