use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use bufrelay::harness::{self, EvalTarget, SweepConfig};

#[derive(Parser)]
#[command(name = "bufrelay", version, about = "Delay-constrained buffer-aided relay selection with deep RL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent, writing a metrics CSV and a network checkpoint.
    Train {
        #[command(flatten)]
        settings: Settings,
        /// Metrics CSV path.
        #[arg(long, default_value = "train.csv")]
        out: PathBuf,
        /// Checkpoint path; defaults to the CSV path with a `.net` extension.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Measure delay-constrained throughput of a baseline or a checkpoint.
    Eval {
        #[command(flatten)]
        settings: Settings,
        /// Baseline policy: max-link or random.
        #[arg(long, conflicts_with = "checkpoint")]
        policy: Option<String>,
        /// Saved network to evaluate greedily.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Number of evaluation slots.
        #[arg(long, default_value_t = 1_000_000)]
        slots: u64,
        /// Optional report CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate across values of one scenario parameter.
    Sweep {
        #[command(flatten)]
        settings: Settings,
        /// delay, rate or relays.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Seeds per point (median reported).
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        /// Final evaluation slots per run.
        #[arg(long, default_value_t = 100_000)]
        slots: u64,
        /// Skip the max-link baseline rows.
        #[arg(long)]
        no_max_link: bool,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
}

/// Scenario and learner settings shared by every command. Each flag overrides
/// the config file, which overrides the preset.
#[derive(Args)]
struct Settings {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// iid_default, inid_default or toy.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    relays: Option<usize>,
    #[arg(long)]
    buffer: Option<usize>,
    /// Target rate in bits/s/Hz.
    #[arg(long)]
    eta: Option<f64>,
    /// Target delay in slots.
    #[arg(long)]
    delay: Option<u64>,
    /// Transmit power to noise ratio in dB.
    #[arg(long)]
    power_db: Option<f64>,
    /// Path-loss exponent.
    #[arg(long)]
    alpha: Option<f64>,
    /// rayleigh or fixed:<gain>.
    #[arg(long)]
    fading: Option<String>,
    /// q or sarsa.
    #[arg(long)]
    algorithm: Option<String>,
    /// decision or punish.
    #[arg(long)]
    assist: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    discount: Option<f64>,
    #[arg(long)]
    epsilon_decay: Option<f64>,
    #[arg(long)]
    epsilon_min: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    /// Experiences generated per update.
    #[arg(long)]
    generate: Option<usize>,
    /// Replay batch size.
    #[arg(long)]
    batch: Option<usize>,
    /// Updates between target-network copies.
    #[arg(long)]
    sync_every: Option<usize>,
    /// Hidden layer widths, comma-separated.
    #[arg(long)]
    hidden: Option<String>,
    /// Slots of each evaluation during training.
    #[arg(long)]
    eval_slots: Option<u64>,
    /// Record elapsed seconds in the metrics CSV.
    #[arg(long)]
    wall_clock: bool,
}

impl Settings {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        put("preset", self.preset.clone());
        put("relays", self.relays.map(|v| v.to_string()));
        put("buffer", self.buffer.map(|v| v.to_string()));
        put("eta", self.eta.map(|v| v.to_string()));
        put("delay", self.delay.map(|v| v.to_string()));
        put("power-db", self.power_db.map(|v| v.to_string()));
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("fading", self.fading.clone());
        put("algorithm", self.algorithm.clone());
        put("assist", self.assist.clone());
        put("seed", self.seed.map(|v| v.to_string()));
        put("rounds", self.rounds.map(|v| v.to_string()));
        put("discount", self.discount.map(|v| v.to_string()));
        put("epsilon-decay", self.epsilon_decay.map(|v| v.to_string()));
        put("epsilon-min", self.epsilon_min.map(|v| v.to_string()));
        put("lr", self.lr.map(|v| v.to_string()));
        put("generate", self.generate.map(|v| v.to_string()));
        put("batch", self.batch.map(|v| v.to_string()));
        put("sync-every", self.sync_every.map(|v| v.to_string()));
        put("hidden", self.hidden.clone());
        put("eval-slots", self.eval_slots.map(|v| v.to_string()));
        put("wall-clock", self.wall_clock.then(|| "true".to_string()));
        out
    }

    fn resolve(&self) -> Result<harness::Experiment> {
        Ok(harness::resolve(self.config.as_deref(), &self.overrides())?)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { settings, out, checkpoint } => {
            let exp = settings.resolve()?;
            let checkpoint = checkpoint.unwrap_or_else(|| out.with_extension("net"));
            let report = harness::run_train(&exp, &out, &checkpoint)
                .with_context(|| format!("training into {}", out.display()))?;
            match report.final_throughput() {
                Some(tp) => println!("{}: final throughput {tp:.4} after {} rounds", exp.train.variant_label(), report.metrics.len()),
                None => println!("{}: no training rounds requested", exp.train.variant_label()),
            }
            println!("metrics: {}\ncheckpoint: {}", out.display(), checkpoint.display());
        }
        Command::Eval { settings, policy, checkpoint, slots, out } => {
            let exp = settings.resolve()?;
            let target = match (policy, checkpoint) {
                (_, Some(path)) => EvalTarget::Checkpoint(path),
                (Some(name), None) => name.parse()?,
                (None, None) => anyhow::bail!("eval needs --policy or --checkpoint"),
            };
            let report = harness::run_eval(&exp, &target, slots)?;
            println!("{report}");
            if let Some(path) = out {
                report.write_csv(create(&path)?)?;
            }
        }
        Command::Sweep { settings, axis, values, seeds, slots, no_max_link, out } => {
            let exp = settings.resolve()?;
            let sweep = SweepConfig { axis: axis.parse()?, values, seeds, eval_slots: slots, include_max_link: !no_max_link };
            let rows = harness::run_sweep(&exp, &sweep)?;
            for r in &rows {
                println!("{}={} {}: median {:.4} (min {:.4}, max {:.4})", r.axis.name(), r.value, r.policy, r.median, r.min, r.max);
            }
            harness::write_sweep_csv(create(&out)?, &exp.entries(), &rows)?;
        }
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
