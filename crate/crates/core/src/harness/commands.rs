//! `train`, `eval` and `sweep`.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use super::config::Experiment;
use super::metrics_csv::MetricsWriter;
use crate::agents::{evaluate_network, train, Metrics};
use crate::baselines::{max_link_select, random_valid_select};
use crate::env::{evaluate_policy, Evaluation, InvalidActionMode};
use crate::nn::Network;
use crate::rng::{stream, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub network: Network,
    pub metrics: Vec<Metrics>,
}

impl TrainReport {
    pub fn final_throughput(&self) -> Option<f64> {
        self.metrics.last().map(|m| m.throughput)
    }
}

/// Trains one agent, streaming metrics to `csv_path` and saving the final
/// prediction network to `checkpoint_path`.
pub fn run_train(exp: &Experiment, csv_path: &Path, checkpoint_path: &Path) -> Result<TrainReport> {
    let env = exp.env_config()?;
    exp.train.validate()?;
    let mut writer = MetricsWriter::new(BufWriter::new(File::create(csv_path)?), &exp.entries())?;
    let (network, metrics) = train(&env, &exp.train, |m| writer.write(m))?;
    writer.into_inner()?.flush()?;
    let mut ckpt = BufWriter::new(File::create(checkpoint_path)?);
    network.save(&mut ckpt)?;
    ckpt.flush()?;
    Ok(TrainReport { network, metrics })
}

/// What `eval` measures.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalTarget {
    MaxLink,
    /// Uniform choice among valid actions.
    Random,
    /// A saved network acting greedily.
    Checkpoint(PathBuf),
}

impl EvalTarget {
    pub fn label(&self) -> String {
        match self {
            EvalTarget::MaxLink => "max-link".into(),
            EvalTarget::Random => "random".into(),
            EvalTarget::Checkpoint(p) => p.display().to_string(),
        }
    }
}

impl FromStr for EvalTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-link" | "maxlink" => Ok(EvalTarget::MaxLink),
            "random" => Ok(EvalTarget::Random),
            _ => Err(Error::InvalidConfig(format!("unknown policy {s:?} (expected max-link or random)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub policy: String,
    pub evaluation: Evaluation,
}

impl EvalReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let e = &self.evaluation;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["policy", "slots", "throughput", "unconstrained_throughput", "on_time", "late", "invalid"])?;
        w.write_record([
            self.policy.clone(),
            e.slots.to_string(),
            e.throughput().to_string(),
            e.unconstrained_throughput().to_string(),
            e.on_time.to_string(),
            e.late.to_string(),
            e.invalid.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = &self.evaluation;
        write!(
            f,
            "{}: throughput {:.4} packets/slot over {} slots ({} on time, {} late, {} invalid)",
            self.policy,
            e.throughput(),
            e.slots,
            e.on_time,
            e.late,
            e.invalid
        )
    }
}

/// Delay-constrained throughput of `target` over `slots` fresh slots.
pub fn run_eval(exp: &Experiment, target: &EvalTarget, slots: u64) -> Result<EvalReport> {
    if slots == 0 {
        return Err(Error::InvalidConfig("evaluation needs at least one slot".into()));
    }
    let seed = exp.train.seed;
    let channel = stream(seed, Stream::EvalChannel);
    let evaluation = match target {
        EvalTarget::MaxLink => {
            let cfg = exp.env_config_with_mode(InvalidActionMode::Masked)?;
            evaluate_policy(max_link_select, &cfg, slots, channel)?
        }
        EvalTarget::Random => {
            let cfg = exp.env_config_with_mode(InvalidActionMode::Masked)?;
            let mut rng = stream(seed, Stream::EvalPolicy);
            evaluate_policy(|s, c| random_valid_select(s, c, &mut rng), &cfg, slots, channel)?
        }
        EvalTarget::Checkpoint(path) => {
            let net = Network::load(BufReader::new(File::open(path)?))?;
            let cfg = exp.env_config()?;
            if net.input_dim() != cfg.state_dim() || net.output_dim() != cfg.num_actions() {
                return Err(Error::InvalidConfig(format!(
                    "checkpoint is for {} inputs / {} actions but the scenario needs {} / {}",
                    net.input_dim(),
                    net.output_dim(),
                    cfg.state_dim(),
                    cfg.num_actions()
                )));
            }
            evaluate_network(&net, &cfg, exp.train.assist.selection(), slots, channel)?.evaluation
        }
    };
    Ok(EvalReport { policy: target.label(), evaluation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Target delay.
    Delay,
    /// Target rate.
    Rate,
    /// Number of relays.
    Relays,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Delay => "delay",
            SweepAxis::Rate => "rate",
            SweepAxis::Relays => "relays",
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(self, base: &Experiment, value: f64) -> Result<Experiment> {
        let mut exp = base.clone();
        let whole = |v: f64| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as u64)
            } else {
                Err(Error::InvalidConfig(format!("{} sweep needs whole numbers, got {v}", self.name())))
            }
        };
        match self {
            SweepAxis::Delay => exp.delay = whole(value)?,
            SweepAxis::Rate => exp.eta = value,
            SweepAxis::Relays => exp.relays = whole(value)? as usize,
        }
        exp.validate()?;
        Ok(exp)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delay" => Ok(SweepAxis::Delay),
            "rate" | "eta" => Ok(SweepAxis::Rate),
            "relays" => Ok(SweepAxis::Relays),
            _ => Err(Error::InvalidConfig(format!("unknown sweep axis {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Seeds per point: `base_seed, base_seed + 1, ...`.
    pub seeds: usize,
    /// Slots of the final evaluation of each trained agent and of max-link.
    pub eval_slots: u64,
    pub include_max_link: bool,
}

/// One aggregated sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub policy: String,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub runs: usize,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Copy)]
enum Job {
    Learned,
    MaxLink,
}

/// Trains and evaluates one agent per value and seed (in parallel), plus the
/// max-link baseline when requested, and aggregates medians across seeds.
/// Row order is fixed: values in input order, learned policy before max-link.
pub fn run_sweep(base: &Experiment, sweep: &SweepConfig) -> Result<Vec<SweepRow>> {
    if sweep.values.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one value".into()));
    }
    if sweep.seeds == 0 || sweep.eval_slots == 0 {
        return Err(Error::InvalidConfig("sweep needs at least one seed and one evaluation slot".into()));
    }
    let mut kinds = vec![Job::Learned];
    if sweep.include_max_link {
        kinds.push(Job::MaxLink);
    }
    let mut jobs = Vec::new();
    for &value in &sweep.values {
        let exp = sweep.axis.apply(base, value)?;
        for &kind in &kinds {
            for s in 0..sweep.seeds {
                let mut e = exp.clone();
                e.train.seed = base.train.seed + s as u64;
                jobs.push((value, kind, e));
            }
        }
    }
    let results: Vec<f64> = jobs
        .par_iter()
        .map(|(_, kind, exp)| -> Result<f64> {
            match kind {
                Job::Learned => {
                    let (net, _) = train(&exp.env_config()?, &exp.train, |_| Ok(()))?;
                    let channel = stream(exp.train.seed, Stream::EvalChannel);
                    let eval = evaluate_network(&net, &exp.env_config()?, exp.train.assist.selection(), sweep.eval_slots, channel)?;
                    Ok(eval.evaluation.throughput())
                }
                Job::MaxLink => Ok(run_eval(exp, &EvalTarget::MaxLink, sweep.eval_slots)?.evaluation.throughput()),
            }
        })
        .collect::<Result<_>>()?;

    let label = base.train.variant_label();
    Ok(jobs
        .chunks(sweep.seeds)
        .zip(results.chunks(sweep.seeds))
        .map(|(group, tp)| SweepRow {
            axis: sweep.axis,
            value: group[0].0,
            policy: match group[0].1 {
                Job::Learned => label.clone(),
                Job::MaxLink => "max-link".into(),
            },
            median: median(tp),
            min: tp.iter().copied().fold(f64::INFINITY, f64::min),
            max: tp.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            runs: tp.len(),
        })
        .collect())
}

pub const SWEEP_COLUMNS: [&str; 7] = ["axis", "value", "policy", "median_throughput", "min_throughput", "max_throughput", "runs"];

pub fn write_sweep_csv<W: Write>(out: W, settings: &[(&str, String)], rows: &[SweepRow]) -> Result<()> {
    let mut out = out;
    for (k, v) in settings {
        writeln!(out, "# {k} = {v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.axis.name().to_string(),
            r.value.to_string(),
            r.policy.clone(),
            r.median.to_string(),
            r.min.to_string(),
            r.max.to_string(),
            r.runs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
