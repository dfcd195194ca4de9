//! The deep training loop.
//!
//! One iteration generates a phase of experiences with the prediction network
//! frozen, samples a replay batch from that phase only, and applies a single
//! Adam update. Every `sync_every` iterations the prediction network is copied
//! into the target network and a greedy evaluation rollout is logged.

use std::time::Instant;

use super::experience::{generate_experiences, sample_batch};
use super::policy::{epsilon, greedy, Selection};
use super::targets::build_targets;
use super::TrainConfig;
use crate::env::{ActionClass, EnvConfig, Evaluation, RelayEnv};
use crate::nn::{adam_step, AdamState, Network};
use crate::rng::{stream, SimRng, Stream};
use crate::Result;

/// One logged evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Prediction-network updates performed so far.
    pub iteration: u64,
    /// Greedy delay-constrained throughput on the held-out rollout.
    pub throughput: f64,
    /// Mean training loss over the updates since the previous point.
    pub loss: f64,
    /// Exploration rate of the most recent iteration.
    pub epsilon: f64,
    /// Mean `|Q|` over invalid actions of the states visited during evaluation.
    pub mean_abs_invalid_q: f64,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkEvaluation {
    pub evaluation: Evaluation,
    pub mean_abs_invalid_q: f64,
}

/// Greedy rollout of `net` for `slots` slots on a fresh environment.
pub fn evaluate_network(
    net: &Network,
    cfg: &EnvConfig,
    selection: Selection,
    slots: u64,
    rng: SimRng,
) -> Result<NetworkEvaluation> {
    let mut env = RelayEnv::new(cfg.clone(), rng)?;
    let mut eval = Evaluation { slots, on_time: 0, late: 0, invalid: 0 };
    let (mut invalid_sum, mut invalid_count) = (0.0, 0u64);
    for _ in 0..slots {
        let mask = env.valid_actions();
        let q = net.forward(&env.observe())?;
        for a in mask.invalid() {
            invalid_sum += q[a].abs();
            invalid_count += 1;
        }
        let out = env.step_index(greedy(&q, &mask, selection))?;
        match out.class {
            ActionClass::Rewarded => eval.on_time += 1,
            ActionClass::Invalid => eval.invalid += 1,
            ActionClass::Zero if out.delivered.is_some() => eval.late += 1,
            ActionClass::Zero => {}
        }
    }
    let mean_abs_invalid_q = if invalid_count == 0 { 0.0 } else { invalid_sum / invalid_count as f64 };
    Ok(NetworkEvaluation { evaluation: eval, mean_abs_invalid_q })
}

/// Stateful training run; [`train`] drives it round by round.
#[derive(Debug, Clone)]
pub struct Trainer {
    env_cfg: EnvConfig,
    cfg: TrainConfig,
    env: RelayEnv<SimRng>,
    prediction: Network,
    target: Network,
    adam: AdamState,
    agent_rng: SimRng,
    iteration: u64,
    started: Instant,
}

impl Trainer {
    /// The environment's invalid-action handling is taken from `cfg.assist`.
    pub fn new(env_cfg: &EnvConfig, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let env_cfg = EnvConfig { invalid_action_mode: cfg.assist.env_mode(), ..env_cfg.clone() };
        env_cfg.validate()?;
        let prediction = Network::new(&cfg.layer_sizes(env_cfg.relays()), &mut stream(cfg.seed, Stream::Init))?;
        let env = RelayEnv::new(env_cfg.clone(), stream(cfg.seed, Stream::TrainChannel))?;
        Ok(Self {
            env,
            target: prediction.clone(),
            adam: AdamState::new(&prediction),
            prediction,
            agent_rng: stream(cfg.seed, Stream::Agent),
            iteration: 0,
            started: Instant::now(),
            env_cfg,
            cfg: cfg.clone(),
        })
    }

    pub fn prediction(&self) -> &Network {
        &self.prediction
    }

    pub fn target(&self) -> &Network {
        &self.target
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn env_config(&self) -> &EnvConfig {
        &self.env_cfg
    }

    pub fn current_epsilon(&self) -> f64 {
        epsilon(self.iteration.max(1), self.cfg.epsilon_decay, self.cfg.epsilon_min)
    }

    /// Generates one phase of experiences and applies one prediction update.
    /// Returns the batch loss.
    pub fn iterate(&mut self) -> Result<f64> {
        self.iteration += 1;
        let cfg = &self.cfg;
        let eps = epsilon(self.iteration, cfg.epsilon_decay, cfg.epsilon_min);
        let experiences = generate_experiences(
            &mut self.env,
            &self.prediction,
            eps,
            cfg.generate,
            cfg.algorithm,
            cfg.assist.selection(),
            &mut self.agent_rng,
        )?;
        let batch = sample_batch(&experiences, cfg.batch, &mut self.agent_rng)?;
        let specs = build_targets(&batch, &self.target, cfg.discount, cfg.algorithm, cfg.assist)?;
        let (loss, grads) = self.prediction.loss_and_gradient(&specs)?;
        adam_step(&mut self.prediction, &grads, &mut self.adam, cfg.learning_rate)?;
        Ok(loss)
    }

    pub fn sync_target(&mut self) {
        self.target.copy_from(&self.prediction).expect("prediction and target share an architecture");
    }

    /// Greedy held-out evaluation of the prediction network. The evaluation
    /// channel stream restarts from the same seed every time.
    pub fn evaluate(&self) -> Result<NetworkEvaluation> {
        evaluate_network(
            &self.prediction,
            &self.env_cfg,
            self.cfg.assist.selection(),
            self.cfg.eval_slots,
            stream(self.cfg.seed, Stream::EvalChannel),
        )
    }

    /// `sync_every` iterations, a target copy, and an evaluation.
    pub fn round(&mut self) -> Result<Metrics> {
        let mut loss_sum = 0.0;
        for _ in 0..self.cfg.sync_every {
            loss_sum += self.iterate()?;
        }
        self.sync_target();
        let eval = self.evaluate()?;
        Ok(Metrics {
            iteration: self.iteration,
            throughput: eval.evaluation.throughput(),
            loss: loss_sum / self.cfg.sync_every as f64,
            epsilon: self.current_epsilon(),
            mean_abs_invalid_q: eval.mean_abs_invalid_q,
            seconds: self.cfg.record_wall_clock.then(|| self.started.elapsed().as_secs_f64()),
        })
    }

    pub fn into_network(self) -> Network {
        self.prediction
    }
}

/// Runs `cfg.rounds` rounds, reporting each point to `on_metrics` as it is
/// produced. An error from the callback aborts training.
pub fn train<F>(env_cfg: &EnvConfig, cfg: &TrainConfig, mut on_metrics: F) -> Result<(Network, Vec<Metrics>)>
where
    F: FnMut(&Metrics) -> Result<()>,
{
    let mut trainer = Trainer::new(env_cfg, cfg)?;
    let mut history = Vec::with_capacity(cfg.rounds);
    for _ in 0..cfg.rounds {
        let m = trainer.round()?;
        on_metrics(&m)?;
        history.push(m);
    }
    Ok((trainer.into_network(), history))
}
