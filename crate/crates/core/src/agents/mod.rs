//! Learning agents: deep Q-learning and deep Sarsa with either punishment
//! rewards or decision assist, plus tabular learners used as oracles on
//! small instances.

mod experience;
mod policy;
pub mod tabular;
mod targets;
mod train;

use std::fmt;
use std::str::FromStr;

pub use experience::{generate_experiences, sample_batch, Experience};
pub use policy::{epsilon, greedy, select_action, select_from_q, Selection};
pub use targets::{bootstrap, build_targets, zero_mask};
pub use train::{evaluate_network, train, Metrics, NetworkEvaluation, Trainer};

use crate::env::InvalidActionMode;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    QLearning,
    Sarsa,
}

/// How invalid actions are taught to the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assist {
    /// Masked selection plus zero-target pairs for every invalid action.
    Decision,
    /// Unmasked selection; invalid picks earn a negative reward.
    Punishment,
}

impl Assist {
    pub fn selection(self) -> Selection {
        match self {
            Assist::Decision => Selection::Masked,
            Assist::Punishment => Selection::Unmasked,
        }
    }

    pub fn env_mode(self) -> InvalidActionMode {
        match self {
            Assist::Decision => InvalidActionMode::Masked,
            Assist::Punishment => InvalidActionMode::Punishable,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::QLearning => "q",
            Algorithm::Sarsa => "sarsa",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "q" | "ql" | "q-learning" | "qlearning" => Ok(Algorithm::QLearning),
            "sarsa" => Ok(Algorithm::Sarsa),
            _ => Err(Error::InvalidConfig(format!("unknown algorithm {s:?} (expected q or sarsa)"))),
        }
    }
}

impl fmt::Display for Assist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Assist::Decision => "decision",
            Assist::Punishment => "punish",
        })
    }
}

impl FromStr for Assist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "decision" | "da" | "decision-assist" => Ok(Assist::Decision),
            "punish" | "punishment" => Ok(Assist::Punishment),
            _ => Err(Error::InvalidConfig(format!("unknown assist mode {s:?} (expected decision or punish)"))),
        }
    }
}

/// Hyperparameters of a deep training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Discount factor applied to the bootstrapped target.
    pub discount: f64,
    /// Per-iteration multiplicative decay of the exploration rate.
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    /// Adam base step size.
    pub learning_rate: f64,
    /// Experiences generated before each prediction update.
    pub generate: usize,
    /// Replay batch size.
    pub batch: usize,
    /// Prediction updates between target-network copies.
    pub sync_every: usize,
    /// Outer rounds, each ending in a target copy and an evaluation.
    pub rounds: usize,
    pub algorithm: Algorithm,
    pub assist: Assist,
    pub seed: u64,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    /// Greedy slots per held-out evaluation.
    pub eval_slots: u64,
    /// Record elapsed seconds in metrics. Off by default so that metric streams
    /// are reproducible byte for byte.
    pub record_wall_clock: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            discount: 0.9,
            epsilon_decay: 0.999,
            epsilon_min: 0.1,
            learning_rate: 0.001,
            generate: 500,
            batch: 32,
            sync_every: 100,
            rounds: 60,
            algorithm: Algorithm::Sarsa,
            assist: Assist::Decision,
            seed: 1,
            hidden: vec![128, 128],
            eval_slots: 10_000,
            record_wall_clock: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        open_unit("discount", self.discount)?;
        open_unit("epsilon decay", self.epsilon_decay)?;
        open_unit("epsilon floor", self.epsilon_min)?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if self.generate == 0 || self.batch == 0 || self.sync_every == 0 {
            return Err(Error::InvalidConfig("generation size, batch size and sync period must be >= 1".into()));
        }
        if self.batch > self.generate {
            return Err(Error::InvalidConfig(format!(
                "batch size {} exceeds experiences per phase {}",
                self.batch, self.generate
            )));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidConfig("hidden layers must be non-empty".into()));
        }
        if self.eval_slots == 0 {
            return Err(Error::InvalidConfig("evaluation needs at least one slot".into()));
        }
        Ok(())
    }

    /// Network layer sizes for `relays` relays.
    pub fn layer_sizes(&self, relays: usize) -> Vec<usize> {
        let mut sizes = vec![5 * relays];
        sizes.extend(&self.hidden);
        sizes.push(2 * relays + 1);
        sizes
    }

    /// Short label such as `DAD-Sarsa` or `punish-QL`.
    pub fn variant_label(&self) -> String {
        let alg = match self.algorithm {
            Algorithm::QLearning => "QL",
            Algorithm::Sarsa => "Sarsa",
        };
        match self.assist {
            Assist::Decision => format!("DAD-{alg}"),
            Assist::Punishment => format!("punish-{alg}"),
        }
    }
}
