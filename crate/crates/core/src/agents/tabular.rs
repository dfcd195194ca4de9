//! Tabular Q-learning and Sarsa for instances small enough to enumerate.
//!
//! States are indexed by buffer lengths and validity codes, giving
//! `(4 (L + 1))^K` rows of `2K + 1` actions each.

use rand::Rng;

use super::policy::{greedy, select_from_q, Selection};
use super::Algorithm;
use crate::env::{ActionMask, EnvConfig, LinkCode, RelayEnv};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
    actions: usize,
}

impl QTable {
    pub fn new(states: usize, actions: usize) -> Self {
        Self { values: vec![0.0; states * actions], actions }
    }

    pub fn states(&self) -> usize {
        self.values.len() / self.actions
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.actions + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.values[state * self.actions + action] = value;
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.actions..(state + 1) * self.actions]
    }
}

/// One observed transition in table coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    /// Required for Sarsa.
    pub next_action: Option<usize>,
    /// Actions Q-learning may maximize over at `next_state`; all when absent.
    pub next_mask: Option<ActionMask>,
}

/// One-step update `Q(s,a) += step * (r + discount * Tar - Q(s,a))`.
pub fn tabular_update(table: &mut QTable, tr: &Transition, algorithm: Algorithm, step: f64, discount: f64) -> Result<()> {
    let next = table.row(tr.next_state);
    let bootstrap = match algorithm {
        Algorithm::Sarsa => {
            let a = tr.next_action.ok_or_else(|| Error::InvalidConfig("Sarsa update needs the next action".into()))?;
            next[a]
        }
        Algorithm::QLearning => match &tr.next_mask {
            Some(mask) => mask.valid().map(|a| next[a]).fold(f64::NEG_INFINITY, f64::max),
            None => next.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        },
    };
    let q = table.get(tr.state, tr.action);
    table.set(tr.state, tr.action, q + step * (tr.reward + discount * bootstrap - q));
    Ok(())
}

/// Mixed-radix index of `(lengths, codes)` with digit `4 l_k + (c_k - 1)` per relay.
pub fn state_index(lengths: &[usize], codes: &[LinkCode], buffer_size: usize) -> usize {
    let base = 4 * (buffer_size + 1);
    lengths
        .iter()
        .zip(codes)
        .rev()
        .fold(0, |acc, (&l, &c)| acc * base + 4 * l + (c.value() as usize - 1))
}

pub fn state_count(relays: usize, buffer_size: usize) -> usize {
    (4 * (buffer_size + 1)).pow(relays as u32)
}

/// Settings for [`train_tabular`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabularConfig {
    pub algorithm: Algorithm,
    pub steps: u64,
    pub step_size: f64,
    pub discount: f64,
    pub epsilon: f64,
}

/// Learns a table on a masked environment with a fixed exploration rate.
pub fn train_tabular<E: Rng, R: Rng + ?Sized>(env: &mut RelayEnv<E>, cfg: &TabularConfig, rng: &mut R) -> Result<QTable> {
    let env_cfg = env.config().clone();
    let states = state_count(env_cfg.relays(), env_cfg.buffer_size);
    let mut table = QTable::new(states, env_cfg.num_actions());
    let observe = |env: &RelayEnv<E>, cfg: &EnvConfig| {
        (state_index(&env.state().buffer_lengths(), &env.codes(), cfg.buffer_size), env.valid_actions())
    };
    let (mut s, mask) = observe(env, &env_cfg);
    let mut a = select_from_q(table.row(s), &mask, cfg.epsilon, rng, Selection::Masked);
    for _ in 0..cfg.steps {
        let out = env.step_index(a)?;
        let (s2, mask2) = observe(env, &env_cfg);
        let a2 = select_from_q(table.row(s2), &mask2, cfg.epsilon, rng, Selection::Masked);
        let tr = Transition {
            state: s,
            action: a,
            reward: out.reward,
            next_state: s2,
            next_action: Some(a2),
            next_mask: Some(mask2),
        };
        tabular_update(&mut table, &tr, cfg.algorithm, cfg.step_size, cfg.discount)?;
        (s, a) = (s2, a2);
    }
    Ok(table)
}

/// Greedy action of `table` at the environment's current state.
pub fn greedy_action(table: &QTable, lengths: &[usize], codes: &[LinkCode], buffer_size: usize) -> usize {
    let s = state_index(lengths, codes, buffer_size);
    greedy(table.row(s), &ActionMask::from_codes(codes), Selection::Masked)
}
