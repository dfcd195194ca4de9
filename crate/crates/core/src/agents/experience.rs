//! Experience generation and replay sampling.

use rand::seq::index;
use rand::Rng;

use super::policy::{select_action, Selection};
use super::Algorithm;
use crate::env::{ActionMask, RelayEnv};
use crate::nn::Network;
use crate::{Error, Result};

/// One transition. Sarsa experiences also carry the action predicted for `next_state`.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub next_action: Option<usize>,
    /// Selectable actions at `state`, captured when the experience was made.
    pub mask: ActionMask,
    /// Selectable actions at `next_state`.
    pub next_mask: ActionMask,
}

/// Runs `count` environment steps with a fixed network and exploration rate.
///
/// Q-learning picks a fresh action at every state. Sarsa applies the action it
/// predicted one step earlier; the first action of the phase is picked fresh.
pub fn generate_experiences<E: Rng, R: Rng + ?Sized>(
    env: &mut RelayEnv<E>,
    net: &Network,
    eps: f64,
    count: usize,
    algorithm: Algorithm,
    selection: Selection,
    rng: &mut R,
) -> Result<Vec<Experience>> {
    if count == 0 {
        return Err(Error::InvalidConfig("experience count must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(count);
    let mut state = env.observe();
    let mut mask = env.valid_actions();
    let mut action = select_action(net, &state, &mask, eps, rng, selection)?;
    for _ in 0..count {
        let outcome = env.step_index(action)?;
        let next_state = env.observe();
        let next_mask = env.valid_actions();
        let next_action = select_action(net, &next_state, &next_mask, eps, rng, selection)?;
        out.push(Experience {
            state,
            action,
            reward: outcome.reward,
            next_state: next_state.clone(),
            next_action: (algorithm == Algorithm::Sarsa).then_some(next_action),
            mask,
            next_mask: next_mask.clone(),
        });
        state = next_state;
        mask = next_mask;
        action = next_action;
    }
    Ok(out)
}

/// Uniform sample of `size` distinct experiences.
pub fn sample_batch<'a, R: Rng + ?Sized>(experiences: &'a [Experience], size: usize, rng: &mut R) -> Result<Vec<&'a Experience>> {
    if size == 0 || size > experiences.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot sample {size} experiences from {}",
            experiences.len()
        )));
    }
    Ok(index::sample(rng, experiences.len(), size).into_iter().map(|i| &experiences[i]).collect())
}
