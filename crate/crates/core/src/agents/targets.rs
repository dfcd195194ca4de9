//! Regression targets for a replay batch.

use super::experience::Experience;
use super::{Algorithm, Assist};
use crate::env::ActionMask;
use crate::nn::{Network, TargetSpec};
use crate::{Error, Result};

/// Bootstrapped value of the next state under the target network.
///
/// Q-learning maximizes over the next state's actions (only the selectable
/// ones under decision assist); Sarsa evaluates the recorded next action.
pub fn bootstrap(exp: &Experience, q_next: &[f64], algorithm: Algorithm, assist: Assist) -> Result<f64> {
    match algorithm {
        Algorithm::Sarsa => {
            let a = exp
                .next_action
                .ok_or_else(|| Error::InvalidConfig("Sarsa target needs the next action".into()))?;
            q_next.get(a).copied().ok_or(Error::DimensionMismatch { expected: q_next.len(), actual: a })
        }
        Algorithm::QLearning => {
            let best = match assist {
                Assist::Decision => max_over(q_next, exp.next_mask.valid()),
                Assist::Punishment => max_over(q_next, 0..q_next.len()),
            };
            Ok(best)
        }
    }
}

fn max_over(q: &[f64], actions: impl Iterator<Item = usize>) -> f64 {
    actions.map(|a| q[a]).fold(f64::NEG_INFINITY, f64::max)
}

/// Builds one [`TargetSpec`] per experience with `y = discount * Tar + r`.
///
/// Under decision assist every action that was invalid at the experience's
/// state becomes a zero-target pair; under punishment there are none.
pub fn build_targets(
    batch: &[&Experience],
    target: &Network,
    discount: f64,
    algorithm: Algorithm,
    assist: Assist,
) -> Result<Vec<TargetSpec>> {
    batch
        .iter()
        .map(|exp| {
            let q_next = target.forward(&exp.next_state)?;
            let y = discount * bootstrap(exp, &q_next, algorithm, assist)? + exp.reward;
            Ok(TargetSpec { state: exp.state.clone(), action: exp.action, target: y, zero_mask: zero_mask(&exp.mask, assist) })
        })
        .collect()
}

pub fn zero_mask(mask: &ActionMask, assist: Assist) -> Vec<usize> {
    match assist {
        Assist::Decision => mask.invalid().collect(),
        Assist::Punishment => Vec::new(),
    }
}
