//! Epsilon-greedy action selection.

use rand::Rng;

use crate::env::ActionMask;
use crate::nn::Network;
use crate::Result;

/// Which actions the agent may pick from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Only actions valid in the current state.
    Masked,
    /// All `2K + 1` actions, valid or not.
    Unmasked,
}

/// Exploration rate of the `iteration`-th (1-based) training iteration:
/// `max(decay^(iteration - 1), floor)`.
pub fn epsilon(iteration: u64, decay: f64, floor: f64) -> f64 {
    let exponent = iteration.saturating_sub(1);
    let value = if exponent > i32::MAX as u64 { 0.0 } else { decay.powi(exponent as i32) };
    value.max(floor)
}

/// Highest-valued candidate; ties go to the lowest index.
pub fn greedy(q: &[f64], mask: &ActionMask, selection: Selection) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (a, &v) in q.iter().enumerate() {
        if selection == Selection::Masked && !mask.is_valid(a) {
            continue;
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((a, v));
        }
    }
    best.map_or(0, |(a, _)| a)
}

/// Epsilon-greedy choice over precomputed Q-values.
pub fn select_from_q<R: Rng + ?Sized>(
    q: &[f64],
    mask: &ActionMask,
    eps: f64,
    rng: &mut R,
    selection: Selection,
) -> usize {
    if rng.random::<f64>() < eps {
        match selection {
            Selection::Unmasked => rng.random_range(0..q.len()),
            Selection::Masked => {
                let n = mask.valid().count();
                mask.valid().nth(rng.random_range(0..n)).unwrap_or(0)
            }
        }
    } else {
        greedy(q, mask, selection)
    }
}

pub fn select_action<R: Rng + ?Sized>(
    net: &Network,
    state: &[f64],
    mask: &ActionMask,
    eps: f64,
    rng: &mut R,
    selection: Selection,
) -> Result<usize> {
    let q = net.forward(state)?;
    Ok(select_from_q(&q, mask, eps, rng, selection))
}
