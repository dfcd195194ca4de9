//! Non-learning relay selection policies.

use rand::Rng;

use crate::channel::{is_outage, link_capacity};
use crate::env::{valid_action_set, Action, EnvConfig, EnvState};

/// Max-link selection.
///
/// Among the links whose buffer allows transmission (S->R_k with room, R_k->D
/// with a packet queued) picks the one with the highest received SNR, path loss
/// included. If that link is in outage, or no link is available, the slot is
/// left idle. Ties go to the lowest action index.
pub fn max_link_select(state: &EnvState, cfg: &EnvConfig) -> Action {
    let topo = &cfg.topology;
    let mut best: Option<(Action, f64, f64)> = None;
    let mut consider = |action: Action, gain: f64, distance: f64| {
        let snr = topo.snr(gain, distance);
        if best.is_none_or(|(_, s, _)| snr > s) {
            best = Some((action, snr, link_capacity(gain, distance, topo)));
        }
    };
    let k = cfg.relays();
    for r in 0..k {
        if !state.buffers[r].is_full() {
            consider(Action::SourceToRelay(r), state.gains.sr[r], topo.sr_distance(r));
        }
    }
    for r in 0..k {
        if !state.buffers[r].is_empty() {
            consider(Action::RelayToDest(r), state.gains.rd[r], topo.rd_distance(r));
        }
    }
    match best {
        Some((action, _, capacity)) if !is_outage(capacity, cfg.eta) => action,
        _ => Action::None,
    }
}

/// Uniformly random choice among the currently valid actions, `None` included.
pub fn random_valid_select<R: Rng + ?Sized>(state: &EnvState, cfg: &EnvConfig, rng: &mut R) -> Action {
    let mask = valid_action_set(state, cfg);
    let n = mask.valid().count();
    let index = mask.valid().nth(rng.random_range(0..n)).unwrap_or(0);
    Action::from_index(index, cfg.relays()).unwrap_or(Action::None)
}
