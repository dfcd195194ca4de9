//! Independent oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use bufrelay::channel::{Fading, Topology};
use bufrelay::env::{evaluate_policy, Action, ActionClass, EnvConfig, EnvState, InvalidActionMode, RelayEnv, StepOutcome};
use bufrelay::nn::{Activation, Gradients, Network, TargetSpec};
use bufrelay::rng::{stream, Stream};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straightforward forward pass written against the raw parameters.
pub fn reference_forward(net: &Network, x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for layer in net.layers() {
        let mut z = vec![0.0; layer.outputs()];
        for (o, zo) in z.iter_mut().enumerate() {
            let mut s = layer.bias[o];
            for i in 0..layer.inputs() {
                s += layer.weights[o * layer.inputs() + i] * h[i];
            }
            *zo = match layer.activation {
                Activation::Relu => s.max(0.0),
                Activation::Identity => s,
            };
        }
        h = z;
    }
    h
}

pub fn reference_loss(net: &Network, batch: &[TargetSpec]) -> f64 {
    batch
        .iter()
        .map(|s| {
            let q = reference_forward(net, &s.state);
            let e = q[s.action] - s.target;
            e * e + s.zero_mask.iter().map(|&a| q[a] * q[a]).sum::<f64>()
        })
        .sum()
}

fn random_sizes(rng: &mut ChaCha8Rng) -> Vec<usize> {
    let depth = rng.random_range(1..=3);
    let mut sizes = vec![rng.random_range(2..=7)];
    for _ in 0..depth {
        sizes.push(rng.random_range(2..=6));
    }
    sizes.push(rng.random_range(3..=5));
    sizes
}

/// Network with small random biases so that hidden units are not all aligned at zero.
pub fn random_net(rng: &mut ChaCha8Rng) -> Network {
    let mut net = Network::new(&random_sizes(rng), rng).unwrap();
    for layer in net.layers_mut() {
        for b in &mut layer.bias {
            *b = rng.random_range(-0.3..0.3);
        }
    }
    net
}

pub fn random_batch(net: &Network, rng: &mut ChaCha8Rng, with_masks: bool) -> Vec<TargetSpec> {
    let n = rng.random_range(1..=6);
    (0..n)
        .map(|_| {
            let state: Vec<f64> = (0..net.input_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let action = rng.random_range(0..net.output_dim());
            let zero_mask = if with_masks {
                (0..net.output_dim()).filter(|&a| a != action && rng.random_bool(0.5)).collect()
            } else {
                Vec::new()
            };
            TargetSpec { state, action, target: rng.random_range(-2.0..2.0), zero_mask }
        })
        .collect()
}

fn param_mut(net: &mut Network, mut index: usize) -> &mut f64 {
    for layer in net.layers_mut() {
        if index < layer.weights.len() {
            return &mut layer.weights[index];
        }
        index -= layer.weights.len();
        if index < layer.bias.len() {
            return &mut layer.bias[index];
        }
        index -= layer.bias.len();
    }
    panic!("parameter index out of range");
}

/// Largest relative error between analytic and central-difference gradients
/// over `instances` random networks and masked batches.
pub fn worst_gradient_error(seed: u64, instances: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let net = random_net(&mut rng);
        let batch = random_batch(&net, &mut rng, true);
        let (_, grads) = net.loss_and_gradient(&batch).unwrap();
        let analytic: Vec<f64> = grads.iter().copied().collect();
        assert_eq!(analytic.len(), net.num_params());
        for (i, &a) in analytic.iter().enumerate() {
            let mut plus = net.clone();
            *param_mut(&mut plus, i) += h;
            let mut minus = net.clone();
            *param_mut(&mut minus, i) -= h;
            let numeric = (reference_loss(&plus, &batch) - reference_loss(&minus, &batch)) / (2.0 * h);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    worst
}

/// Gradients with every entry equal to `g`.
pub fn constant_gradients(net: &Network, g: f64) -> Gradients {
    Gradients { layers: net.layers().iter().map(|l| (vec![g; l.weights.len()], vec![g; l.bias.len()])).collect() }
}

/// Hand-written Adam on `f(b) = (b - y)^2`, returning the iterate after each step.
pub fn adam_reference_trajectory(b0: f64, y: f64, lr: f64, steps: i32) -> Vec<f64> {
    let (beta1, beta2, eps) = (0.9f64, 0.999f64, 1e-8);
    let (mut b, mut m, mut v) = (b0, 0.0f64, 0.0f64);
    (1..=steps)
        .map(|t| {
            let g = 2.0 * (b - y);
            m = beta1 * m + (1.0 - beta1) * g;
            v = beta2 * v + (1.0 - beta2) * g * g;
            let m_hat = m / (1.0 - beta1.powi(t));
            let v_hat = v / (1.0 - beta2.powi(t));
            b -= lr * m_hat / (v_hat.sqrt() + eps);
            b
        })
        .collect()
}

/// Deterministic chain: states 0, 1, 2; action 0 moves left, action 1 moves
/// right. Entering state 2 pays 1, staying in 2 pays 0.5, other moves pay 0.
pub fn chain(s: usize, a: usize) -> (usize, f64) {
    let next = if a == 0 { s.saturating_sub(1) } else { (s + 1).min(2) };
    let reward = match (s, next) {
        (2, 2) => 0.5,
        (_, 2) => 1.0,
        _ => 0.0,
    };
    (next, reward)
}

pub fn chain_value_iteration(discount: f64) -> [[f64; 2]; 3] {
    let mut q = [[0.0f64; 2]; 3];
    for _ in 0..10_000 {
        let mut next = q;
        for (s, row) in next.iter_mut().enumerate() {
            for (a, v) in row.iter_mut().enumerate() {
                let (s2, r) = chain(s, a);
                *v = r + discount * q[s2][0].max(q[s2][1]);
            }
        }
        q = next;
    }
    q
}

/// One relay, one buffer slot, both links always above the target rate.
pub fn toy_env() -> EnvConfig {
    EnvConfig {
        topology: Topology::equidistant(1, 5.0, 3.0, 1e5).unwrap(),
        fading: Fading::Fixed(1.0),
        buffer_size: 1,
        eta: 8.0,
        target_delay: 6,
        invalid_action_mode: InvalidActionMode::Masked,
    }
}

/// Best deterministic toy policy `(action on empty buffer, action on full
/// buffer)` and its throughput, by enumerating all of them.
pub fn toy_enumerated_optimum() -> ((Action, Action), f64) {
    let mut best = ((Action::None, Action::None), -1.0);
    for on_empty in [Action::None, Action::SourceToRelay(0)] {
        for on_full in [Action::None, Action::RelayToDest(0)] {
            let policy = |s: &EnvState, _: &EnvConfig| if s.buffers[0].is_empty() { on_empty } else { on_full };
            let tp = evaluate_policy(policy, &toy_env(), 1000, stream(0, Stream::EvalChannel)).unwrap().throughput();
            if tp > best.1 {
                best = ((on_empty, on_full), tp);
            }
        }
    }
    best
}

pub fn rayleigh_env(relays: usize, buffer: usize, eta: f64, delay: u64, mode: InvalidActionMode) -> EnvConfig {
    EnvConfig {
        topology: Topology::equidistant(relays, 5.0, 3.0, 1e5).unwrap(),
        fading: Fading::Rayleigh,
        buffer_size: buffer,
        eta,
        target_delay: delay,
        invalid_action_mode: mode,
    }
}

pub struct Rollout {
    pub outcomes: Vec<StepOutcome>,
    pub on_time: u64,
}

/// Random-action rollout that panics on the first broken invariant: buffer
/// bounds, at most one packet moved per slot, FIFO order per relay, delay of
/// at least two slots, packet conservation, reward and class consistency, no
/// invalid outcome in masked mode, and at most one on-time delivery per two
/// slots.
pub fn checked_rollout(cfg: &EnvConfig, steps: usize, seed: u64) -> Rollout {
    let k = cfg.relays();
    let mut env = RelayEnv::new(cfg.clone(), stream(seed, Stream::TrainChannel)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_seq: Vec<Option<u64>> = vec![None; k];
    let mut dequeued = 0u64;
    let mut on_time = 0u64;
    let mut outcomes = Vec::with_capacity(steps);
    for t in 0..steps {
        let before = env.state().buffered_packets();
        let lengths_before = env.state().buffer_lengths();
        let action = match cfg.invalid_action_mode {
            InvalidActionMode::Masked => {
                let valid: Vec<usize> = env.valid_actions().valid().collect();
                valid[rng.random_range(0..valid.len())]
            }
            InvalidActionMode::Punishable => rng.random_range(0..cfg.num_actions()),
        };
        let out = env.step_index(action).unwrap();
        let state = env.state();
        assert_eq!(state.t, t as u64 + 1);

        for b in &state.buffers {
            assert!(b.len() <= cfg.buffer_size);
        }
        assert!(state.buffered_packets().abs_diff(before) <= 1);

        if let Some(d) = out.delivered {
            assert!(d.delay >= 2, "delay {} below two slots", d.delay);
            if let Some(prev) = last_seq[d.relay] {
                assert!(d.seq > prev, "relay {} delivered {} after {}", d.relay, d.seq, prev);
            }
            last_seq[d.relay] = Some(d.seq);
            dequeued += 1;
        }
        assert_eq!(env.enqueued() - dequeued, state.buffered_packets() as u64);

        match out.class {
            ActionClass::Rewarded => {
                assert_eq!(out.reward, 1.0);
                assert!(out.delivered.is_some_and(|d| d.delay <= cfg.target_delay));
                on_time += 1;
            }
            ActionClass::Zero => {
                assert_eq!(out.reward, 0.0);
                assert!(out.delivered.is_none_or(|d| d.delay > cfg.target_delay));
            }
            ActionClass::Invalid => {
                assert_eq!(cfg.invalid_action_mode, InvalidActionMode::Punishable, "invalid outcome in masked mode");
                assert_eq!(out.reward, -1.0);
                assert_eq!(state.buffer_lengths(), lengths_before);
            }
        }
        assert!(2 * on_time <= t as u64 + 1, "more than one on-time delivery per two slots");
        outcomes.push(out);
    }
    Rollout { outcomes, on_time }
}
