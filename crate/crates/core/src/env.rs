//! The buffer-aided relay network as a slotted decision environment.
//!
//! In every slot the agent picks one of `2K + 1` actions: stay silent, let the
//! source transmit to relay `k`, or let relay `k` forward its head-of-line packet
//! to the destination. A link can be selected only if its capacity exceeds the
//! target rate and its buffer allows it (not full for S->R, not empty for R->D).
//!
//! Packet delay is counted from the source transmission slot through the
//! destination reception slot inclusive, so a packet relayed in the very next
//! slot has delay 2. Only deliveries with delay `<= target_delay` earn reward.

use std::collections::VecDeque;
use std::fmt;

use rand::Rng;

use crate::channel::{is_outage, link_capacity, Fading, LinkGains, Topology};
use crate::{Error, Result};

/// How the environment reacts to an action whose link is not selectable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvalidActionMode {
    /// Invalid actions are a caller bug and are rejected with an error.
    Masked,
    /// Invalid actions waste the slot and earn a negative reward.
    Punishable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub topology: Topology,
    pub fading: Fading,
    /// Relay buffer capacity `L` in packets.
    pub buffer_size: usize,
    /// Target rate in bits/s/Hz.
    pub eta: f64,
    /// Largest end-to-end delay (slots) that still counts as throughput.
    pub target_delay: u64,
    pub invalid_action_mode: InvalidActionMode,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.buffer_size < 1 {
            return Err(Error::InvalidConfig("buffer size must be at least 1".into()));
        }
        if self.target_delay < 2 {
            return Err(Error::InvalidConfig(format!(
                "target delay must be at least 2 slots, got {}",
                self.target_delay
            )));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("target rate must be > 0, got {}", self.eta)));
        }
        if let Fading::Fixed(g) = self.fading {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::InvalidConfig(format!("fixed gain must be >= 0, got {g}")));
            }
        }
        Ok(())
    }

    pub fn relays(&self) -> usize {
        self.topology.relays()
    }

    pub fn num_actions(&self) -> usize {
        2 * self.relays() + 1
    }

    pub fn state_dim(&self) -> usize {
        5 * self.relays()
    }
}

/// One relay-selection decision. Relay indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    None,
    SourceToRelay(usize),
    RelayToDest(usize),
}

impl Action {
    /// Canonical index: `None -> 0`, `SourceToRelay(k) -> 1 + k`, `RelayToDest(k) -> 1 + K + k`.
    pub fn index(self, relays: usize) -> usize {
        match self {
            Action::None => 0,
            Action::SourceToRelay(k) => 1 + k,
            Action::RelayToDest(k) => 1 + relays + k,
        }
    }

    pub fn from_index(index: usize, relays: usize) -> Option<Self> {
        match index {
            0 => Some(Action::None),
            i if i <= relays => Some(Action::SourceToRelay(i - 1)),
            i if i <= 2 * relays => Some(Action::RelayToDest(i - 1 - relays)),
            _ => None,
        }
    }

    fn relay(self) -> Option<usize> {
        match self {
            Action::None => None,
            Action::SourceToRelay(k) | Action::RelayToDest(k) => Some(k),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::None => write!(f, "none"),
            Action::SourceToRelay(k) => write!(f, "S->R{k}"),
            Action::RelayToDest(k) => write!(f, "R{k}->D"),
        }
    }
}

/// Which of a relay's two links can be selected this slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkCode {
    SourceOnly = 1,
    DestOnly = 2,
    Both = 3,
    Neither = 4,
}

impl LinkCode {
    pub const ALL: [LinkCode; 4] = [LinkCode::SourceOnly, LinkCode::DestOnly, LinkCode::Both, LinkCode::Neither];

    pub fn from_validity(sr_valid: bool, rd_valid: bool) -> Self {
        match (sr_valid, rd_valid) {
            (true, false) => LinkCode::SourceOnly,
            (false, true) => LinkCode::DestOnly,
            (true, true) => LinkCode::Both,
            (false, false) => LinkCode::Neither,
        }
    }

    pub fn sr_valid(self) -> bool {
        matches!(self, LinkCode::SourceOnly | LinkCode::Both)
    }

    pub fn rd_valid(self) -> bool {
        matches!(self, LinkCode::DestOnly | LinkCode::Both)
    }

    /// The code as 1..=4.
    pub fn value(self) -> u8 {
        self as u8
    }

    /// Position of the hot entry in the one-hot group.
    fn slot(self) -> usize {
        self as usize - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    /// Slot in which the source transmitted the packet to the relay.
    pub origin_slot: u64,
    /// Global enqueue order, used to audit FIFO service.
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayBuffer {
    queue: VecDeque<Packet>,
    capacity: usize,
}

impl RelayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { queue: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.queue.len() >= self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn head(&self) -> Option<&Packet> {
        self.queue.front()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.queue.iter()
    }

    /// Appends a packet; returns it back if the buffer is full.
    pub fn push(&mut self, packet: Packet) -> std::result::Result<(), Packet> {
        if self.is_full() {
            return Err(packet);
        }
        self.queue.push_back(packet);
        Ok(())
    }

    pub fn pop(&mut self) -> Option<Packet> {
        self.queue.pop_front()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub t: u64,
    pub buffers: Vec<RelayBuffer>,
    pub gains: LinkGains,
}

impl EnvState {
    pub fn buffer_lengths(&self) -> Vec<usize> {
        self.buffers.iter().map(RelayBuffer::len).collect()
    }

    pub fn buffered_packets(&self) -> usize {
        self.buffers.iter().map(RelayBuffer::len).sum()
    }
}

/// Reward category of a taken action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionClass {
    /// Valid and delivered a packet within the target delay.
    Rewarded,
    /// Valid but earned nothing.
    Zero,
    /// Not selectable in the slot it was taken.
    Invalid,
}

impl ActionClass {
    pub fn reward(self) -> f64 {
        match self {
            ActionClass::Rewarded => 1.0,
            ActionClass::Zero => 0.0,
            ActionClass::Invalid => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub relay: usize,
    pub delay: u64,
    pub seq: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    /// Set for every successful relay-to-destination transmission, late or not.
    pub delivered: Option<Delivery>,
    pub class: ActionClass,
}

/// Validity code of relay `k` given its link gains and buffer occupancy.
pub fn classify_relay(sr_gain: f64, rd_gain: f64, buffer_len: usize, k: usize, cfg: &EnvConfig) -> LinkCode {
    let topo = &cfg.topology;
    let sr_up = !is_outage(link_capacity(sr_gain, topo.sr_distance(k), topo), cfg.eta);
    let rd_up = !is_outage(link_capacity(rd_gain, topo.rd_distance(k), topo), cfg.eta);
    LinkCode::from_validity(sr_up && buffer_len < cfg.buffer_size, rd_up && buffer_len > 0)
}

pub fn link_codes(state: &EnvState, cfg: &EnvConfig) -> Vec<LinkCode> {
    state
        .buffers
        .iter()
        .enumerate()
        .map(|(k, b)| classify_relay(state.gains.sr[k], state.gains.rd[k], b.len(), k, cfg))
        .collect()
}

/// Encodes buffer lengths (scaled by `1/L`) followed by one one-hot group of
/// four per relay validity code. Length `5K`.
pub fn encode_state(state: &EnvState, cfg: &EnvConfig) -> Vec<f64> {
    encode_parts(&state.buffer_lengths(), &link_codes(state, cfg), cfg.buffer_size)
}

pub fn encode_parts(lengths: &[usize], codes: &[LinkCode], buffer_size: usize) -> Vec<f64> {
    let k = lengths.len();
    let mut v = vec![0.0; 5 * k];
    for (i, &l) in lengths.iter().enumerate() {
        v[i] = l as f64 / buffer_size as f64;
    }
    for (i, c) in codes.iter().enumerate() {
        v[k + 4 * i + c.slot()] = 1.0;
    }
    v
}

/// Inverse of [`encode_state`]. Returns `None` for vectors that are not valid encodings.
pub fn decode_state(v: &[f64], buffer_size: usize) -> Option<(Vec<usize>, Vec<LinkCode>)> {
    if v.is_empty() || v.len() % 5 != 0 {
        return None;
    }
    let k = v.len() / 5;
    let mut lengths = Vec::with_capacity(k);
    for &x in &v[..k] {
        let l = (x * buffer_size as f64).round();
        if !(0.0..=buffer_size as f64).contains(&l) || (l / buffer_size as f64 - x).abs() > 1e-9 {
            return None;
        }
        lengths.push(l as usize);
    }
    let mut codes = Vec::with_capacity(k);
    for group in v[k..].chunks_exact(4) {
        let hot: Vec<usize> = (0..4).filter(|&j| group[j] == 1.0).collect();
        if hot.len() != 1 || group.iter().filter(|&&x| x != 0.0).count() != 1 {
            return None;
        }
        codes.push(LinkCode::ALL[hot[0]]);
    }
    Some((lengths, codes))
}

/// Selectable actions, indexed by canonical action index.
///
/// `None` is always selectable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionMask(Vec<bool>);

impl ActionMask {
    pub fn all_valid(num_actions: usize) -> Self {
        Self(vec![true; num_actions])
    }

    pub fn from_codes(codes: &[LinkCode]) -> Self {
        let k = codes.len();
        let mut m = vec![false; 2 * k + 1];
        m[0] = true;
        for (i, c) in codes.iter().enumerate() {
            m[1 + i] = c.sr_valid();
            m[1 + k + i] = c.rd_valid();
        }
        Self(m)
    }

    /// Reads validity straight off the one-hot code groups of an encoded state.
    pub fn from_state_vector(v: &[f64]) -> Self {
        let k = v.len() / 5;
        let codes: Vec<LinkCode> = v[k..]
            .chunks_exact(4)
            .map(|g| {
                let j = g.iter().position(|&x| x > 0.5).unwrap_or(3);
                LinkCode::ALL[j]
            })
            .collect();
        Self::from_codes(&codes)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.0.get(index).copied().unwrap_or(false)
    }

    pub fn valid(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| i)
    }

    pub fn invalid(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &v)| !v).map(|(i, _)| i)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

pub fn valid_action_set(state: &EnvState, cfg: &EnvConfig) -> ActionMask {
    ActionMask::from_codes(&link_codes(state, cfg))
}

/// A running network instance owning its state and channel randomness.
#[derive(Debug, Clone)]
pub struct RelayEnv<R> {
    cfg: EnvConfig,
    state: EnvState,
    rng: R,
    next_seq: u64,
}

impl<R: Rng> RelayEnv<R> {
    /// Starts at slot 0 with empty buffers and a fresh channel draw.
    pub fn new(cfg: EnvConfig, mut rng: R) -> Result<Self> {
        cfg.validate()?;
        let k = cfg.relays();
        let gains = cfg.fading.sample(&mut rng, k);
        let buffers = (0..k).map(|_| RelayBuffer::new(cfg.buffer_size)).collect();
        Ok(Self { state: EnvState { t: 0, buffers, gains }, cfg, rng, next_seq: 0 })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn codes(&self) -> Vec<LinkCode> {
        link_codes(&self.state, &self.cfg)
    }

    pub fn observe(&self) -> Vec<f64> {
        encode_state(&self.state, &self.cfg)
    }

    pub fn valid_actions(&self) -> ActionMask {
        valid_action_set(&self.state, &self.cfg)
    }

    /// Packets ever accepted by a relay buffer.
    pub fn enqueued(&self) -> u64 {
        self.next_seq
    }

    pub fn step_index(&mut self, index: usize) -> Result<StepOutcome> {
        let k = self.cfg.relays();
        let action = Action::from_index(index, k).ok_or(Error::InvalidAction { action: index, slot: self.state.t })?;
        self.step(action)
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        let k = self.cfg.relays();
        let t = self.state.t;
        if action.relay().is_some_and(|r| r >= k) {
            return Err(Error::InvalidAction { action: action.index(k), slot: t });
        }
        let code = action.relay().map(|r| {
            let s = &self.state;
            classify_relay(s.gains.sr[r], s.gains.rd[r], s.buffers[r].len(), r, &self.cfg)
        });

        let outcome = match (action, code) {
            (Action::None, _) => Some(StepOutcome { reward: 0.0, delivered: None, class: ActionClass::Zero }),
            (Action::SourceToRelay(r), Some(c)) if c.sr_valid() => {
                let packet = Packet { origin_slot: t, seq: self.next_seq };
                self.state.buffers[r].push(packet).expect("validity implies free space");
                self.next_seq += 1;
                Some(StepOutcome { reward: 0.0, delivered: None, class: ActionClass::Zero })
            }
            (Action::RelayToDest(r), Some(c)) if c.rd_valid() => {
                let packet = self.state.buffers[r].pop().expect("validity implies a queued packet");
                let delay = t - packet.origin_slot + 1;
                let class = if delay <= self.cfg.target_delay { ActionClass::Rewarded } else { ActionClass::Zero };
                Some(StepOutcome {
                    reward: class.reward(),
                    delivered: Some(Delivery { relay: r, delay, seq: packet.seq }),
                    class,
                })
            }
            _ => None,
        };

        let outcome = match outcome {
            Some(o) => o,
            None => match self.cfg.invalid_action_mode {
                InvalidActionMode::Masked => return Err(Error::InvalidAction { action: action.index(k), slot: t }),
                InvalidActionMode::Punishable => {
                    StepOutcome { reward: ActionClass::Invalid.reward(), delivered: None, class: ActionClass::Invalid }
                }
            },
        };

        self.state.t += 1;
        self.state.gains = self.cfg.fading.sample(&mut self.rng, k);
        Ok(outcome)
    }
}

/// Summary of a policy rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub slots: u64,
    /// Deliveries within the target delay.
    pub on_time: u64,
    /// Deliveries that missed the target delay.
    pub late: u64,
    pub invalid: u64,
}

impl Evaluation {
    /// Delay-constrained throughput in packets per slot.
    pub fn throughput(&self) -> f64 {
        if self.slots == 0 {
            0.0
        } else {
            self.on_time as f64 / self.slots as f64
        }
    }

    /// Throughput ignoring the delay constraint.
    pub fn unconstrained_throughput(&self) -> f64 {
        if self.slots == 0 {
            0.0
        } else {
            (self.on_time + self.late) as f64 / self.slots as f64
        }
    }
}

/// Runs `policy` for `slots` slots on a fresh environment.
pub fn evaluate_policy<R, P>(mut policy: P, cfg: &EnvConfig, slots: u64, rng: R) -> Result<Evaluation>
where
    R: Rng,
    P: FnMut(&EnvState, &EnvConfig) -> Action,
{
    if slots == 0 {
        return Err(Error::InvalidConfig("evaluation needs at least one slot".into()));
    }
    let mut env = RelayEnv::new(cfg.clone(), rng)?;
    let mut eval = Evaluation { slots, on_time: 0, late: 0, invalid: 0 };
    for _ in 0..slots {
        let action = policy(env.state(), env.config());
        let out = env.step(action)?;
        match out.class {
            ActionClass::Rewarded => eval.on_time += 1,
            ActionClass::Invalid => eval.invalid += 1,
            ActionClass::Zero if out.delivered.is_some() => eval.late += 1,
            ActionClass::Zero => {}
        }
    }
    Ok(eval)
}
