//! Buffer-aided relay selection under a delay constraint.
//!
//! The crate models a two-hop half-duplex network in which a saturated source
//! reaches a destination through `K` decode-and-forward relays, each holding a
//! finite FIFO buffer. One link (or none) is selected per slot. Relay selection
//! policies are learned with deep Q-learning or deep Sarsa, handling invalid
//! actions either through negative rewards ("punishment") or through zero-target
//! training pairs and masked action selection ("decision assist"). The max-link
//! scheme is provided as a baseline and small-instance tabular learners serve as
//! oracles.
//!
//! Module map:
//! - [`channel`]: Rayleigh block fading, link capacity and outage.
//! - [`env`]: buffers, delay accounting, link validity, state encoding, rewards.
//! - [`nn`]: feed-forward network with explicit backprop and Adam.
//! - [`agents`]: experience generation, targets, the training loop, tabular oracles.
//! - [`baselines`]: max-link and random selection.
//! - [`harness`]: presets, config files, CSV metrics and the CLI commands.

pub mod agents;
pub mod baselines;
pub mod channel;
pub mod env;
mod error;
pub mod harness;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
