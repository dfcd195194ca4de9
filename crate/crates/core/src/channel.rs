//! Block-fading link model.
//!
//! Every link power gain `|h|^2` is redrawn independently each slot from a
//! unit-mean exponential distribution (Rayleigh amplitude). Path loss is kept
//! out of the gain and applied in [`link_capacity`], so the capacity of a link
//! with gain `g` over distance `d` is `log2(1 + (P/N0) * g / d^alpha)`.

use rand::Rng;
use rand_distr::Exp1;

use crate::{Error, Result};

/// Static network geometry and transmit conditions.
///
/// Only the source-relay and relay-destination distances matter to the link
/// model; they are fixed when the topology is built.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    sr_dist: Vec<f64>,
    rd_dist: Vec<f64>,
    alpha: f64,
    power_to_noise: f64,
}

impl Topology {
    /// Builds a topology from node coordinates in meters.
    pub fn from_positions(
        source: [f64; 2],
        dest: [f64; 2],
        relays: &[[f64; 2]],
        alpha: f64,
        power_to_noise: f64,
    ) -> Result<Self> {
        let dist = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
        let sr = relays.iter().map(|&r| dist(source, r)).collect();
        let rd = relays.iter().map(|&r| dist(r, dest)).collect();
        Self::from_distances(sr, rd, alpha, power_to_noise)
    }

    /// Builds a topology directly from per-relay hop distances.
    pub fn from_distances(
        sr_dist: Vec<f64>,
        rd_dist: Vec<f64>,
        alpha: f64,
        power_to_noise: f64,
    ) -> Result<Self> {
        if sr_dist.is_empty() {
            return Err(Error::InvalidConfig("at least one relay is required".into()));
        }
        if sr_dist.len() != rd_dist.len() {
            return Err(Error::InvalidConfig(format!(
                "{} source-relay distances but {} relay-destination distances",
                sr_dist.len(),
                rd_dist.len()
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("path-loss exponent must be > 0, got {alpha}")));
        }
        if !(power_to_noise > 0.0 && power_to_noise.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "power-to-noise ratio must be > 0, got {power_to_noise}"
            )));
        }
        if let Some(d) = sr_dist.iter().chain(&rd_dist).find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidConfig(format!("link distances must be > 0, got {d}")));
        }
        Ok(Self { sr_dist, rd_dist, alpha, power_to_noise })
    }

    /// Every relay at the same distance from both source and destination.
    pub fn equidistant(relays: usize, distance: f64, alpha: f64, power_to_noise: f64) -> Result<Self> {
        Self::from_distances(vec![distance; relays], vec![distance; relays], alpha, power_to_noise)
    }

    pub fn relays(&self) -> usize {
        self.sr_dist.len()
    }

    pub fn sr_distance(&self, k: usize) -> f64 {
        self.sr_dist[k]
    }

    pub fn rd_distance(&self, k: usize) -> f64 {
        self.rd_dist[k]
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn power_to_noise(&self) -> f64 {
        self.power_to_noise
    }

    /// Received SNR `(P/N0) * gain / d^alpha`.
    pub fn snr(&self, gain: f64, distance: f64) -> f64 {
        self.power_to_noise * gain / distance.powf(self.alpha)
    }
}

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-slot fading power gains of every link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGains {
    pub sr: Vec<f64>,
    pub rd: Vec<f64>,
}

impl LinkGains {
    pub fn constant(relays: usize, gain: f64) -> Self {
        Self { sr: vec![gain; relays], rd: vec![gain; relays] }
    }
}

/// How link gains evolve from slot to slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fading {
    /// Independent unit-mean exponential power gains every slot.
    Rayleigh,
    /// Every gain pinned to the given value; consumes no randomness.
    Fixed(f64),
}

impl Fading {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, relays: usize) -> LinkGains {
        match *self {
            Fading::Rayleigh => sample_gains(rng, relays),
            Fading::Fixed(g) => LinkGains::constant(relays, g),
        }
    }
}

/// Draws one slot of Rayleigh fading gains.
///
/// Draw order is fixed: `sr[0..K)` first, then `rd[0..K)`.
pub fn sample_gains<R: Rng + ?Sized>(rng: &mut R, relays: usize) -> LinkGains {
    let sr = (0..relays).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let rd = (0..relays).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    LinkGains { sr, rd }
}

/// Shannon capacity in bits/s/Hz of a link with fading gain `gain` over `distance` meters.
pub fn link_capacity(gain: f64, distance: f64, topo: &Topology) -> f64 {
    topo.snr(gain, distance).ln_1p() / std::f64::consts::LN_2
}

/// A link is in outage when its capacity does not exceed the target rate.
pub fn is_outage(capacity: f64, eta: f64) -> bool {
    capacity <= eta
}

/// Closed-form outage probability of a single Rayleigh link.
pub fn outage_probability(eta: f64, distance: f64, topo: &Topology) -> f64 {
    let threshold = (2f64.powf(eta) - 1.0) * distance.powf(topo.alpha) / topo.power_to_noise;
    -(-threshold).exp_m1()
}
