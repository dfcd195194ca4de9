mod common;

use bufrelay::channel::{is_outage, link_capacity, outage_probability, Fading, Topology};
use bufrelay::env::InvalidActionMode;
use bufrelay::rng::{stream, Stream};
use common::{checked_rollout, rayleigh_env};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, ..ProptestConfig::default() })]

    #[test]
    fn masked_rollouts_keep_invariants(
        relays in 1usize..=5,
        buffer in 1usize..=4,
        eta in 4.0f64..10.0,
        delay in 2u64..=8,
        seed in 0u64..1_000_000,
    ) {
        let cfg = rayleigh_env(relays, buffer, eta, delay, InvalidActionMode::Masked);
        let r = checked_rollout(&cfg, 4000, seed);
        prop_assert!(r.on_time as f64 / 4000.0 <= 0.5);
    }

    #[test]
    fn punishable_rollouts_keep_invariants(
        relays in 1usize..=4,
        buffer in 1usize..=3,
        delay in 2u64..=6,
        seed in 0u64..1_000_000,
    ) {
        let cfg = rayleigh_env(relays, buffer, 8.0, delay, InvalidActionMode::Punishable);
        checked_rollout(&cfg, 1000, seed);
    }
}

#[test]
fn identical_seeds_give_identical_outcomes() {
    let cfg = rayleigh_env(4, 3, 8.0, 6, InvalidActionMode::Punishable);
    let a = checked_rollout(&cfg, 5000, 42).outcomes;
    let b = checked_rollout(&cfg, 5000, 42).outcomes;
    assert_eq!(a, b);
    let c = checked_rollout(&cfg, 5000, 43).outcomes;
    assert_ne!(a, c);
}

#[test]
fn outage_frequency_matches_closed_form() {
    let topo = Topology::equidistant(1, 5.0, 3.0, 1e5).unwrap();
    // P(g <= (2^eta - 1) d^alpha / snr) for unit-mean exponential g
    let p = 1.0 - (-(2f64.powf(8.0) - 1.0) * 125.0 / 1e5).exp();
    assert!((outage_probability(8.0, 5.0, &topo) - p).abs() < 1e-12);
    let mut rng = stream(9, Stream::TrainChannel);
    let slots = 1_000_000;
    let mut outages = 0u64;
    for _ in 0..slots {
        let g = Fading::Rayleigh.sample(&mut rng, 1);
        if is_outage(link_capacity(g.sr[0], 5.0, &topo), 8.0) {
            outages += 1;
        }
    }
    let freq = outages as f64 / slots as f64;
    assert!((freq - p).abs() < 0.005, "simulated {freq}, closed form {p}");
}
