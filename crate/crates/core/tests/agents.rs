use bufrelay::agents::{
    build_targets, epsilon, generate_experiences, sample_batch, train, Algorithm, Assist, Selection, TrainConfig, Trainer,
};
use bufrelay::channel::{Fading, Topology};
use bufrelay::env::{EnvConfig, InvalidActionMode, RelayEnv};
use bufrelay::nn::Network;
use bufrelay::rng::{stream, Stream};

fn env_cfg(relays: usize, buffer: usize, fading: Fading) -> EnvConfig {
    EnvConfig {
        topology: Topology::equidistant(relays, 5.0, 3.0, 1e5).unwrap(),
        fading,
        buffer_size: buffer,
        eta: 8.0,
        target_delay: 6,
        invalid_action_mode: InvalidActionMode::Masked,
    }
}

fn small_train(algorithm: Algorithm, assist: Assist, rounds: usize) -> TrainConfig {
    TrainConfig {
        generate: 60,
        batch: 16,
        sync_every: 5,
        rounds,
        hidden: vec![16],
        eval_slots: 200,
        algorithm,
        assist,
        ..TrainConfig::default()
    }
}

#[test]
fn generation_leaves_the_network_untouched() {
    let cfg = env_cfg(3, 2, Fading::Rayleigh);
    let net = Network::new(&[15, 8, 7], &mut stream(1, Stream::Init)).unwrap();
    let before = net.clone();
    let mut env = RelayEnv::new(cfg, stream(1, Stream::TrainChannel)).unwrap();
    let exps = generate_experiences(&mut env, &net, 0.3, 200, Algorithm::Sarsa, Selection::Masked, &mut stream(1, Stream::Agent)).unwrap();
    assert_eq!(net, before);
    assert_eq!(exps.len(), 200);
}

#[test]
fn sarsa_next_action_is_the_action_taken_next() {
    let cfg = env_cfg(3, 2, Fading::Rayleigh);
    let net = Network::new(&[15, 8, 7], &mut stream(2, Stream::Init)).unwrap();
    let mut env = RelayEnv::new(cfg, stream(2, Stream::TrainChannel)).unwrap();
    let exps = generate_experiences(&mut env, &net, 0.5, 300, Algorithm::Sarsa, Selection::Masked, &mut stream(2, Stream::Agent)).unwrap();
    for pair in exps.windows(2) {
        assert_eq!(pair[0].next_action, Some(pair[1].action));
        assert_eq!(pair[0].next_state, pair[1].state);
        assert_eq!(pair[0].next_mask, pair[1].mask);
    }
    for e in &exps {
        assert!(e.mask.is_valid(e.action));
    }
}

#[test]
fn decision_assist_masks_are_the_recorded_invalid_sets() {
    let cfg = env_cfg(3, 2, Fading::Rayleigh);
    let net = Network::new(&[15, 8, 7], &mut stream(3, Stream::Init)).unwrap();
    let mut env = RelayEnv::new(cfg, stream(3, Stream::TrainChannel)).unwrap();
    let exps = generate_experiences(&mut env, &net, 0.5, 100, Algorithm::QLearning, Selection::Masked, &mut stream(3, Stream::Agent)).unwrap();
    let batch: Vec<_> = exps.iter().collect();
    let specs = build_targets(&batch, &net, 0.9, Algorithm::QLearning, Assist::Decision).unwrap();
    for (spec, e) in specs.iter().zip(&exps) {
        assert_eq!(spec.zero_mask, e.mask.invalid().collect::<Vec<_>>());
    }
    let specs = build_targets(&batch, &net, 0.9, Algorithm::QLearning, Assist::Punishment).unwrap();
    assert!(specs.iter().all(|s| s.zero_mask.is_empty()));
}

#[test]
fn target_network_only_changes_at_syncs() {
    let cfg = env_cfg(2, 2, Fading::Rayleigh);
    let tc = small_train(Algorithm::QLearning, Assist::Decision, 1);
    let mut trainer = Trainer::new(&cfg, &tc).unwrap();
    let frozen = trainer.target().clone();
    for _ in 0..10 {
        trainer.iterate().unwrap();
        assert_eq!(trainer.target(), &frozen);
    }
    assert_ne!(trainer.prediction(), &frozen);
    trainer.sync_target();
    assert_eq!(trainer.target(), trainer.prediction());
}

#[test]
fn zero_rounds_return_the_initial_network() {
    let cfg = env_cfg(2, 2, Fading::Rayleigh);
    let tc = small_train(Algorithm::Sarsa, Assist::Decision, 0);
    let (net, metrics) = train(&cfg, &tc, |_| Ok(())).unwrap();
    assert!(metrics.is_empty());
    let fresh = Network::new(&tc.layer_sizes(2), &mut stream(tc.seed, Stream::Init)).unwrap();
    assert_eq!(net, fresh);
}

#[test]
fn epsilon_log_follows_the_schedule() {
    let cfg = env_cfg(2, 2, Fading::Rayleigh);
    let mut tc = small_train(Algorithm::QLearning, Assist::Punishment, 8);
    tc.epsilon_decay = 0.9;
    let (_, metrics) = train(&cfg, &tc, |_| Ok(())).unwrap();
    for pair in metrics.windows(2) {
        assert!(pair[1].epsilon <= pair[0].epsilon);
    }
    for m in &metrics {
        assert_eq!(m.epsilon, epsilon(m.iteration, 0.9, tc.epsilon_min));
        assert!(m.epsilon >= tc.epsilon_min && m.epsilon <= 1.0);
        assert!((0.0..=0.5).contains(&m.throughput));
        assert!(m.seconds.is_none());
    }
    assert_eq!(metrics.last().unwrap().iteration, 40);
}

#[test]
fn same_seed_gives_bit_identical_metrics() {
    let cfg = env_cfg(3, 2, Fading::Rayleigh);
    for (alg, assist) in [(Algorithm::Sarsa, Assist::Decision), (Algorithm::QLearning, Assist::Punishment)] {
        let tc = small_train(alg, assist, 3);
        let (net_a, a) = train(&cfg, &tc, |_| Ok(())).unwrap();
        let (net_b, b) = train(&cfg, &tc, |_| Ok(())).unwrap();
        assert_eq!(a, b);
        assert_eq!(net_a, net_b);
        let (_, c) = train(&cfg, &TrainConfig { seed: 99, ..tc }, |_| Ok(())).unwrap();
        assert_ne!(a, c);
    }
}

#[test]
fn replay_sampling_is_uniform_without_replacement() {
    let cfg = env_cfg(2, 2, Fading::Rayleigh);
    let net = Network::new(&[10, 4, 5], &mut stream(4, Stream::Init)).unwrap();
    let mut env = RelayEnv::new(cfg, stream(4, Stream::TrainChannel)).unwrap();
    let n = 20;
    let exps = generate_experiences(&mut env, &net, 1.0, n, Algorithm::QLearning, Selection::Masked, &mut stream(4, Stream::Agent)).unwrap();
    let mut rng = stream(5, Stream::Agent);
    let draws = 20_000;
    let size = 5;
    let mut counts = vec![0u64; n];
    for _ in 0..draws {
        let batch = sample_batch(&exps, size, &mut rng).unwrap();
        let mut idx: Vec<usize> = batch.iter().map(|e| exps.iter().position(|x| std::ptr::eq(x, *e)).unwrap()).collect();
        idx.sort_unstable();
        idx.dedup();
        assert_eq!(idx.len(), size);
        for i in idx {
            counts[i] += 1;
        }
    }
    let expected = (draws * size) as f64 / n as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 19 degrees of freedom, upper 0.1% point 43.82
    assert!(chi2 < 43.82, "chi-square {chi2}");
    assert!(sample_batch(&exps, n + 1, &mut rng).is_err());
}

#[test]
fn toy_decision_assist_drives_invalid_q_to_zero() {
    let cfg = env_cfg(1, 1, Fading::Fixed(1.0));
    let tc = TrainConfig { hidden: vec![64, 64], rounds: 30, eval_slots: 1000, ..TrainConfig::default() };
    let (net, metrics) = train(&cfg, &tc, |_| Ok(())).unwrap();
    let last = metrics.last().unwrap();
    assert!(last.mean_abs_invalid_q < 0.05, "mean |Q| over invalid actions {}", last.mean_abs_invalid_q);
    // empty buffer with both links up: S->R is the only valid relay action
    let q = net.forward(&[0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
    assert!(q[0].max(q[1]) > 1.0, "{q:?}");
}
