mod common;

use bufrelay::nn::{adam_step, Activation, AdamState, Layer, Network, TargetSpec};
use common::{adam_reference_trajectory, constant_gradients, random_batch, random_net, reference_forward, reference_loss, worst_gradient_error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn forward_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let net = random_net(&mut rng);
        let x: Vec<f64> = (0..net.input_dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let got = net.forward(&x).unwrap();
        let want = reference_forward(&net, &x);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12, "{g} vs {w}");
        }
    }
}

#[test]
fn loss_matches_reference_with_and_without_masks() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for masks in [false, true] {
        for _ in 0..30 {
            let net = random_net(&mut rng);
            let batch = random_batch(&net, &mut rng, masks);
            let (loss, _) = net.loss_and_gradient(&batch).unwrap();
            let want = reference_loss(&net, &batch);
            assert!((loss - want).abs() <= 1e-12 * want.max(1.0), "{loss} vs {want}");
        }
    }
}

#[test]
fn gradients_match_central_differences() {
    let worst = worst_gradient_error(13, 20);
    assert!(worst < 1e-5, "max relative error {worst}");
}

#[test]
fn small_adam_step_decreases_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let mut net = random_net(&mut rng);
        let batch = random_batch(&net, &mut rng, true);
        let (before, grads) = net.loss_and_gradient(&batch).unwrap();
        if grads.max_abs() == 0.0 {
            continue;
        }
        let mut opt = AdamState::new(&net);
        adam_step(&mut net, &grads, &mut opt, 1e-4).unwrap();
        let (after, _) = net.loss_and_gradient(&batch).unwrap();
        assert!(after < before, "{after} >= {before}");
    }
}

#[test]
fn first_adam_step_moves_every_parameter_by_lr() {
    for (g, lr) in [(1.0, 0.01), (-3.5, 0.01), (1e-3, 0.001), (250.0, 0.05)] {
        let mut net = Network::zeros(&[3, 4, 2]).unwrap();
        let before = net.clone();
        let grads = constant_gradients(&before, g);
        let mut opt = AdamState::new(&net);
        adam_step(&mut net, &grads, &mut opt, lr).unwrap();
        // m_hat = g and v_hat = g^2 after bias correction
        let want = -lr * g / (g.abs() + 1e-8);
        for (l, b) in net.layers().iter().zip(before.layers()) {
            for (p, q) in l.weights.iter().chain(&l.bias).zip(b.weights.iter().chain(&b.bias)) {
                assert!((p - q - want).abs() < 1e-12 * lr, "moved {} expected {want}", p - q);
                assert!(((p - q).abs() - lr).abs() <= lr * (1e-8 / g.abs() + 1e-12));
            }
        }
    }
}

#[test]
fn adam_trajectory_on_scalar_quadratic() {
    // Single bias parameter b with loss (b - y)^2; the weight sees input 0 and stays put.
    let (y, lr, b0) = (3.0, 0.05, -1.0);
    let layer = Layer::new(1, 1, vec![0.7], vec![b0], Activation::Identity).unwrap();
    let mut net = Network::from_layers(vec![layer]).unwrap();
    let mut opt = AdamState::new(&net);
    let spec = [TargetSpec { state: vec![0.0], action: 0, target: y, zero_mask: vec![] }];

    for (t, want) in adam_reference_trajectory(b0, y, lr, 100).into_iter().enumerate() {
        let (_, grads) = net.loss_and_gradient(&spec).unwrap();
        adam_step(&mut net, &grads, &mut opt, lr).unwrap();
        let got = net.layers()[0].bias[0];
        assert!((got - want).abs() < 1e-10, "step {}: {got} vs {want}", t + 1);
        assert_eq!(net.layers()[0].weights[0], 0.7);
    }
    assert_eq!(opt.step_count(), 100);
}

#[test]
fn mask_terms_contribute_their_squared_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let net = random_net(&mut rng);
    let state: Vec<f64> = (0..net.input_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let q = reference_forward(&net, &state);
    let others: Vec<usize> = (1..net.output_dim()).collect();
    let plain = TargetSpec { state: state.clone(), action: 0, target: q[0], zero_mask: vec![] };
    let masked = TargetSpec { zero_mask: others.clone(), ..plain.clone() };
    assert!(net.loss_and_gradient(&[plain]).unwrap().0.abs() < 1e-24);
    let want: f64 = others.iter().map(|&a| q[a] * q[a]).sum();
    assert!((net.loss_and_gradient(&[masked]).unwrap().0 - want).abs() < 1e-12);
}
