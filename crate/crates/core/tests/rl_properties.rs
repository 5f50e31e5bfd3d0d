//! Property tests of the Q-network, the double-DQN target, replay routing
//! and training reproducibility.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use highway_core::av::{train_av, AvTrainSetup, RewardParams};
use highway_core::rl::{ddqn_target, Activations, DualReplay, Learner, OptimizerKind, QNetwork, TrainConfig, Transition};
use highway_core::sim::SimConfig;

/// Independent forward pass over the flat parameter layout, returning the
/// output and the smallest |pre-activation| over hidden units.
fn reference_forward(net: &QNetwork<f64>, s: &[f64]) -> (Vec<f64>, f64) {
    let dims = net.layer_dims();
    let p = net.params();
    let mut x = s.to_vec();
    let mut off = 0;
    let mut min_pre = f64::INFINITY;
    for l in 0..dims.len() - 1 {
        let (n_in, n_out) = (dims[l], dims[l + 1]);
        let w = &p[off..off + n_in * n_out];
        let b = &p[off + n_in * n_out..off + n_in * n_out + n_out];
        let mut y = vec![0.0; n_out];
        for j in 0..n_out {
            let z: f64 = b[j] + (0..n_in).map(|i| w[j * n_in + i] * x[i]).sum::<f64>();
            if l + 2 < dims.len() {
                min_pre = min_pre.min(z.abs());
                y[j] = z.max(0.0);
            } else {
                y[j] = z;
            }
        }
        off += n_in * n_out + n_out;
        x = y;
    }
    (x, min_pre)
}

fn loss_at(net: &QNetwork<f64>, s: &[f64], a: usize, target: f64) -> f64 {
    let q = reference_forward(net, s).0[a];
    0.5 * (q - target) * (q - target)
}

fn random_instance(seed: u64) -> (QNetwork<f64>, Vec<f64>, usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = rng.gen_range(1..8);
    let mut dims = vec![input];
    for _ in 0..rng.gen_range(0..3) {
        dims.push(rng.gen_range(1..10));
    }
    dims.push(12);
    let mut net = QNetwork::<f64>::random(&dims, &mut rng);
    for p in net.params_mut() {
        *p += rng.gen_range(-0.1..0.1);
    }
    let s: Vec<f64> = (0..input).map(|_| rng.gen_range(-2.0..2.0)).collect();
    (net, s, rng.gen_range(0..12), rng.gen_range(-3.0..3.0))
}

fn transition(rng: &mut ChaCha8Rng, dim: usize) -> Transition<f64> {
    Transition {
        s: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        a: rng.gen_range(0..12),
        r: rng.gen_range(-2.0..1.0),
        s_next: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        terminal: rng.gen_bool(0.1),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn forward_matches_reference(seed in any::<u64>()) {
        let (net, s, _, _) = random_instance(seed);
        let (want, _) = reference_forward(&net, &s);
        let got = net.forward(&s);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0));
        }
    }

    #[test]
    fn backprop_matches_central_differences(seed in any::<u64>()) {
        let (net, s, a, target) = random_instance(seed);
        let (_, min_pre) = reference_forward(&net, &s);
        // a step of h must not cross a rectifier kink
        prop_assume!(min_pre > 1e-3);
        let mut grad = vec![0.0; net.params().len()];
        let loss = net.backward(&s, a, target, &mut grad, &mut Activations::default());
        prop_assert!((loss - loss_at(&net, &s, a, target)).abs() <= 1e-12 * loss.max(1.0));
        let h = 1e-5;
        for i in 0..grad.len() {
            let mut plus = net.clone();
            plus.params_mut()[i] += h;
            let mut minus = net.clone();
            minus.params_mut()[i] -= h;
            let fd = (loss_at(&plus, &s, a, target) - loss_at(&minus, &s, a, target)) / (2.0 * h);
            let scale = grad[i].abs().max(fd.abs()).max(1e-4);
            prop_assert!((grad[i] - fd).abs() / scale < 1e-5, "param {}: {} vs {}", i, grad[i], fd);
        }
    }

    #[test]
    fn ddqn_target_with_same_nets_is_dqn_target(seed in any::<u64>(), gamma in 0.0f64..0.99) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = QNetwork::<f64>::random(&[6, 10, 12], &mut rng);
        let tr = transition(&mut rng, 6);
        let got = ddqn_target(&net, &net, &tr, gamma);
        let best = net.forward(&tr.s_next).into_iter().fold(f64::NEG_INFINITY, f64::max);
        let want = if tr.terminal { tr.r } else { tr.r + gamma * best };
        prop_assert_eq!(got, want);
    }

    #[test]
    fn episodes_route_by_failure_code(lens in prop::collection::vec(1usize..20, 1..20), codes in prop::collection::vec(prop::option::of(0u8..8), 20)) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut replay = DualReplay::<f64>::new(1000, 1000, 0.25);
        let (mut normal, mut crash) = (0, 0);
        for (len, code) in lens.iter().zip(&codes) {
            let ep: Vec<_> = (0..*len).map(|_| transition(&mut rng, 2)).collect();
            replay.push_episode(ep, *code);
            if matches!(code, Some(2..=7)) {
                crash += len;
            } else {
                normal += len;
            }
        }
        prop_assert_eq!(replay.normal.len(), normal);
        prop_assert_eq!(replay.at_fault_crash.len(), crash);
    }
}

#[test]
fn parameters_stay_finite_over_long_training() {
    for optimizer in [OptimizerKind::Sgd, OptimizerKind::Adam] {
        let cfg = TrainConfig {
            optimizer,
            learning_rate: 1e-3,
            batch_size: 8,
            target_sync: 500,
            ..TrainConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = QNetwork::<f64>::random(&[4, 8, 12], &mut rng);
        let mut learner = Learner::new(net, &cfg, 12);
        let mut replay = DualReplay::<f64>::new(5000, 500, 0.25);
        for k in 0..100_000u64 {
            if k % 50 == 0 {
                let ep: Vec<_> = (0..50).map(|_| transition(&mut rng, 4)).collect();
                replay.push_episode(ep, if k % 1000 == 0 { Some(4) } else { None });
            }
            learner.train_step(&replay).unwrap();
        }
        assert!(learner.online.all_finite() && learner.target.all_finite());
        assert!(learner.updates() > 99_000);
    }
}

#[test]
fn av_training_is_reproducible() {
    let setup = AvTrainSetup {
        sim: SimConfig::default(),
        reward: RewardParams::default(),
        train: TrainConfig {
            episodes: 6,
            eval_every: 3,
            eval_rollouts: 2,
            hidden: vec![16],
            batch_size: 8,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            seed: 5,
            ..TrainConfig::default()
        },
        n_env_cars: 10,
        safety_check: true,
    };
    let a = train_av::<f64>(&setup).unwrap();
    let b = train_av::<f64>(&setup).unwrap();
    assert!(a.network.params().iter().zip(b.network.params()).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(a.curve, b.curve);
    let f32_run = train_av::<f32>(&setup).unwrap();
    assert!(f32_run.network.all_finite());
}
