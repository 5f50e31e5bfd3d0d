//! Double-DQN training of the AV in attacker-free traffic.

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attacker::episode::run_episode;
use crate::attacker::reward::av_crash_verdict;
use crate::error::Result;
use crate::harness::curve::{mean_std, CurvePoint};
use crate::rl::{act, DualReplay, Learner, ObservationScaling, QNetwork, TrainConfig, Transition};
use crate::scalar::Scalar;
use crate::seeding::derive_seed;
use crate::sim::{env_joint_actions, init_world, safety_check, DiscreteAction, SimConfig, AV_ID};

use super::observation::{av_scaling, observe_av_raw, AV_OBS_DIM};
use super::policy::FrozenAv;
use super::reward::{reward_av, RewardParams};

/// Salt separating the fixed evaluation worlds from the training worlds.
pub const EVAL_SALT: u64 = 0x5EED_E7A1_0000_0001;

#[derive(Clone, Debug)]
pub struct AvTrainSetup {
    pub sim: SimConfig,
    pub reward: RewardParams,
    pub train: TrainConfig,
    pub n_env_cars: usize,
    /// Filter executed actions through the safety check while training.
    pub safety_check: bool,
}

#[derive(Clone, Debug)]
pub struct AvTrainOutput<T: Scalar> {
    /// Online network at the evaluation point with the best mean return, or
    /// the final one when no evaluation ran.
    pub network: QNetwork<T>,
    /// Episode count at which `network` was taken.
    pub selected_episode: usize,
    pub scaling: ObservationScaling,
    pub curve: Vec<CurvePoint>,
    pub updates: u64,
    pub env_steps: u64,
    /// Training episodes per failure code of the AV's crash.
    pub failure_codes: [u64; 8],
}

impl<T: Scalar> AvTrainOutput<T> {
    pub fn frozen(&self, safety_check: bool) -> Result<FrozenAv> {
        FrozenAv::new(self.network.cast(), self.scaling.clone(), safety_check)
    }
}

/// Mean and spread of greedy AV returns over the fixed evaluation worlds.
pub fn evaluate_av(av: &FrozenAv, setup: &AvTrainSetup) -> Result<(f64, f64)> {
    let returns: Result<Vec<f64>> = (0..setup.train.eval_rollouts as u64)
        .into_par_iter()
        .map(|i| {
            let world = init_world(&setup.sim, derive_seed(setup.train.seed ^ EVAL_SALT, i), setup.n_env_cars, false)?;
            let (out, _) = run_episode(world, av, None, &setup.reward, setup.train.steps_per_episode, false);
            Ok(out.cumulative_av_reward)
        })
        .collect();
    Ok(mean_std(&returns?))
}

pub fn train_av<T: Scalar>(setup: &AvTrainSetup) -> Result<AvTrainOutput<T>> {
    let cfg = &setup.train;
    cfg.validate()?;
    setup.sim.validate()?;
    setup.reward.validate()?;
    let scaling = av_scaling(&setup.sim.road);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let net = QNetwork::<T>::random(&cfg.layer_dims(AV_OBS_DIM), &mut rng);
    let mut learner = Learner::new(net, cfg, derive_seed(cfg.seed, u64::MAX));
    let mut replay = DualReplay::<T>::new(cfg.normal_capacity, cfg.crash_capacity, cfg.mix_fraction);
    let eps = cfg.epsilon();
    let mut curve = Vec::with_capacity(cfg.episodes / cfg.eval_every);
    let mut global_step = 0u64;
    let mut failure_codes = [0u64; 8];
    let mut best: Option<(f64, usize, QNetwork<T>)> = None;

    for ep in 0..cfg.episodes {
        let mut world = init_world(&setup.sim, derive_seed(cfg.seed, ep as u64), setup.n_env_cars, false)?;
        let mut s: Vec<T> = scaling.apply(&observe_av_raw(&world, AV_ID));
        let mut episode = Vec::with_capacity(cfg.steps_per_episode);
        let mut failure_code = None;
        for _ in 0..cfg.steps_per_episode {
            let proposed = DiscreteAction::from_index(act(&learner.online, &s, eps.at(global_step), &mut rng)).expect("12 actions");
            let executed = if setup.safety_check {
                safety_check(&world, AV_ID, proposed)
            } else {
                proposed
            };
            let mut joint = env_joint_actions(&world);
            joint.insert(AV_ID, executed);
            let (next, events) = world.step(&joint);
            let verdict = av_crash_verdict(&world, &next, &events);
            let collided = verdict.is_some();
            let r = reward_av::<T>(&world, &next, AV_ID, collided, &setup.reward);
            let s_next: Vec<T> = scaling.apply(&observe_av_raw(&next, AV_ID));
            episode.push(Transition {
                s: std::mem::replace(&mut s, s_next.clone()),
                a: executed.index(),
                r,
                s_next,
                terminal: collided,
            });
            global_step += 1;
            if global_step % cfg.train_every as u64 == 0 {
                learner.train_step(&replay)?;
            }
            world = next;
            if let Some(v) = verdict {
                failure_code = Some(v.failure_code);
                failure_codes[v.failure_code as usize] += 1;
                break;
            }
        }
        replay.push_episode(episode, failure_code);

        if (ep + 1) % cfg.eval_every == 0 {
            let frozen = FrozenAv::new(learner.online.cast(), scaling.clone(), setup.safety_check)?;
            let (mean, std) = evaluate_av(&frozen, setup)?;
            info!(
                "av episode {}: eval return {:.3} ± {:.3}, eps {:.4}, codes {:?}",
                ep + 1,
                mean,
                std,
                eps.at(global_step),
                failure_codes
            );
            curve.push(CurvePoint {
                episode: ep + 1,
                mean,
                std,
            });
            if best.as_ref().map_or(true, |b| mean > b.0) {
                best = Some((mean, ep + 1, learner.online.clone()));
            }
        }
    }
    let updates = learner.updates();
    let (network, selected_episode) = match best {
        Some((_, ep, net)) => (net, ep),
        None => (learner.online, cfg.episodes),
    };
    info!("keeping the network from episode {selected_episode}");
    Ok(AvTrainOutput {
        updates,
        network,
        selected_episode,
        scaling,
        curve,
        env_steps: global_step,
        failure_codes,
    })
}
