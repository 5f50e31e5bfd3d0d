//! Double-DQN training of the attacker against a frozen AV.

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::av::train::EVAL_SALT;
use crate::av::{FrozenAv, RewardParams};
use crate::error::Result;
use crate::harness::curve::{aggregate, mean_std, CurvePoint};
use crate::rl::{act, DualReplay, Learner, ObservationScaling, QNetwork, TrainConfig, Transition};
use crate::scalar::Scalar;
use crate::seeding::derive_seed;
use crate::sim::{env_joint_actions, init_world, DiscreteAction, SimConfig, ATTACKER_ID, AV_ID};

use super::episode::run_episode;
use super::observation::{attacker_scaling, observe_attacker_raw, ATTACKER_OBS_DIM};
use super::policy::NetworkAttacker;
use super::reward::lookahead_reward;

#[derive(Clone, Debug)]
pub struct AttackerTrainSetup {
    pub sim: SimConfig,
    pub reward: RewardParams,
    pub train: TrainConfig,
    pub n_env_cars: usize,
}

#[derive(Clone, Debug)]
pub struct AttackerTrainOutput<T: Scalar> {
    pub network: QNetwork<T>,
    pub scaling: ObservationScaling,
    pub curve: Vec<CurvePoint>,
    pub updates: u64,
    pub env_steps: u64,
    /// Training episodes per failure code of the AV's crash.
    pub failure_codes: [u64; 8],
}

impl<T: Scalar> AttackerTrainOutput<T> {
    pub fn policy(&self) -> Result<NetworkAttacker> {
        NetworkAttacker::new(self.network.cast(), self.scaling.clone())
    }
}

/// Mean and spread of greedy attacker returns over the fixed evaluation
/// worlds.
pub fn evaluate_attacker(av: &FrozenAv, attacker: &NetworkAttacker, setup: &AttackerTrainSetup) -> Result<(f64, f64)> {
    let returns: Result<Vec<f64>> = (0..setup.train.eval_rollouts as u64)
        .into_par_iter()
        .map(|i| {
            let world = init_world(&setup.sim, derive_seed(setup.train.seed ^ EVAL_SALT, i), setup.n_env_cars, true)?;
            let (out, _) = run_episode(world, av, Some(attacker), &setup.reward, setup.train.steps_per_episode, false);
            Ok(out.cumulative_attacker_reward.unwrap_or(0.0))
        })
        .collect();
    Ok(mean_std(&returns?))
}

pub fn train_attacker<T: Scalar>(setup: &AttackerTrainSetup, av: &FrozenAv) -> Result<AttackerTrainOutput<T>> {
    let cfg = &setup.train;
    cfg.validate()?;
    setup.sim.validate()?;
    let scaling = attacker_scaling(&setup.sim.road);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let net = QNetwork::<T>::random(&cfg.layer_dims(ATTACKER_OBS_DIM), &mut rng);
    let mut learner = Learner::new(net, cfg, derive_seed(cfg.seed, u64::MAX));
    let mut replay = DualReplay::<T>::new(cfg.normal_capacity, cfg.crash_capacity, cfg.mix_fraction);
    let eps = cfg.epsilon();
    let mut curve = Vec::with_capacity(cfg.episodes / cfg.eval_every);
    let mut global_step = 0u64;
    let mut failure_codes = [0u64; 8];

    for ep in 0..cfg.episodes {
        let mut world = init_world(&setup.sim, derive_seed(cfg.seed, ep as u64), setup.n_env_cars, true)?;
        let mut av_action = av.act(&world);
        let mut s: Vec<T> = scaling.apply(&observe_attacker_raw(&world, av_action));
        let mut episode = Vec::with_capacity(cfg.steps_per_episode);
        let mut failure_code = None;
        for _ in 0..cfg.steps_per_episode {
            let a = act(&learner.online, &s, eps.at(global_step), &mut rng);
            let mut joint = env_joint_actions(&world);
            joint.insert(AV_ID, av_action);
            joint.insert(ATTACKER_ID, DiscreteAction::from_index(a).expect("12 actions"));
            let la = lookahead_reward(&world, &joint);
            let r = la.attacker_reward.expect("world has an attacker");
            let terminal = la.termination.is_some();
            world = la.next;
            av_action = av.act(&world);
            let s_next: Vec<T> = scaling.apply(&observe_attacker_raw(&world, av_action));
            episode.push(Transition {
                s: std::mem::replace(&mut s, s_next.clone()),
                a,
                r: T::lit(r),
                s_next,
                terminal,
            });
            global_step += 1;
            if global_step % cfg.train_every as u64 == 0 {
                learner.train_step(&replay)?;
            }
            if terminal {
                if let Some(v) = la.verdict {
                    failure_code = Some(v.failure_code);
                    failure_codes[v.failure_code as usize] += 1;
                }
                break;
            }
        }
        replay.push_episode(episode, failure_code);

        if (ep + 1) % cfg.eval_every == 0 {
            let policy = NetworkAttacker::new(learner.online.cast(), scaling.clone())?;
            let (mean, std) = evaluate_attacker(av, &policy, setup)?;
            info!(
                "attacker seed {} episode {}: eval return {:.3} ± {:.3}, eps {:.4}, codes {:?}",
                cfg.seed,
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
        }
    }
    Ok(AttackerTrainOutput {
        updates: learner.updates(),
        network: learner.online,
        scaling,
        curve,
        env_steps: global_step,
        failure_codes,
    })
}

/// Independent trainings with seeds `seed, seed + 1, ...`, run in
/// parallel, plus their aggregate curve.
pub fn train_attacker_repeats<T: Scalar>(
    setup: &AttackerTrainSetup,
    av: &FrozenAv,
    repeats: usize,
) -> Result<(Vec<AttackerTrainOutput<T>>, Vec<CurvePoint>)> {
    let runs: Result<Vec<AttackerTrainOutput<T>>> = (0..repeats as u64)
        .into_par_iter()
        .map(|r| {
            let mut s = setup.clone();
            s.train.seed = setup.train.seed.wrapping_add(r);
            train_attacker(&s, av)
        })
        .collect();
    let runs = runs?;
    let curves: Vec<Vec<CurvePoint>> = runs.iter().map(|r| r.curve.clone()).collect();
    let agg = aggregate(&curves)?;
    Ok((runs, agg))
}
