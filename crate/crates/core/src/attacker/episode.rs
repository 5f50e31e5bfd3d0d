use serde::{Deserialize, Serialize};

use crate::av::{reward_av, FrozenAv, RewardParams};
use crate::harness::trace::StepRecord;
use crate::sim::{env_joint_actions, WorldState, ATTACKER_ID, AV_ID};

use super::policy::AttackerPolicy;
use super::reward::{lookahead_reward, Termination};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub termination: Termination,
    pub steps: usize,
    pub cumulative_av_reward: f64,
    /// `None` for episodes without an attacker.
    pub cumulative_attacker_reward: Option<f64>,
}

impl EpisodeOutcome {
    pub fn failure_code(&self) -> Option<u8> {
        self.termination.verdict().map(|v| v.failure_code)
    }

    /// The AV's crash partner was the attacker.
    pub fn attacker_involved(&self) -> bool {
        self.termination
            .verdict()
            .is_some_and(|v| v.vehicle_a == ATTACKER_ID || v.vehicle_b == ATTACKER_ID)
    }
}

/// Runs one episode from `world` for at most `steps` steps. The frozen AV,
/// the environment policy and, if given, the attacker act every step. The
/// episode ends on the first termination cause. With `record`, every step
/// is returned for tracing.
pub fn run_episode(
    mut world: WorldState,
    av: &FrozenAv,
    attacker: Option<&dyn AttackerPolicy>,
    reward: &RewardParams,
    steps: usize,
    record: bool,
) -> (EpisodeOutcome, Option<Vec<StepRecord>>) {
    assert!(
        attacker.is_none() || world.get(ATTACKER_ID).is_some(),
        "attacker policy given but the world has no attacker"
    );
    let mut records = record.then(Vec::new);
    let mut cum_av = 0.0;
    let mut cum_att = world.get(ATTACKER_ID).map(|_| 0.0);
    for t in 0..steps {
        let av_action = av.act(&world);
        let mut joint = env_joint_actions(&world);
        joint.insert(AV_ID, av_action);
        if let Some(p) = attacker {
            joint.insert(ATTACKER_ID, p.act(&world, av_action));
        }
        let la = lookahead_reward(&world, &joint);
        let r_av: f64 = reward_av(&world, &la.next, AV_ID, la.verdict.is_some(), reward);
        cum_av += r_av;
        if let (Some(c), Some(r)) = (cum_att.as_mut(), la.attacker_reward) {
            *c += r;
        }
        if let Some(rs) = records.as_mut() {
            rs.push(StepRecord {
                step: la.next.step_index,
                actions: joint,
                vehicles: la.next.vehicles.clone(),
                av_reward: r_av,
                attacker_reward: la.attacker_reward,
            });
        }
        world = la.next;
        if let Some(termination) = la.termination {
            let out = EpisodeOutcome {
                termination,
                steps: t + 1,
                cumulative_av_reward: cum_av,
                cumulative_attacker_reward: cum_att,
            };
            return (out, records);
        }
    }
    let out = EpisodeOutcome {
        termination: Termination::Timeout,
        steps,
        cumulative_av_reward: cum_av,
        cumulative_attacker_reward: cum_att,
    };
    (out, records)
}
