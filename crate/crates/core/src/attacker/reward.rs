//! Attacker reward from simulating the joint action one step ahead.

use serde::{Deserialize, Serialize};

use crate::judge::{judge, Verdict};
use crate::sim::{CollisionEvent, JointActions, WorldState, ATTACKER_ID, AV_ID};

pub const TIME_COST: f64 = -0.05;
pub const ATTACKER_CRASH: f64 = -1.0;
pub const AV_ESCAPED: f64 = -1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "cause", content = "verdict")]
pub enum Termination {
    AvCrashed(Verdict),
    AttackerCrashed,
    AvLeftNeighborhood,
    Timeout,
}

impl Termination {
    pub fn verdict(&self) -> Option<&Verdict> {
        match self {
            Termination::AvCrashed(v) => Some(v),
            _ => None,
        }
    }
}

/// Result of stepping a cloned world under a joint action.
#[derive(Clone, Debug)]
pub struct Lookahead {
    pub next: WorldState,
    pub events: Vec<CollisionEvent>,
    /// `None` when the world has no attacker.
    pub attacker_reward: Option<f64>,
    /// Verdict on the AV's crash, if it crashed.
    pub verdict: Option<Verdict>,
    /// Set when this step ends the episode.
    pub termination: Option<Termination>,
}

/// Verdict on the AV's crash in `next`, if any. With several partners the
/// lowest id is adjudicated.
pub fn av_crash_verdict(world: &WorldState, next: &WorldState, events: &[CollisionEvent]) -> Option<Verdict> {
    let partner = events.iter().filter_map(|e| e.partner_of(AV_ID)).min()?;
    Some(judge(world, next, AV_ID, partner, AV_ID))
}

/// Steps a copy of `world` under `joint` and scores it for the attacker.
/// `world` itself is untouched.
pub fn lookahead_reward(world: &WorldState, joint: &JointActions) -> Lookahead {
    let (next, events) = world.step(joint);
    let verdict = av_crash_verdict(world, &next, &events);
    let has_attacker = world.get(ATTACKER_ID).is_some();
    if !has_attacker {
        let termination = verdict.clone().map(Termination::AvCrashed);
        return Lookahead {
            next,
            events,
            attacker_reward: None,
            verdict,
            termination,
        };
    }
    let attacker_crashed = events.iter().any(|e| e.involves(ATTACKER_ID));
    let (reward, termination) = match &verdict {
        Some(v) => {
            let r = if !v.av_at_fault && attacker_crashed {
                ATTACKER_CRASH
            } else {
                v.attacker_reward
            };
            (r + TIME_COST, Some(Termination::AvCrashed(v.clone())))
        }
        None if attacker_crashed => (ATTACKER_CRASH + TIME_COST, Some(Termination::AttackerCrashed)),
        None if !next.nearest_neighbors(ATTACKER_ID).contains(&Some(AV_ID)) => {
            (AV_ESCAPED + TIME_COST, Some(Termination::AvLeftNeighborhood))
        }
        None => (TIME_COST, None),
    };
    Lookahead {
        next,
        events,
        attacker_reward: Some(reward),
        verdict,
        termination,
    }
}

/// The closed set of per-step attacker rewards.
pub fn admissible_rewards() -> Vec<f64> {
    let mut out = vec![TIME_COST, ATTACKER_CRASH + TIME_COST];
    for v in [-1.0, -0.8, -0.5, -0.3, 0.3, 0.5, 0.8, 1.0] {
        out.push(v + TIME_COST);
    }
    out
}

pub fn is_admissible_reward(r: f64) -> bool {
    admissible_rewards().iter().any(|a| (a - r).abs() < 1e-12)
}
