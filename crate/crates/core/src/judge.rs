//! Crash adjudication: who is responsible, whether that car made the
//! expected last-moment evasive move, and the resulting failure code and
//! attacker reward.
//!
//! Failure codes:
//! 0/1 the other car is responsible (without/with the evasive move),
//! 2/3 the AV hits the car ahead (without/with hard braking),
//! 4/5 the AV's lane change causes the crash (without/with abandoning it),
//! 6/7 the AV, coming from the left, collides with a car converging from
//! the right onto the same lane (without/with abandoning).

use serde::{Deserialize, Serialize};

use crate::sim::vehicle::{marker_index, on_marker};
use crate::sim::{DiscreteAction, Lateral, Longitudinal, VehicleId, VehicleState, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreCrashSituation {
    NoneOnMarker,
    OneOnMarkerCrashOriginalLane,
    OneOnMarkerCrashTargetLane,
    BothOnSameMarker,
    BothOnDifferentMarkers,
}

/// Rows of the reward table that share responsibility and reward rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    RearEnd,
    CutIn,
    Converging,
}

impl PreCrashSituation {
    pub const ALL: [PreCrashSituation; 5] = [
        PreCrashSituation::NoneOnMarker,
        PreCrashSituation::OneOnMarkerCrashOriginalLane,
        PreCrashSituation::OneOnMarkerCrashTargetLane,
        PreCrashSituation::BothOnSameMarker,
        PreCrashSituation::BothOnDifferentMarkers,
    ];

    pub fn family(self) -> Family {
        match self {
            PreCrashSituation::NoneOnMarker
            | PreCrashSituation::OneOnMarkerCrashOriginalLane
            | PreCrashSituation::BothOnSameMarker => Family::RearEnd,
            PreCrashSituation::OneOnMarkerCrashTargetLane => Family::CutIn,
            PreCrashSituation::BothOnDifferentMarkers => Family::Converging,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvasiveMove {
    HardBrake,
    AbandonLaneChange,
}

impl Family {
    pub fn expected_move(self) -> EvasiveMove {
        match self {
            Family::RearEnd => EvasiveMove::HardBrake,
            Family::CutIn | Family::Converging => EvasiveMove::AbandonLaneChange,
        }
    }

    /// `(failure_code, attacker_reward)` cell for this family.
    pub fn cell(self, av_at_fault: bool, mee_used: bool) -> (u8, f64) {
        let (big, small) = match self {
            Family::RearEnd | Family::CutIn => (1.0, 0.5),
            Family::Converging => (0.8, 0.3),
        };
        let base = match self {
            Family::RearEnd => 2,
            Family::CutIn => 4,
            Family::Converging => 6,
        };
        match (av_at_fault, mee_used) {
            (false, false) => (0, -big),
            (false, true) => (1, -small),
            (true, false) => (base, big),
            (true, true) => (base + 1, small),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub situation: PreCrashSituation,
    pub vehicle_a: VehicleId,
    pub vehicle_b: VehicleId,
    pub responsible: VehicleId,
    /// Responsibility is shared; `responsible` is the principal party.
    pub principal_shared: bool,
    pub av_involved: bool,
    pub av_at_fault: bool,
    pub mee_expected: EvasiveMove,
    pub mee_used: bool,
    pub failure_code: u8,
    /// Zero for crashes that do not involve the AV.
    pub attacker_reward: f64,
}

fn ordered<'a>(world: &'a WorldState, a: VehicleId, b: VehicleId) -> (&'a VehicleState, &'a VehicleState) {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let va = world.get(lo).expect("crash partner present in pre-crash state");
    let vb = world.get(hi).expect("crash partner present in pre-crash state");
    (va, vb)
}

pub fn classify_situation(s_pre: &WorldState, a: VehicleId, b: VehicleId) -> PreCrashSituation {
    let road = s_pre.road();
    let (va, vb) = ordered(s_pre, a, b);
    match (on_marker(va, road), on_marker(vb, road)) {
        (false, false) => PreCrashSituation::NoneOnMarker,
        (true, true) => {
            if marker_index(va.y, road) == marker_index(vb.y, road) {
                PreCrashSituation::BothOnSameMarker
            } else {
                PreCrashSituation::BothOnDifferentMarkers
            }
        }
        (ma, _) => {
            let (m, o) = if ma { (va, vb) } else { (vb, va) };
            let target = m.target_lane();
            if target != m.lane && road.lane_of(o.y) == target {
                PreCrashSituation::OneOnMarkerCrashTargetLane
            } else {
                PreCrashSituation::OneOnMarkerCrashOriginalLane
            }
        }
    }
}

/// Responsible car and whether responsibility is shared with the other.
pub fn responsible_party(situation: PreCrashSituation, s_pre: &WorldState, a: VehicleId, b: VehicleId) -> (VehicleId, bool) {
    let road = s_pre.road();
    let (va, vb) = ordered(s_pre, a, b);
    match situation.family() {
        Family::RearEnd => {
            // ties go to the lower id, which is `va`
            let rear = if vb.x < va.x { vb } else { va };
            (rear.id, false)
        }
        Family::CutIn => {
            let m = if on_marker(va, road) { va } else { vb };
            (m.id, false)
        }
        Family::Converging => {
            let left = if vb.y > va.y { vb } else { va };
            (left.id, true)
        }
    }
}

/// Whether `action`, taken by the responsible car from its pre-crash state
/// `pre`, is the expected evasive move for `situation`.
pub fn mee_check(situation: PreCrashSituation, pre: &VehicleState, action: DiscreteAction) -> bool {
    match situation.family().expected_move() {
        EvasiveMove::HardBrake => action.ax == Longitudinal::HardBrake,
        EvasiveMove::AbandonLaneChange => match pre.phase.direction() {
            Some(side) => action.ay != side.lateral(),
            None => action.ay == Lateral::Keep,
        },
    }
}

/// Adjudicates a collision between `a` and `b` that appears in `s_crash`,
/// one step after `s_pre`. The responsible car's move is read from the
/// action it executed on that step, recorded in `s_crash`.
pub fn judge(s_pre: &WorldState, s_crash: &WorldState, a: VehicleId, b: VehicleId, av: VehicleId) -> Verdict {
    assert_ne!(a, b, "a vehicle cannot collide with itself");
    let situation = classify_situation(s_pre, a, b);
    let (responsible, principal_shared) = responsible_party(situation, s_pre, a, b);
    let pre = s_pre.get(responsible).expect("responsible car present");
    let mee_used = s_crash
        .get(responsible)
        .and_then(|v| v.last_action)
        .is_some_and(|act| mee_check(situation, pre, act));
    let av_involved = a == av || b == av;
    let av_at_fault = av_involved && responsible == av;
    let family = situation.family();
    let (failure_code, reward) = family.cell(av_at_fault, mee_used);
    Verdict {
        situation,
        vehicle_a: a.min(b),
        vehicle_b: a.max(b),
        responsible,
        principal_shared,
        av_involved,
        av_at_fault,
        mee_expected: family.expected_move(),
        mee_used,
        failure_code,
        attacker_reward: if av_involved { reward } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::vehicle::{LateralPhase, Role};
    use crate::sim::world::{JointActions, AV_ID};
    use crate::sim::SimConfig;

    fn car(id: u32, x: f64, lane: usize, vx: f64) -> VehicleState {
        let role = if id == 0 { Role::Av } else { Role::Env };
        VehicleState::new(VehicleId(id), role, x, lane, vx, &SimConfig::default().road)
    }

    fn changing(mut v: VehicleState, phase: LateralPhase) -> VehicleState {
        v.phase = phase;
        v.y = crate::sim::world::lateral_position(v.lane, phase, 3, &SimConfig::default().road);
        v
    }

    fn run(vs: Vec<VehicleState>, acts: &[(u32, DiscreteAction)]) -> (WorldState, WorldState, Vec<crate::sim::CollisionEvent>) {
        let w = WorldState::from_vehicles(SimConfig::default(), 1, vs);
        let actions: JointActions = acts.iter().map(|(i, a)| (VehicleId(*i), *a)).collect();
        let (next, ev) = w.step(&actions);
        (w, next, ev)
    }

    const MAINTAIN: DiscreteAction = DiscreteAction::IDLE;

    #[test]
    fn reward_table_cells() {
        let expect = [
            (Family::RearEnd, [(0, -1.0), (1, -0.5), (2, 1.0), (3, 0.5)]),
            (Family::CutIn, [(0, -1.0), (1, -0.5), (4, 1.0), (5, 0.5)]),
            (Family::Converging, [(0, -0.8), (1, -0.3), (6, 0.8), (7, 0.3)]),
        ];
        for (fam, cells) in expect {
            assert_eq!(fam.cell(false, false), cells[0]);
            assert_eq!(fam.cell(false, true), cells[1]);
            assert_eq!(fam.cell(true, false), cells[2]);
            assert_eq!(fam.cell(true, true), cells[3]);
        }
    }

    #[test]
    fn av_rear_ends_without_braking_is_code_2() {
        let (pre, post, ev) = run(vec![car(0, 0.0, 1, 30.0), car(2, 8.0, 1, 20.0)], &[]);
        assert_eq!(ev.len(), 1);
        let v = judge(&pre, &post, VehicleId(0), VehicleId(2), AV_ID);
        assert_eq!(v.situation, PreCrashSituation::NoneOnMarker);
        assert_eq!(v.responsible, AV_ID);
        assert!(!v.principal_shared);
        assert_eq!((v.failure_code, v.attacker_reward), (2, 1.0));
    }

    #[test]
    fn hard_braking_rear_car_is_code_3() {
        let hb = DiscreteAction::new(Longitudinal::HardBrake, Lateral::Keep);
        let (pre, post, ev) = run(vec![car(0, 0.0, 1, 30.0), car(2, 12.0, 1, 15.0)], &[(0, hb)]);
        assert_eq!(ev.len(), 1);
        let v = judge(&pre, &post, VehicleId(2), VehicleId(0), AV_ID);
        assert_eq!((v.failure_code, v.attacker_reward), (3, 0.5));
    }

    #[test]
    fn being_rear_ended_is_other_cars_fault() {
        let (pre, post, _) = run(vec![car(0, 8.0, 1, 20.0), car(2, 0.0, 1, 30.0)], &[]);
        let v = judge(&pre, &post, VehicleId(0), VehicleId(2), AV_ID);
        assert_eq!(v.responsible, VehicleId(2));
        assert_eq!((v.failure_code, v.attacker_reward), (0, -1.0));
    }

    #[test]
    fn cut_in_by_av_is_code_4_and_abandoning_is_code_5() {
        let mid = changing(car(0, 0.0, 0, 25.0), LateralPhase::ChangingLeft(1));
        let other = car(2, 3.0, 1, 25.0);
        let left = DiscreteAction::new(Longitudinal::Maintain, Lateral::ChangeLeft);
        let (pre, post, ev) = run(vec![mid.clone(), other.clone()], &[(0, left)]);
        assert_eq!(ev.len(), 1);
        let v = judge(&pre, &post, VehicleId(0), VehicleId(2), AV_ID);
        assert_eq!(v.situation, PreCrashSituation::OneOnMarkerCrashTargetLane);
        assert_eq!((v.failure_code, v.attacker_reward), (4, 1.0));

        // abandoning, but the target-lane car steers toward the AV
        let mid2 = changing(car(0, 0.0, 0, 30.0), LateralPhase::ChangingLeft(2));
        let other2 = car(2, 6.0, 1, 25.0);
        let right = DiscreteAction::new(Longitudinal::Maintain, Lateral::ChangeRight);
        let (pre, post, ev) = run(vec![mid2, other2], &[(0, MAINTAIN), (2, right)]);
        assert_eq!(ev.len(), 1);
        let v = judge(&pre, &post, VehicleId(0), VehicleId(2), AV_ID);
        assert!(v.mee_used);
        assert_eq!((v.failure_code, v.attacker_reward), (5, 0.5));
    }

    #[test]
    fn env_cut_in_while_abandoning_is_code_1() {
        let cutter = changing(car(2, 6.0, 0, 20.0), LateralPhase::ChangingLeft(2));
        let right = DiscreteAction::new(Longitudinal::Maintain, Lateral::ChangeRight);
        let (pre, post, ev) = run(vec![car(0, 0.0, 1, 25.0), cutter], &[(0, right)]);
        assert_eq!(ev.len(), 1);
        let v = judge(&pre, &post, VehicleId(0), VehicleId(2), AV_ID);
        assert_eq!(v.responsible, VehicleId(2));
        assert_eq!((v.failure_code, v.attacker_reward), (1, -0.5));
    }

    #[test]
    fn converging_from_left_is_code_6() {
        let av = changing(car(0, 0.0, 2, 25.0), LateralPhase::ChangingRight(2));
        let other = changing(car(2, 1.0, 0, 25.0), LateralPhase::ChangingLeft(1));
        let right = DiscreteAction::new(Longitudinal::Maintain, Lateral::ChangeRight);
        let left = DiscreteAction::new(Longitudinal::Maintain, Lateral::ChangeLeft);
        let (pre, post, ev) = run(vec![av, other], &[(0, right), (2, left)]);
        assert_eq!(ev.len(), 1);
        let v = judge(&pre, &post, VehicleId(0), VehicleId(2), AV_ID);
        assert_eq!(v.situation, PreCrashSituation::BothOnDifferentMarkers);
        assert_eq!(v.responsible, AV_ID);
        assert!(v.principal_shared);
        assert_eq!((v.failure_code, v.attacker_reward), (6, 0.8));
    }

    #[test]
    fn same_marker_is_rear_end_family() {
        let a = changing(car(0, 0.0, 0, 30.0), LateralPhase::ChangingLeft(1));
        let b = changing(car(2, 8.0, 0, 20.0), LateralPhase::ChangingLeft(1));
        let w = WorldState::from_vehicles(SimConfig::default(), 1, vec![a, b]);
        assert_eq!(classify_situation(&w, VehicleId(0), VehicleId(2)), PreCrashSituation::BothOnSameMarker);
        assert_eq!(responsible_party(PreCrashSituation::BothOnSameMarker, &w, VehicleId(0), VehicleId(2)), (AV_ID, false));
    }

    #[test]
    fn marker_car_hit_in_original_lane() {
        let m = changing(car(2, 8.0, 1, 20.0), LateralPhase::ChangingLeft(1));
        let w = WorldState::from_vehicles(SimConfig::default(), 1, vec![car(0, 0.0, 1, 30.0), m]);
        let s = classify_situation(&w, VehicleId(0), VehicleId(2));
        assert_eq!(s, PreCrashSituation::OneOnMarkerCrashOriginalLane);
        assert_eq!(responsible_party(s, &w, VehicleId(2), VehicleId(0)).0, AV_ID);
    }

    #[test]
    fn env_env_crash_has_zero_reward() {
        let (pre, post, _) = run(vec![car(0, 300.0, 1, 20.0), car(2, 0.0, 1, 30.0), car(3, 8.0, 1, 20.0)], &[]);
        let v = judge(&pre, &post, VehicleId(2), VehicleId(3), AV_ID);
        assert!(!v.av_involved && !v.av_at_fault);
        assert_eq!(v.attacker_reward, 0.0);
        assert!(v.failure_code <= 1);
    }
}
