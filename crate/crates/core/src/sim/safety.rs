//! One-step safety filter for the AV.
//!
//! The proposed action is rolled forward one step against neighbors that
//! hold their current speed and lateral position (the AV observes no lateral
//! velocity). The action is rejected on predicted overlap, on a predicted
//! headway to a car ahead below the hard threshold, or, when moving
//! laterally, on a predicted headway of a new follower below it.
//! Replacement order: abandon the lane change, then hard brake.

use super::action::{DiscreteAction, Lateral, Longitudinal};
use super::vehicle::{VehicleId, VehicleState};
use super::world::{advance_vehicle, WorldState};

pub fn is_action_safe(world: &WorldState, ego: &VehicleState, action: DiscreteAction) -> bool {
    let cfg = &world.config;
    let road = &cfg.road;
    let s = &cfg.safety;
    let dt = cfg.dynamics.dt;
    let p = advance_vehicle(ego, action, cfg);
    let moves_laterally = p.y != ego.y;
    for o in &world.vehicles {
        if o.id == ego.id {
            continue;
        }
        let ox = o.x + o.vx * dt;
        if (p.y - o.y).abs() >= road.vehicle_width {
            continue;
        }
        let dx = ox - p.x;
        if dx.abs() < road.vehicle_length {
            return false;
        }
        let gap = dx.abs() - road.vehicle_length;
        if dx > 0.0 {
            if gap < s.min_gap.max(s.hard_headway * p.vx) {
                return false;
            }
        } else if moves_laterally && (ego.y - o.y).abs() >= road.vehicle_width {
            if gap < s.min_gap.max(s.hard_headway * o.vx) {
                return false;
            }
        }
    }
    true
}

/// Returns `proposed` if it is safe, else the lane-change-abandoning variant
/// if that is safe, else a hard brake with the lane change abandoned.
/// Idempotent.
pub fn safety_check(world: &WorldState, ego: VehicleId, proposed: DiscreteAction) -> DiscreteAction {
    let Some(v) = world.get(ego) else {
        return proposed;
    };
    if is_action_safe(world, v, proposed) {
        return proposed;
    }
    let abandoned = proposed.with_ay(Lateral::Keep);
    if abandoned != proposed && is_action_safe(world, v, abandoned) {
        return abandoned;
    }
    abandoned.with_ax(Longitudinal::HardBrake)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::SimConfig;
    use crate::sim::vehicle::Role;
    use crate::sim::world::{JointActions, AV_ID};

    fn car(id: u32, role: Role, x: f64, lane: usize, vx: f64) -> VehicleState {
        VehicleState::new(VehicleId(id), role, x, lane, vx, &SimConfig::default().road)
    }

    #[test]
    fn free_road_is_identity() {
        let w = WorldState::from_vehicles(SimConfig::default(), 0, vec![car(0, Role::Av, 0.0, 1, 25.0)]);
        for a in DiscreteAction::all() {
            assert_eq!(safety_check(&w, AV_ID, a), a);
        }
    }

    #[test]
    fn blocks_change_into_occupied_slot() {
        let w = WorldState::from_vehicles(
            SimConfig::default(),
            0,
            vec![car(0, Role::Av, 0.0, 1, 25.0), car(4, Role::Env, 2.0, 2, 25.0)],
        );
        // The lateral overlap only appears at the second step of the change.
        let mut av = w.vehicles[0].clone();
        av = advance_vehicle(&av, DiscreteAction::new(Longitudinal::Maintain, Lateral::ChangeLeft), &w.config);
        let mut other = w.vehicles[1].clone();
        other.x += 25.0;
        let w = WorldState::from_vehicles(w.config, 0, vec![av, other]);
        let a = safety_check(&w, AV_ID, DiscreteAction::new(Longitudinal::Maintain, Lateral::ChangeLeft));
        assert_eq!(a.ay, Lateral::Keep);
    }

    #[test]
    fn idempotent_on_crowded_worlds() {
        let cfg = SimConfig::default();
        for seed in 0..40 {
            let w = crate::sim::world::init_world(&cfg, seed, 20, true).unwrap();
            for a in DiscreteAction::all() {
                let once = safety_check(&w, AV_ID, a);
                assert_eq!(safety_check(&w, AV_ID, once), once);
            }
        }
    }

    /// Oracle: step a clone where every other car keeps speed and lane, and
    /// look for overlap with the AV.
    fn lookahead_overlaps(w: &WorldState, a: DiscreteAction) -> bool {
        let mut acts = JointActions::new();
        acts.insert(AV_ID, a);
        let (next, events) = w.step(&acts);
        let _ = next;
        events.iter().any(|e| e.involves(AV_ID))
    }

    #[test]
    fn hard_brake_iff_lookahead_overlap() {
        let mut cfg = SimConfig::default();
        cfg.safety.hard_headway = 0.0;
        cfg.safety.min_gap = 0.0;
        let brake = DiscreteAction::new(Longitudinal::Brake, Lateral::Keep);
        for lead_x in [8.0, 9.0, 10.0, 12.0, 15.0, 20.0] {
            for lead_v in [10.0, 14.0, 18.0] {
                let w = WorldState::from_vehicles(
                    cfg,
                    0,
                    vec![
                        car(0, Role::Av, 0.0, 1, 20.0),
                        car(4, Role::Env, lead_x, 1, lead_v),
                        car(5, Role::Env, -60.0, 1, 20.0),
                    ],
                );
                let out = safety_check(&w, AV_ID, brake);
                let expect_hard = lookahead_overlaps(&w, brake);
                assert_eq!(out.ax == Longitudinal::HardBrake, expect_hard, "lead at {lead_x} m, {lead_v} m/s");
            }
        }
    }
}
