//! Rule-based driver for environment vehicles: headway car-following plus
//! occasional seeded lane changes into safe gaps.

use rand::Rng;

use super::action::{DiscreteAction, Lateral, Longitudinal};
use super::vehicle::{LateralPhase, Role, Side, VehicleId, VehicleState};
use super::world::{accel_of, advance_longitudinal, JointActions, WorldState};

/// Longitudinal choice from the nearest leader in the band(s) the vehicle
/// occupies. Predictions assume the leader holds its speed for one step.
pub fn follow_action(world: &WorldState, v: &VehicleState) -> Longitudinal {
    let road = world.road();
    let t = &world.config.traffic;
    let band = 0.75 * road.lane_width;
    let mut leader = world.leader_within(v, v.y, band);
    if v.phase != LateralPhase::InLane {
        let target_y = road.lane_center(v.target_lane());
        if let Some((l2, d2)) = world.leader_within(v, target_y, band) {
            if leader.map_or(true, |(_, d)| d2 < d) {
                leader = Some((l2, d2));
            }
        }
    }
    let speed_err = v.vx - v.desired_speed;
    let Some((lead, dx)) = leader else {
        return free_road(speed_err);
    };
    let gap = dx - road.vehicle_length;
    let predicted = gap + (lead.vx - v.vx) * world.config.dynamics.dt;
    let headway = predicted / v.vx.max(1.0);
    let preferred = if predicted < t.min_gap || headway < t.hard_headway {
        Longitudinal::HardBrake
    } else if headway < t.brake_headway {
        Longitudinal::Brake
    } else if speed_err < -0.5 && headway > t.follow_headway {
        Longitudinal::Accelerate
    } else if speed_err > 1.0 {
        Longitudinal::Brake
    } else {
        Longitudinal::Maintain
    };
    // Escalate until the car could still stop behind a leader that starts
    // braking hard right now.
    let mut ax = preferred;
    while ax != Longitudinal::HardBrake && !survives_leader_stop(world, v.vx, ax, lead.vx, gap) {
        ax = match ax {
            Longitudinal::Accelerate => Longitudinal::Maintain,
            Longitudinal::Maintain => Longitudinal::Brake,
            _ => Longitudinal::HardBrake,
        };
    }
    ax
}

/// Worst case for following at bumper gap `gap`: the leader brakes hard
/// from now on, the follower applies `ax` for one step and then brakes hard.
/// True if the gap never drops below the minimum.
fn survives_leader_stop(world: &WorldState, v: f64, ax: Longitudinal, v_lead: f64, gap: f64) -> bool {
    let d = &world.config.dynamics;
    let vmax = world.road().speed_max;
    let (xf, vf) = advance_longitudinal(0.0, v, accel_of(ax, d), d.dt, vmax);
    let (xl, vl) = advance_longitudinal(gap, v_lead, d.hard_brake, d.dt, vmax);
    let after_step = xl - xf;
    let stop = |u: f64| u * u / (2.0 * -d.hard_brake);
    let final_gap = after_step + stop(vl) - stop(vf);
    after_step.min(final_gap) >= world.config.traffic.min_gap
}

fn free_road(speed_err: f64) -> Longitudinal {
    if speed_err < -0.5 {
        Longitudinal::Accelerate
    } else if speed_err > 1.0 {
        Longitudinal::Brake
    } else {
        Longitudinal::Maintain
    }
}

/// Whether `v` can move into `target` now: enough room to the new leader and
/// follower, and nobody else converging on that lane nearby.
pub fn merge_is_safe(world: &WorldState, v: &VehicleState, target: usize) -> bool {
    let road = world.road();
    let t = &world.config.traffic;
    let target_y = road.lane_center(target);
    let dt = world.config.dynamics.dt;
    for o in &world.vehicles {
        if o.id == v.id {
            continue;
        }
        let dx = o.x - v.x;
        // Anyone else heading into the same lane close by is a conflict.
        if o.phase != LateralPhase::InLane && o.target_lane() == target && o.lane != v.lane {
            if dx.abs() < t.conflict_window + road.vehicle_length {
                return false;
            }
        }
        if (o.y - target_y).abs() >= road.lane_width * 0.75 {
            continue;
        }
        let gap = dx.abs() - road.vehicle_length;
        if dx >= 0.0 {
            let predicted = gap + (o.vx - v.vx) * dt;
            if predicted < t.merge_front_gap.max(v.vx * 0.5) {
                return false;
            }
        } else {
            let predicted = gap + (v.vx - o.vx) * dt;
            if predicted < t.merge_front_gap.max(o.vx * t.merge_rear_headway) {
                return false;
            }
        }
    }
    true
}

/// Whether a change already under way should be carried on.
fn continue_is_safe(world: &WorldState, v: &VehicleState, side: Side) -> bool {
    let road = world.road();
    let t = &world.config.traffic;
    let target = v.target_lane();
    let target_y = road.lane_center(target);
    let dt = world.config.dynamics.dt;
    for o in &world.vehicles {
        if o.id == v.id {
            continue;
        }
        let dx = o.x - v.x;
        // Converging from the far side of the target lane.
        if let Some(os) = o.phase.direction() {
            if os != side && o.target_lane() == target && dx.abs() < t.conflict_window + road.vehicle_length {
                return false;
            }
        }
        if (o.y - target_y).abs() >= road.lane_width * 0.75 {
            continue;
        }
        let gap = dx.abs() - road.vehicle_length;
        let closing = if dx >= 0.0 { v.vx - o.vx } else { o.vx - v.vx };
        if gap - closing * dt < t.min_gap {
            return false;
        }
    }
    true
}

/// Action of an environment vehicle. Deterministic in the world's seed,
/// step index and the vehicle id.
pub fn env_policy(world: &WorldState, id: VehicleId) -> DiscreteAction {
    let Some(v) = world.get(id) else {
        return DiscreteAction::IDLE;
    };
    let ax = follow_action(world, v);
    let ay = match v.phase.direction() {
        Some(side) => {
            if continue_is_safe(world, v, side) {
                side.lateral()
            } else {
                Lateral::Keep
            }
        }
        None => {
            let mut rng = world.decision_rng(id);
            let t = &world.config.traffic;
            let draw: f64 = rng.gen();
            if draw < t.lane_change_prob {
                let lanes = world.road().lane_count;
                let mut options = Vec::with_capacity(2);
                if v.lane + 1 < lanes {
                    options.push(Side::Left);
                }
                if v.lane > 0 {
                    options.push(Side::Right);
                }
                let side = options[rng.gen_range(0..options.len())];
                let target = match side {
                    Side::Left => v.lane + 1,
                    Side::Right => v.lane - 1,
                };
                // No lane changes while braking hard.
                if ax != Longitudinal::HardBrake && merge_is_safe(world, v, target) {
                    side.lateral()
                } else {
                    Lateral::Keep
                }
            } else {
                Lateral::Keep
            }
        }
    };
    DiscreteAction { ax, ay }
}

/// Actions of every environment vehicle for the current step.
pub fn env_joint_actions(world: &WorldState) -> JointActions {
    world
        .vehicles
        .iter()
        .filter(|v| v.role == Role::Env)
        .map(|v| (v.id, env_policy(world, v.id)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::SimConfig;

    fn env(id: u32, x: f64, lane: usize, vx: f64, desired: f64) -> VehicleState {
        let mut v = VehicleState::new(VehicleId(id), Role::Env, x, lane, vx, &SimConfig::default().road);
        v.desired_speed = desired;
        v
    }

    #[test]
    fn free_road_below_desired_accelerates() {
        let mut cfg = SimConfig::default();
        cfg.traffic.lane_change_prob = 0.0;
        let w = WorldState::from_vehicles(cfg, 9, vec![env(2, 0.0, 1, 20.0, 28.0), env(3, 150.0, 1, 15.0, 15.0)]);
        assert_eq!(env_policy(&w, VehicleId(2)).ax, Longitudinal::Accelerate);
    }

    #[test]
    fn short_headway_brakes() {
        let mut cfg = SimConfig::default();
        cfg.traffic.lane_change_prob = 0.0;
        let w = WorldState::from_vehicles(cfg, 9, vec![env(2, 0.0, 1, 25.0, 28.0), env(3, 15.0, 1, 25.0, 25.0)]);
        let a = env_policy(&w, VehicleId(2));
        assert!(matches!(a.ax, Longitudinal::Brake | Longitudinal::HardBrake));
    }

    #[test]
    fn never_steers_off_road() {
        let mut cfg = SimConfig::default();
        cfg.traffic.lane_change_prob = 1.0;
        let mut w = WorldState::from_vehicles(cfg, 4, vec![env(2, 0.0, 0, 25.0, 25.0), env(3, 300.0, 2, 25.0, 25.0)]);
        for k in 0..200 {
            w.step_index = k;
            assert_ne!(env_policy(&w, VehicleId(2)).ay, Lateral::ChangeRight);
            assert_ne!(env_policy(&w, VehicleId(3)).ay, Lateral::ChangeLeft);
        }
    }

    #[test]
    fn lane_change_frequency_matches_probability() {
        let mut cfg = SimConfig::default();
        cfg.traffic.lane_change_prob = 0.05;
        let mut w = WorldState::from_vehicles(cfg, 2024, vec![env(2, 0.0, 1, 25.0, 25.0)]);
        let trials = 10_000;
        let mut hits = 0;
        for k in 0..trials {
            w.step_index = k;
            if env_policy(&w, VehicleId(2)).ay != Lateral::Keep {
                hits += 1;
            }
        }
        let freq = hits as f64 / trials as f64;
        assert!((freq - 0.05).abs() <= 0.2 * 0.05, "freq {freq}");
    }

    #[test]
    fn no_merge_into_occupied_gap() {
        let mut cfg = SimConfig::default();
        cfg.traffic.lane_change_prob = 1.0;
        // car alongside in the only adjacent lane
        let mut w = WorldState::from_vehicles(cfg, 5, vec![env(2, 0.0, 0, 25.0, 25.0), env(3, 3.0, 1, 25.0, 25.0)]);
        for k in 0..100 {
            w.step_index = k;
            assert_eq!(env_policy(&w, VehicleId(2)).ay, Lateral::Keep);
        }
    }

    #[test]
    fn aborts_when_another_car_converges() {
        let cfg = SimConfig::default();
        let mut a = env(2, 0.0, 0, 25.0, 25.0);
        a.phase = LateralPhase::ChangingLeft(2);
        a.y = 2.4;
        let mut b = env(3, 2.0, 2, 25.0, 25.0);
        b.phase = LateralPhase::ChangingRight(1);
        b.y = 6.0;
        let w = WorldState::from_vehicles(cfg, 5, vec![a, b]);
        assert_eq!(env_policy(&w, VehicleId(2)).ay, Lateral::Keep);
        assert_eq!(env_policy(&w, VehicleId(3)).ay, Lateral::Keep);
    }
}
