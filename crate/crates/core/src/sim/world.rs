use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::{DiscreteAction, Lateral, Longitudinal};
use super::config::{DynamicsConfig, RoadConfig, SimConfig};
use super::vehicle::{LateralPhase, Role, VehicleId, VehicleState};
use crate::error::{Error, Result};

/// Actions for one step, keyed by vehicle. Vehicles without an entry idle.
pub type JointActions = BTreeMap<VehicleId, DiscreteAction>;

pub const AV_ID: VehicleId = VehicleId(0);
pub const ATTACKER_ID: VehicleId = VehicleId(1);

const SPAWN_ATTEMPTS_PER_CAR: usize = 2_000;
const RESPAWN_ATTEMPTS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub vehicle_a: VehicleId,
    pub vehicle_b: VehicleId,
    pub step_index: u64,
}

impl CollisionEvent {
    pub fn involves(&self, id: VehicleId) -> bool {
        self.vehicle_a == id || self.vehicle_b == id
    }

    pub fn partner_of(&self, id: VehicleId) -> Option<VehicleId> {
        if self.vehicle_a == id {
            Some(self.vehicle_b)
        } else if self.vehicle_b == id {
            Some(self.vehicle_a)
        } else {
            None
        }
    }
}

/// Neighbor slot order: `(lane 0, front), (lane 0, behind), (lane 1, front), ...`.
pub const NEIGHBOR_SLOTS: usize = 6;

pub type Neighbors = [Option<VehicleId>; NEIGHBOR_SLOTS];

#[inline]
pub fn slot_index(lane: usize, front: bool) -> usize {
    lane * 2 + if front { 0 } else { 1 }
}

/// Full simulator state. Cloning yields an independent world.
#[derive(Clone, Debug)]
pub struct WorldState {
    pub step_index: u64,
    /// Sorted by id.
    pub vehicles: Vec<VehicleState>,
    pub config: SimConfig,
    seed: u64,
    rng: ChaCha8Rng,
}

/// One-step longitudinal kinematics under constant acceleration, with the
/// speed held inside `[0, vmax]` (the vehicle stops or cruises at the limit
/// for the rest of the step).
pub fn advance_longitudinal(x: f64, vx: f64, accel: f64, dt: f64, vmax: f64) -> (f64, f64) {
    let v_end = vx + accel * dt;
    if accel < 0.0 && v_end < 0.0 {
        let t_stop = vx.max(0.0) / -accel;
        (x + vx.max(0.0) * t_stop + 0.5 * accel * t_stop * t_stop, 0.0)
    } else if accel > 0.0 && v_end > vmax {
        let t1 = ((vmax - vx) / accel).max(0.0);
        let v0 = vx.min(vmax);
        (x + v0 * t1 + 0.5 * accel * t1 * t1 + vmax * (dt - t1), vmax)
    } else {
        (x + vx * dt + 0.5 * accel * dt * dt, v_end.clamp(0.0, vmax.max(vx)))
    }
}

pub fn accel_of(ax: Longitudinal, dynamics: &DynamicsConfig) -> f64 {
    match ax {
        Longitudinal::Maintain => 0.0,
        Longitudinal::Accelerate => dynamics.accel,
        Longitudinal::Brake => dynamics.brake,
        Longitudinal::HardBrake => dynamics.hard_brake,
    }
}

/// Lateral transition for one step. Continuing a change advances one step;
/// any other lateral action during a change reverses it at the same rate.
/// A change that would leave the road is ignored.
pub fn advance_lateral(lane: usize, phase: LateralPhase, ay: Lateral, n: u8, lane_count: usize) -> (usize, LateralPhase) {
    match phase {
        LateralPhase::InLane => match ay {
            Lateral::Keep => (lane, phase),
            Lateral::ChangeLeft if lane + 1 < lane_count => {
                if n == 1 {
                    (lane + 1, LateralPhase::InLane)
                } else {
                    (lane, LateralPhase::ChangingLeft(1))
                }
            }
            Lateral::ChangeRight if lane > 0 => {
                if n == 1 {
                    (lane - 1, LateralPhase::InLane)
                } else {
                    (lane, LateralPhase::ChangingRight(1))
                }
            }
            _ => (lane, phase),
        },
        LateralPhase::ChangingLeft(k) => {
            if ay == Lateral::ChangeLeft {
                if k + 1 >= n {
                    (lane + 1, LateralPhase::InLane)
                } else {
                    (lane, LateralPhase::ChangingLeft(k + 1))
                }
            } else if k <= 1 {
                (lane, LateralPhase::InLane)
            } else {
                (lane, LateralPhase::ChangingLeft(k - 1))
            }
        }
        LateralPhase::ChangingRight(k) => {
            if ay == Lateral::ChangeRight {
                if k + 1 >= n {
                    (lane - 1, LateralPhase::InLane)
                } else {
                    (lane, LateralPhase::ChangingRight(k + 1))
                }
            } else if k <= 1 {
                (lane, LateralPhase::InLane)
            } else {
                (lane, LateralPhase::ChangingRight(k - 1))
            }
        }
    }
}

pub fn lateral_position(lane: usize, phase: LateralPhase, n: u8, road: &RoadConfig) -> f64 {
    let offset = match phase {
        LateralPhase::InLane => 0.0,
        LateralPhase::ChangingLeft(k) => k as f64 / n as f64,
        LateralPhase::ChangingRight(k) => -(k as f64) / n as f64,
    };
    (lane as f64 + offset) * road.lane_width
}

/// Applies `action` to a copy of `v` (kinematics only, no collision logic).
pub fn advance_vehicle(v: &VehicleState, action: DiscreteAction, cfg: &SimConfig) -> VehicleState {
    let d = &cfg.dynamics;
    let (x, vx) = advance_longitudinal(v.x, v.vx, accel_of(action.ax, d), d.dt, cfg.road.speed_max);
    let (lane, phase) = advance_lateral(v.lane, v.phase, action.ay, d.lane_change_steps, cfg.road.lane_count);
    VehicleState {
        x,
        vx,
        lane,
        phase,
        y: lateral_position(lane, phase, d.lane_change_steps, &cfg.road),
        last_action: Some(action),
        ..v.clone()
    }
}

/// Strict overlap of two axis-aligned footprints centered at the given points.
#[inline]
pub fn footprints_overlap(ax: f64, ay: f64, bx: f64, by: f64, road: &RoadConfig) -> bool {
    (ax - bx).abs() < road.vehicle_length && (ay - by).abs() < road.vehicle_width
}

impl WorldState {
    pub fn from_vehicles(config: SimConfig, seed: u64, mut vehicles: Vec<VehicleState>) -> Self {
        vehicles.sort_by_key(|v| v.id);
        Self {
            step_index: 0,
            vehicles,
            config,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn road(&self) -> &RoadConfig {
        &self.config.road
    }

    pub fn get(&self, id: VehicleId) -> Option<&VehicleState> {
        self.vehicles
            .binary_search_by_key(&id, |v| v.id)
            .ok()
            .map(|i| &self.vehicles[i])
    }

    pub fn av(&self) -> Option<&VehicleState> {
        self.vehicles.iter().find(|v| v.role == Role::Av)
    }

    pub fn attacker(&self) -> Option<&VehicleState> {
        self.vehicles.iter().find(|v| v.role == Role::Attacker)
    }

    /// Generator for a per-(step, vehicle) decision, independent of the
    /// order in which vehicles are queried.
    pub fn decision_rng(&self, id: VehicleId) -> ChaCha8Rng {
        let mixed = self.seed
            ^ self.step_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ (id.0 as u64 + 1).wrapping_mul(0xC2B2_AE3D_27D4_EB4F).rotate_left(29);
        ChaCha8Rng::seed_from_u64(mixed)
    }

    /// Stable digest of the observable state plus generator position.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.step_index.hash(&mut h);
        self.seed.hash(&mut h);
        self.rng.get_word_pos().hash(&mut h);
        for v in &self.vehicles {
            v.id.hash(&mut h);
            v.role.hash(&mut h);
            v.x.to_bits().hash(&mut h);
            v.y.to_bits().hash(&mut h);
            v.vx.to_bits().hash(&mut h);
            v.lane.hash(&mut h);
            v.phase.hash(&mut h);
            v.desired_speed.to_bits().hash(&mut h);
            v.last_action.hash(&mut h);
            v.crashed.hash(&mut h);
        }
        h.finish()
    }

    pub fn vehicles_bitwise_eq(&self, other: &[VehicleState]) -> bool {
        self.vehicles.len() == other.len()
            && self.vehicles.iter().zip(other).all(|(a, b)| a.bitwise_eq(b))
    }

    /// Axis-aligned footprint overlap test over all pairs, `a < b`.
    pub fn detect_collisions(&self) -> Vec<CollisionEvent> {
        let road = &self.config.road;
        let mut out = Vec::new();
        for (i, a) in self.vehicles.iter().enumerate() {
            for b in &self.vehicles[i + 1..] {
                if footprints_overlap(a.x, a.y, b.x, b.y, road) {
                    out.push(CollisionEvent {
                        vehicle_a: a.id.min(b.id),
                        vehicle_b: a.id.max(b.id),
                        step_index: self.step_index,
                    });
                }
            }
        }
        out
    }

    /// For each lane, the nearest vehicle ahead of `ego` and the nearest at or
    /// behind it, by longitudinal distance. Ties go to the lower id. Lane
    /// membership follows lateral position.
    pub fn nearest_neighbors(&self, ego: VehicleId) -> Neighbors {
        let mut best: [Option<(f64, VehicleId)>; NEIGHBOR_SLOTS] = [None; NEIGHBOR_SLOTS];
        let Some(e) = self.get(ego) else {
            return [None; NEIGHBOR_SLOTS];
        };
        let road = &self.config.road;
        for v in &self.vehicles {
            if v.id == ego {
                continue;
            }
            let dx = v.x - e.x;
            let slot = slot_index(road.lane_of(v.y), dx > 0.0);
            let key = (dx.abs(), v.id);
            let better = match best[slot] {
                None => true,
                Some((d, id)) => key.0 < d || (key.0 == d && key.1 < id),
            };
            if better {
                best[slot] = Some(key);
            }
        }
        best.map(|b| b.map(|(_, id)| id))
    }

    /// Nearest vehicle ahead of `ego` whose footprint laterally overlaps the
    /// band `|y - y_ref| < half_band`, with its center distance.
    pub fn leader_within(&self, ego: &VehicleState, y_ref: f64, half_band: f64) -> Option<(&VehicleState, f64)> {
        let mut best: Option<(&VehicleState, f64)> = None;
        for v in &self.vehicles {
            if v.id == ego.id {
                continue;
            }
            let dx = v.x - ego.x;
            if dx <= 0.0 || (v.y - y_ref).abs() >= half_band {
                continue;
            }
            if best.map_or(true, |(_, d)| dx < d) {
                best = Some((v, dx));
            }
        }
        best
    }

    /// Advances the world by one step. Deterministic in `(self, actions)`.
    ///
    /// Environment vehicles wrecked on the previous step and environment
    /// vehicles that drifted out of the window around the AV are respawned
    /// at the window edge. Collisions are detected on the post-step geometry
    /// and flagged on the vehicles involved.
    pub fn step(&self, actions: &JointActions) -> (WorldState, Vec<CollisionEvent>) {
        let cfg = self.config;
        let mut next = self.clone();
        let mut to_respawn = Vec::new();
        for (i, v) in self.vehicles.iter().enumerate() {
            if v.crashed && v.role == Role::Env {
                to_respawn.push(i);
                continue;
            }
            let action = actions.get(&v.id).copied().unwrap_or(DiscreteAction::IDLE);
            next.vehicles[i] = advance_vehicle(v, action, &cfg);
            next.vehicles[i].crashed = false;
        }
        if let Some(av_x) = next.av().map(|v| v.x) {
            let half = cfg.road.half_length();
            for (i, v) in next.vehicles.iter().enumerate() {
                if v.role == Role::Env && (v.x - av_x).abs() > half && !to_respawn.contains(&i) {
                    to_respawn.push(i);
                }
            }
            to_respawn.sort_unstable();
            for i in to_respawn {
                next.respawn(i, av_x);
            }
        }
        next.step_index += 1;
        let events = next.detect_collisions();
        for e in &events {
            for v in next.vehicles.iter_mut() {
                if e.involves(v.id) {
                    v.crashed = true;
                }
            }
        }
        (next, events)
    }

    fn respawn(&mut self, idx: usize, av_x: f64) {
        let cfg = self.config;
        let road = cfg.road;
        let half = road.half_length();
        let ahead = if self.vehicles[idx].crashed {
            self.rng.gen_bool(0.5)
        } else {
            self.vehicles[idx].x < av_x
        };
        for _ in 0..RESPAWN_ATTEMPTS {
            let lane = self.rng.gen_range(0..road.lane_count);
            let depth = self.rng.gen_range(0.0..0.25 * half);
            let x = if ahead { av_x + half - depth } else { av_x - half + depth };
            let desired = self
                .rng
                .gen_range(cfg.traffic.desired_speed_min..=cfg.traffic.desired_speed_max);
            let y = road.lane_center(lane);
            let clear = self.vehicles.iter().enumerate().all(|(j, o)| {
                j == idx || (o.y - y).abs() >= road.lane_width || (o.x - x).abs() >= cfg.traffic.spawn_gap
            });
            if clear {
                let v = &mut self.vehicles[idx];
                v.x = x;
                v.lane = lane;
                v.phase = LateralPhase::InLane;
                v.y = y;
                v.desired_speed = desired;
                v.vx = desired.min(road.speed_max);
                v.last_action = None;
                v.crashed = false;
                return;
            }
        }
        // Window edge congested: park the wreck out of the way until next step.
        let v = &mut self.vehicles[idx];
        if v.crashed {
            v.x = if ahead { av_x + 2.0 * half } else { av_x - 2.0 * half };
            v.crashed = false;
        }
    }
}

/// Builds the initial world: the AV mid-window, the attacker (if requested)
/// inside the AV's neighbor slots, then `n_env_cars` non-overlapping
/// environment cars.
pub fn init_world(config: &SimConfig, seed: u64, n_env_cars: usize, with_attacker: bool) -> Result<WorldState> {
    config.validate()?;
    let road = config.road;
    let traffic = config.traffic;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5_5A5A_0F0F_F0F0);
    let mut vehicles = Vec::with_capacity(n_env_cars + 2);

    let av_lane = rng.gen_range(0..road.lane_count);
    let av_speed = rng.gen_range(road.speed_min..=(road.speed_min + road.speed_max) * 0.5);
    let mut av = VehicleState::new(AV_ID, Role::Av, 0.0, av_lane, av_speed, &road);
    av.desired_speed = road.speed_max;
    vehicles.push(av);

    // Longitudinal corridor between the AV and the attacker, kept free of
    // environment cars so the two are each other's neighbors.
    let mut corridor: Option<(f64, f64, [usize; 2])> = None;
    // environment ids start after the attacker's, present or not
    let next_id = ATTACKER_ID.0 + 1;
    if with_attacker {
        let lane = rng.gen_range(0..road.lane_count);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let lo = if lane == av_lane { road.vehicle_length + 8.0 } else { 4.0 };
        let dx = sign * rng.gen_range(lo..lo + 20.0);
        let speed = (av_speed + rng.gen_range(-2.0..=2.0)).clamp(road.speed_min, road.speed_max);
        let mut att = VehicleState::new(ATTACKER_ID, Role::Attacker, dx, lane, speed, &road);
        att.desired_speed = road.speed_max;
        vehicles.push(att);
        corridor = Some((dx.min(0.0), dx.max(0.0), [av_lane, lane]));
    }

    let half = road.half_length();
    for k in 0..n_env_cars {
        let mut placed = false;
        for _ in 0..SPAWN_ATTEMPTS_PER_CAR {
            let lane = rng.gen_range(0..road.lane_count);
            let x = rng.gen_range(-half * 0.95..half * 0.95);
            let y = road.lane_center(lane);
            let clear = vehicles.iter().all(|o: &VehicleState| {
                (o.y - y).abs() >= road.lane_width || (o.x - x).abs() >= traffic.spawn_gap
            });
            let in_corridor = corridor.map_or(false, |(lo, hi, lanes)| {
                lanes.contains(&lane) && x >= lo - road.vehicle_length && x <= hi + road.vehicle_length
            });
            if !clear || in_corridor {
                continue;
            }
            let desired = rng.gen_range(traffic.desired_speed_min..=traffic.desired_speed_max);
            let mut v = VehicleState::new(VehicleId(next_id + k as u32), Role::Env, x, lane, desired, &road);
            v.desired_speed = desired;
            vehicles.push(v);
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Spawn {
                placed_of: k,
                attempts: SPAWN_ATTEMPTS_PER_CAR,
            });
        }
    }
    Ok(WorldState::from_vehicles(*config, seed, vehicles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::vehicle::Role;

    fn lone(x: f64, lane: usize, vx: f64) -> VehicleState {
        VehicleState::new(VehicleId(7), Role::Env, x, lane, vx, &RoadConfig::default())
    }

    #[test]
    fn kinematics_accelerate_one_step() {
        let (x, v) = advance_longitudinal(10.0, 20.0, 2.0, 1.0, 30.0);
        assert_eq!(v, 22.0);
        assert_eq!(x, 10.0 + 20.0 + 1.0);
    }

    #[test]
    fn kinematics_stop_does_not_reverse() {
        let (x, v) = advance_longitudinal(0.0, 1.0, -4.0, 1.0, 30.0);
        assert_eq!(v, 0.0);
        assert!((x - 0.125).abs() < 1e-12);
    }

    #[test]
    fn kinematics_caps_at_vmax() {
        let (x, v) = advance_longitudinal(0.0, 29.0, 2.0, 1.0, 30.0);
        assert_eq!(v, 30.0);
        // 0.5 s accelerating from 29 then 0.5 s at 30
        assert!((x - (29.0 * 0.5 + 0.25 + 15.0)).abs() < 1e-12);
    }

    #[test]
    fn lane_change_takes_three_steps_and_reverses() {
        let n = 3;
        let (l, p) = advance_lateral(0, LateralPhase::InLane, Lateral::ChangeLeft, n, 3);
        assert_eq!((l, p), (0, LateralPhase::ChangingLeft(1)));
        let (l, p) = advance_lateral(l, p, Lateral::ChangeLeft, n, 3);
        assert_eq!((l, p), (0, LateralPhase::ChangingLeft(2)));
        let (l2, p2) = advance_lateral(l, p, Lateral::Keep, n, 3);
        assert_eq!((l2, p2), (0, LateralPhase::ChangingLeft(1)));
        let (l, p) = advance_lateral(l, p, Lateral::ChangeLeft, n, 3);
        assert_eq!((l, p), (1, LateralPhase::InLane));
        // off-road change ignored
        let (l, p) = advance_lateral(2, LateralPhase::InLane, Lateral::ChangeLeft, n, 3);
        assert_eq!((l, p), (2, LateralPhase::InLane));
        let (l, p) = advance_lateral(0, LateralPhase::InLane, Lateral::ChangeRight, n, 3);
        assert_eq!((l, p), (0, LateralPhase::InLane));
    }

    #[test]
    fn lateral_positions_interpolate_linearly() {
        let road = RoadConfig::default();
        assert!((lateral_position(0, LateralPhase::ChangingLeft(1), 3, &road) - 1.2).abs() < 1e-12);
        assert!((lateral_position(2, LateralPhase::ChangingRight(2), 3, &road) - 4.8).abs() < 1e-12);
    }

    #[test]
    fn uniform_motion_preserves_spacing() {
        let cfg = SimConfig::default();
        let mut a = lone(0.0, 0, 25.0);
        a.id = VehicleId(2);
        let mut b = lone(40.0, 0, 25.0);
        b.id = VehicleId(3);
        let w = WorldState::from_vehicles(cfg, 1, vec![a, b]);
        let (n, ev) = w.step(&JointActions::new());
        assert!(ev.is_empty());
        assert_eq!(n.vehicles[1].x - n.vehicles[0].x, 40.0);
    }

    #[test]
    fn rear_end_with_two_metre_gap_collides() {
        let cfg = SimConfig::default();
        let gap = 2.0;
        let mut lead = lone(gap + cfg.road.vehicle_length, 1, 20.0);
        lead.id = VehicleId(3);
        let mut rear = lone(0.0, 1, 25.0);
        rear.id = VehicleId(2);
        // oracle: bumper gap after t seconds of uniform motion is gap - dv * t
        let after = gap - (25.0 - 20.0) * cfg.dynamics.dt;
        assert!(after < 0.0);
        let w = WorldState::from_vehicles(cfg, 1, vec![rear, lead]);
        let (n, ev) = w.step(&JointActions::new());
        assert_eq!(ev.len(), 1);
        assert_eq!((ev[0].vehicle_a, ev[0].vehicle_b), (VehicleId(2), VehicleId(3)));
        assert!(n.vehicles.iter().all(|v| v.crashed));
    }

    #[test]
    fn same_x_different_lanes_do_not_collide() {
        let cfg = SimConfig::default();
        let mut a = lone(0.0, 0, 20.0);
        a.id = VehicleId(2);
        let mut b = lone(0.0, 1, 20.0);
        b.id = VehicleId(3);
        let w = WorldState::from_vehicles(cfg, 1, vec![a.clone(), b]);
        assert!(w.detect_collisions().is_empty());
        let mut c = a.clone();
        c.id = VehicleId(4);
        let w = WorldState::from_vehicles(cfg, 1, vec![a, c]);
        assert_eq!(w.detect_collisions().len(), 1);
    }

    #[test]
    fn neighbors_empty_and_single() {
        let cfg = SimConfig::default();
        let av = VehicleState::new(AV_ID, Role::Av, 0.0, 1, 20.0, &cfg.road);
        let w = WorldState::from_vehicles(cfg, 1, vec![av.clone()]);
        assert_eq!(w.nearest_neighbors(AV_ID), [None; 6]);
        let lead = VehicleState::new(VehicleId(5), Role::Env, 30.0, 1, 20.0, &cfg.road);
        let w = WorldState::from_vehicles(cfg, 1, vec![av, lead]);
        let n = w.nearest_neighbors(AV_ID);
        assert_eq!(n[slot_index(1, true)], Some(VehicleId(5)));
        assert_eq!(n.iter().filter(|s| s.is_some()).count(), 1);
    }

    #[test]
    fn init_world_is_deterministic_and_places_attacker() {
        let cfg = SimConfig::default();
        for seed in 0..50 {
            let a = init_world(&cfg, seed, 20, true).unwrap();
            let b = init_world(&cfg, seed, 20, true).unwrap();
            assert_eq!(a.fingerprint(), b.fingerprint());
            assert!(a.vehicles_bitwise_eq(&b.vehicles));
            let n = a.nearest_neighbors(AV_ID);
            assert!(n.contains(&Some(ATTACKER_ID)), "seed {seed}");
            assert!(a.nearest_neighbors(ATTACKER_ID).contains(&Some(AV_ID)), "seed {seed}");
            assert!(a.detect_collisions().is_empty());
        }
    }

    #[test]
    fn init_world_rejects_overcrowded_road() {
        let mut cfg = SimConfig::default();
        cfg.road.road_length = 100.0;
        let err = init_world(&cfg, 3, 40, false).unwrap_err();
        assert!(matches!(err, Error::Spawn { .. }));
    }
}
