//! Attacker observation. Built from public world state and the action the
//! AV emitted this step only; the AV's network is never consulted.

use crate::av::observation::{ego_and_neighbor_scaling, push_ego, push_neighbors};
use crate::rl::ObservationScaling;
use crate::sim::{DiscreteAction, RoadConfig, WorldState, ATTACKER_ID, AV_ID};

pub const ATTACKER_OBS_DIM: usize = 24;

/// Physical-unit observation:
/// `[y, vx, (Δx, Δy, Δvx) × 6, AV ax index, AV ay index, AV slot + 1 (0 if
/// absent), AV-in-range flag]`.
pub fn observe_attacker_raw(world: &WorldState, av_action: DiscreteAction) -> Vec<f64> {
    let mut out = Vec::with_capacity(ATTACKER_OBS_DIM);
    push_ego(world, ATTACKER_ID, &mut out);
    push_neighbors(world, ATTACKER_ID, &mut out);
    out.push(av_action.ax as usize as f64);
    out.push(av_action.ay as usize as f64);
    let slot = world.nearest_neighbors(ATTACKER_ID).iter().position(|n| *n == Some(AV_ID));
    out.push(slot.map_or(0.0, |s| (s + 1) as f64));
    out.push(if slot.is_some() { 1.0 } else { 0.0 });
    out
}

pub fn attacker_scaling(road: &RoadConfig) -> ObservationScaling {
    let (mut offset, mut scale) = ego_and_neighbor_scaling(road);
    offset.extend([1.5, 1.0, 0.0, 0.0]);
    scale.extend([1.5, 1.0, 6.0, 1.0]);
    ObservationScaling::new(offset, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::vehicle::Role;
    use crate::sim::world::slot_index;
    use crate::sim::{Lateral, Longitudinal, SimConfig, VehicleId, VehicleState};

    fn car(id: u32, role: Role, x: f64, lane: usize) -> VehicleState {
        VehicleState::new(VehicleId(id), role, x, lane, 25.0, &SimConfig::default().road)
    }

    #[test]
    fn av_directly_ahead_fills_front_slot() {
        let w = WorldState::from_vehicles(
            SimConfig::default(),
            0,
            vec![car(0, Role::Av, 20.0, 1), car(1, Role::Attacker, 0.0, 1)],
        );
        let a = DiscreteAction::new(Longitudinal::HardBrake, Lateral::ChangeRight);
        let raw = observe_attacker_raw(&w, a);
        assert_eq!(raw.len(), ATTACKER_OBS_DIM);
        let s = slot_index(1, true);
        assert_eq!(&raw[2 + 3 * s..5 + 3 * s], &[20.0, 0.0, 0.0]);
        assert_eq!(&raw[20..], &[3.0, 2.0, (s + 1) as f64, 1.0]);
        let z: Vec<f64> = attacker_scaling(w.road()).apply(&raw);
        assert_eq!(&z[20..22], &[1.0, 1.0]);
    }

    #[test]
    fn av_out_of_range_reads_absent() {
        let w = WorldState::from_vehicles(
            SimConfig::default(),
            0,
            vec![
                car(0, Role::Av, 100.0, 1),
                car(1, Role::Attacker, 0.0, 1),
                car(5, Role::Env, 40.0, 1),
            ],
        );
        let raw = observe_attacker_raw(&w, DiscreteAction::IDLE);
        assert_eq!(&raw[22..], &[0.0, 0.0]);
    }
}
