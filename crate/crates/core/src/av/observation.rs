//! Raw (physical-unit) observation vectors and their scaling.
//!
//! Neighbor features are `(Δx, Δy, Δvx)` of the occupant of each canonical
//! slot relative to the ego car. Empty slots read as a car at the edge of
//! the observed range with zero relative lateral position and speed.

use crate::rl::ObservationScaling;
use crate::sim::world::NEIGHBOR_SLOTS;
use crate::sim::{RoadConfig, VehicleId, WorldState};

pub const EGO_FEATURES: usize = 2;
pub const NEIGHBOR_FEATURES: usize = 3 * NEIGHBOR_SLOTS;
pub const AV_OBS_DIM: usize = EGO_FEATURES + NEIGHBOR_FEATURES;

/// Longitudinal range assigned to empty slots; behind slots use its negative.
pub fn sentinel_range(road: &RoadConfig) -> f64 {
    road.half_length()
}

/// Appends `y, vx` of the ego car.
pub fn push_ego(world: &WorldState, ego: VehicleId, out: &mut Vec<f64>) {
    let e = world.get(ego).expect("ego vehicle present");
    out.push(e.y);
    out.push(e.vx);
}

/// Appends the 18 neighbor features of `ego` in slot order.
pub fn push_neighbors(world: &WorldState, ego: VehicleId, out: &mut Vec<f64>) {
    let e = world.get(ego).expect("ego vehicle present");
    let range = sentinel_range(world.road());
    for (slot, occupant) in world.nearest_neighbors(ego).iter().enumerate() {
        match occupant.and_then(|id| world.get(id)) {
            Some(o) => {
                out.push(o.x - e.x);
                out.push(o.y - e.y);
                out.push(o.vx - e.vx);
            }
            None => {
                out.push(if slot % 2 == 0 { range } else { -range });
                out.push(0.0);
                out.push(0.0);
            }
        }
    }
}

/// Physical-unit AV observation: `[y, vx, (Δx, Δy, Δvx) × 6]`.
pub fn observe_av_raw(world: &WorldState, av: VehicleId) -> Vec<f64> {
    let mut out = Vec::with_capacity(AV_OBS_DIM);
    push_ego(world, av, &mut out);
    push_neighbors(world, av, &mut out);
    out
}

pub(crate) fn ego_and_neighbor_scaling(road: &RoadConfig) -> (Vec<f64>, Vec<f64>) {
    let y_mid = 0.5 * road.lane_width * (road.lane_count - 1) as f64;
    let v_mid = 0.5 * road.speed_max;
    let mut offset = vec![y_mid, v_mid];
    let mut scale = vec![y_mid, v_mid];
    for _ in 0..NEIGHBOR_SLOTS {
        offset.extend([0.0, 0.0, 0.0]);
        scale.extend([sentinel_range(road), 2.0 * y_mid, road.speed_max]);
    }
    (offset, scale)
}

/// Maps the physical ranges of the AV observation onto roughly `[-1, 1]`.
pub fn av_scaling(road: &RoadConfig) -> ObservationScaling {
    let (offset, scale) = ego_and_neighbor_scaling(road);
    ObservationScaling::new(offset, scale)
}
