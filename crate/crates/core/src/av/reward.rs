//! Per-step AV reward: distance keeping, lane centering and speed tracking,
//! each in `(-1, 0]`, averaged; a fixed penalty on collision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::world::slot_index;
use crate::sim::{VehicleId, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    /// Lower bound of the safe following distance, meters.
    pub dx_safe_min: f64,
    /// Safe following distance per unit speed, seconds.
    pub dx_safe_headway: f64,
    pub v_des: f64,
    pub y_norm: f64,
    pub v_norm: f64,
    pub collision: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            dx_safe_min: 10.0,
            dx_safe_headway: 1.0,
            v_des: 28.0,
            y_norm: 10.0,
            v_norm: 10.0,
            collision: -2.0,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.dx_safe_min, self.v_des, self.y_norm, self.v_norm];
        if pos.iter().any(|v| !(*v > 0.0 && v.is_finite())) || self.dx_safe_headway < 0.0 {
            return Err(Error::Config("reward parameters must be positive".into()));
        }
        Ok(())
    }

    pub fn dx_safe(&self, vx: f64) -> f64 {
        self.dx_safe_min.max(self.dx_safe_headway * vx)
    }
}

/// The three shaped terms; each is in `(-1, 0]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardTerms<T> {
    pub r_x: T,
    pub r_y: T,
    pub r_v: T,
}

impl<T: Scalar> RewardTerms<T> {
    pub fn total(&self) -> T {
        (self.r_x + self.r_y + self.r_v) / T::lit(3.0)
    }
}

/// Distance term. `dx` is `None` without a lead vehicle.
pub fn distance_term<T: Scalar>(dx: Option<T>, dx_safe: T) -> T {
    match dx {
        Some(dx) if dx < dx_safe => {
            let e = dx - dx_safe;
            (-(e * e) / (T::lit(10.0) * dx_safe)).exp() - T::one()
        }
        _ => T::zero(),
    }
}

pub fn tracking_term<T: Scalar>(value: T, setpoint: T, norm: T) -> T {
    let e = value - setpoint;
    (-(e * e) / norm).exp() - T::one()
}

pub fn reward_terms<T: Scalar>(dx: Option<T>, dx_safe: T, y: T, y_des: T, vx: T, params: &RewardParams) -> RewardTerms<T> {
    RewardTerms {
        r_x: distance_term(dx, dx_safe),
        r_y: tracking_term(y, y_des, T::lit(params.y_norm)),
        r_v: tracking_term(vx, T::lit(params.v_des), T::lit(params.v_norm)),
    }
}

/// Reward for the AV's transition `before → after`.
///
/// `dx` is the center distance to the nearest car ahead in the AV's lane
/// after the step; the safe distance uses the speed before the step; the
/// lateral setpoint is the center of the lane the AV is in or heading to.
pub fn reward_av<T: Scalar>(before: &WorldState, after: &WorldState, av: VehicleId, collided: bool, params: &RewardParams) -> T {
    if collided {
        return T::lit(params.collision);
    }
    let pre = before.get(av).expect("AV present before step");
    let post = after.get(av).expect("AV present after step");
    let road = after.road();
    let lane = road.lane_of(post.y);
    let dx = after.nearest_neighbors(av)[slot_index(lane, true)]
        .and_then(|id| after.get(id))
        .map(|lead| T::lit(lead.x - post.x));
    let y_des = road.lane_center(post.target_lane());
    reward_terms(dx, T::lit(params.dx_safe(pre.vx)), T::lit(post.y), T::lit(y_des), T::lit(post.vx), params).total()
}
