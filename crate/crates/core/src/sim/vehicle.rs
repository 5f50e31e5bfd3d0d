use std::fmt;

use serde::{Deserialize, Serialize};

use super::action::{DiscreteAction, Lateral};
use super::config::RoadConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Av,
    Attacker,
    Env,
}

/// Left is toward higher lane indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    /// Lateral action that moves toward this side.
    pub fn lateral(self) -> Lateral {
        match self {
            Side::Left => Lateral::ChangeLeft,
            Side::Right => Lateral::ChangeRight,
        }
    }
}

/// Lateral state. `step` counts completed lane-change steps out of
/// `lane_change_steps`; the progress fraction is `step / lane_change_steps`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "phase", content = "step")]
pub enum LateralPhase {
    InLane,
    ChangingLeft(u8),
    ChangingRight(u8),
}

impl LateralPhase {
    pub fn direction(self) -> Option<Side> {
        match self {
            LateralPhase::InLane => None,
            LateralPhase::ChangingLeft(_) => Some(Side::Left),
            LateralPhase::ChangingRight(_) => Some(Side::Right),
        }
    }

    pub fn steps_done(self) -> u8 {
        match self {
            LateralPhase::InLane => 0,
            LateralPhase::ChangingLeft(k) | LateralPhase::ChangingRight(k) => k,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: VehicleId,
    pub role: Role,
    /// Longitudinal position of the footprint center.
    pub x: f64,
    /// Lateral position of the footprint center, 0 = center of lane 0.
    pub y: f64,
    pub vx: f64,
    /// Lane the vehicle is in, or is leaving while a change is in progress.
    pub lane: usize,
    pub phase: LateralPhase,
    /// Cruise speed of rule-based drivers. Unused for learned agents.
    pub desired_speed: f64,
    /// Action executed on the step that produced this state.
    pub last_action: Option<DiscreteAction>,
    /// Set when this vehicle's footprint overlapped another after the last step.
    pub crashed: bool,
}

impl VehicleState {
    pub fn new(id: VehicleId, role: Role, x: f64, lane: usize, vx: f64, road: &RoadConfig) -> Self {
        Self {
            id,
            role,
            x,
            y: road.lane_center(lane),
            vx,
            lane,
            phase: LateralPhase::InLane,
            desired_speed: vx,
            last_action: None,
            crashed: false,
        }
    }

    /// Lane the vehicle is heading to; equals `lane` when not changing.
    pub fn target_lane(&self) -> usize {
        match self.phase {
            LateralPhase::InLane => self.lane,
            LateralPhase::ChangingLeft(_) => self.lane + 1,
            LateralPhase::ChangingRight(_) => self.lane - 1,
        }
    }

    /// Whether the last executed lateral action pushed the change forward.
    /// Abandoning is any other lateral action while a change is in progress.
    pub fn is_pursuing_change(&self) -> bool {
        match (self.phase.direction(), self.last_action) {
            (Some(side), Some(a)) => a.ay == side.lateral(),
            (Some(_), None) => true,
            (None, _) => false,
        }
    }

    /// Bitwise equality of every field, including float bit patterns.
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.role == other.role
            && self.x.to_bits() == other.x.to_bits()
            && self.y.to_bits() == other.y.to_bits()
            && self.vx.to_bits() == other.vx.to_bits()
            && self.lane == other.lane
            && self.phase == other.phase
            && self.desired_speed.to_bits() == other.desired_speed.to_bits()
            && self.last_action == other.last_action
            && self.crashed == other.crashed
    }
}

/// True iff the lateral span `[y - w/2, y + w/2]` touches or crosses a line
/// between two lanes. Contact is inclusive.
pub fn on_marker(vehicle: &VehicleState, road: &RoadConfig) -> bool {
    on_marker_at(vehicle.y, road)
}

pub fn on_marker_at(y: f64, road: &RoadConfig) -> bool {
    let lo = y - 0.5 * road.vehicle_width;
    let hi = y + 0.5 * road.vehicle_width;
    road.marker_lines().any(|b| lo <= b && b <= hi)
}

/// Index of the marker line the span touches, lowest first.
pub fn marker_index(y: f64, road: &RoadConfig) -> Option<usize> {
    let lo = y - 0.5 * road.vehicle_width;
    let hi = y + 0.5 * road.vehicle_width;
    road.marker_lines().position(|b| lo <= b && b <= hi)
}
