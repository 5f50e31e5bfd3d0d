use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Road geometry. Lane 0 is the rightmost lane and its center is `y = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoadConfig {
    pub lane_count: usize,
    pub lane_width: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    /// Length of the simulated window centered on the AV. Environment cars
    /// leaving it are respawned at the opposite end.
    pub road_length: f64,
    pub vehicle_length: f64,
    pub vehicle_width: f64,
}

impl Default for RoadConfig {
    fn default() -> Self {
        Self {
            lane_count: 3,
            lane_width: 3.6,
            speed_min: 20.0,
            speed_max: 30.0,
            road_length: 400.0,
            vehicle_length: 4.8,
            vehicle_width: 1.8,
        }
    }
}

impl RoadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lane_count != 3 {
            return Err(Error::Config(format!(
                "lane_count must be 3, got {}",
                self.lane_count
            )));
        }
        if !(self.lane_width > self.vehicle_width) {
            return Err(Error::Config(
                "lane_width must exceed vehicle_width".into(),
            ));
        }
        if !(self.speed_min < self.speed_max) || self.speed_min < 0.0 {
            return Err(Error::Config(
                "need 0 <= speed_min < speed_max".into(),
            ));
        }
        if !(self.vehicle_length > 0.0 && self.vehicle_width > 0.0) {
            return Err(Error::Config("vehicle dimensions must be positive".into()));
        }
        if !(self.road_length > 10.0 * self.vehicle_length) {
            return Err(Error::Config("road_length too short".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn lane_center(&self, lane: usize) -> f64 {
        lane as f64 * self.lane_width
    }

    /// Lane whose center is closest to `y`, clamped to the road.
    #[inline]
    pub fn lane_of(&self, y: f64) -> usize {
        let l = (y / self.lane_width).round();
        if l <= 0.0 {
            0
        } else {
            (l as usize).min(self.lane_count - 1)
        }
    }

    /// Lateral positions of the painted lines between lanes.
    pub fn marker_lines(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.lane_count - 1).map(move |k| (k as f64 + 0.5) * self.lane_width)
    }

    pub fn half_length(&self) -> f64 {
        0.5 * self.road_length
    }
}

/// Magnitudes behind the discrete actions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub dt: f64,
    pub accel: f64,
    pub brake: f64,
    pub hard_brake: f64,
    /// Steps needed to move one full lane width.
    pub lane_change_steps: u8,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            dt: 1.0,
            accel: 2.0,
            brake: -2.0,
            hard_brake: -4.0,
            lane_change_steps: 3,
        }
    }
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
        if !(self.accel > 0.0 && self.brake < 0.0 && self.hard_brake < self.brake) {
            return Err(Error::Config(
                "need accel > 0 > brake > hard_brake".into(),
            ));
        }
        if self.lane_change_steps == 0 {
            return Err(Error::Config("lane_change_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Parameters of the rule-based environment drivers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub desired_speed_min: f64,
    pub desired_speed_max: f64,
    /// Per-step probability of attempting a lane change.
    pub lane_change_prob: f64,
    /// Predicted time headway below which the driver brakes hard.
    pub hard_headway: f64,
    /// Predicted time headway below which the driver brakes.
    pub brake_headway: f64,
    /// Headway required before the driver accelerates.
    pub follow_headway: f64,
    /// Bumper gap below which the driver always brakes hard.
    pub min_gap: f64,
    /// Minimum bumper gap to the new leader when merging.
    pub merge_front_gap: f64,
    /// Minimum time headway of the new follower when merging.
    pub merge_rear_headway: f64,
    /// Longitudinal window in which a converging lane change counts as a conflict.
    pub conflict_window: f64,
    /// Minimum center distance between same-lane cars at spawn time.
    pub spawn_gap: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            desired_speed_min: 22.0,
            desired_speed_max: 30.0,
            lane_change_prob: 0.02,
            hard_headway: 0.8,
            brake_headway: 1.5,
            follow_headway: 2.0,
            min_gap: 3.0,
            merge_front_gap: 10.0,
            merge_rear_headway: 1.5,
            conflict_window: 25.0,
            spawn_gap: 25.0,
        }
    }
}

impl TrafficConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lane_change_prob) {
            return Err(Error::Config("lane_change_prob must be in [0,1]".into()));
        }
        if !(self.desired_speed_min <= self.desired_speed_max) {
            return Err(Error::Config(
                "desired_speed_min must not exceed desired_speed_max".into(),
            ));
        }
        if !(self.hard_headway <= self.brake_headway && self.brake_headway <= self.follow_headway) {
            return Err(Error::Config(
                "need hard_headway <= brake_headway <= follow_headway".into(),
            ));
        }
        Ok(())
    }
}

/// Thresholds of the AV's one-step safety filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafetyConfig {
    /// Predicted time headway to the car ahead below which an action is rejected.
    pub hard_headway: f64,
    /// Predicted bumper gap below which an action is rejected.
    pub min_gap: f64,
}

impl Default for SafetyConfig {
    fn default() -> Self {
        Self {
            hard_headway: 0.5,
            min_gap: 2.0,
        }
    }
}

/// Everything that determines the transition dynamics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub road: RoadConfig,
    pub dynamics: DynamicsConfig,
    pub traffic: TrafficConfig,
    pub safety: SafetyConfig,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.road.validate()?;
        self.dynamics.validate()?;
        self.traffic.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_road() {
        let mut r = RoadConfig::default();
        r.lane_count = 4;
        assert!(r.validate().is_err());
        let mut r = RoadConfig::default();
        r.vehicle_width = 3.6;
        assert!(r.validate().is_err());
        let mut r = RoadConfig::default();
        r.speed_min = 31.0;
        assert!(r.validate().is_err());
    }

    #[test]
    fn lane_of_rounds_and_clamps() {
        let r = RoadConfig::default();
        assert_eq!(r.lane_of(-3.0), 0);
        assert_eq!(r.lane_of(1.2), 0);
        assert_eq!(r.lane_of(2.4), 1);
        assert_eq!(r.lane_of(7.2), 2);
        assert_eq!(r.lane_of(50.0), 2);
        let lines: Vec<f64> = r.marker_lines().collect();
        assert_eq!(lines.len(), 2);
        assert!((lines[0] - 1.8).abs() < 1e-12 && (lines[1] - 5.4).abs() < 1e-12);
    }
}
