//! Discrete-time kinematic simulation of a 3-lane highway.

pub mod action;
pub mod config;
pub mod env_policy;
pub mod safety;
pub mod vehicle;
pub mod world;

pub use action::{DiscreteAction, Lateral, Longitudinal};
pub use config::{DynamicsConfig, RoadConfig, SafetyConfig, SimConfig, TrafficConfig};
pub use env_policy::{env_joint_actions, env_policy};
pub use safety::{is_action_safe, safety_check};
pub use vehicle::{on_marker, LateralPhase, Role, Side, VehicleId, VehicleState};
pub use world::{init_world, CollisionEvent, JointActions, Neighbors, WorldState, ATTACKER_ID, AV_ID, NEIGHBOR_SLOTS};
