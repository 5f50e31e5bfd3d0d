//! Q-network, optimizers, replay and the Double-DQN learner.

pub mod checkpoint;
pub mod ddqn;
pub mod network;
pub mod optim;
pub mod replay;
pub mod scaling;

pub use checkpoint::{Checkpoint, CheckpointMeta};
pub use ddqn::{act, ddqn_target, EpsilonSchedule, Learner, TrainConfig};
pub use network::{argmax, Activations, QNetwork};
pub use optim::{build_optimizer, Adam, Optimizer, OptimizerKind, Sgd};
pub use replay::{DualReplay, ReplayBuffer, Transition};
pub use scaling::ObservationScaling;
