//! The autonomous vehicle: observation, reward, frozen policy and training.

pub mod observation;
pub mod policy;
pub mod reward;
pub mod train;

pub use observation::{av_scaling, observe_av_raw, AV_OBS_DIM};
pub use policy::FrozenAv;
pub use reward::{reward_av, RewardParams, RewardTerms};
pub use train::{evaluate_av, train_av, AvTrainOutput, AvTrainSetup};
