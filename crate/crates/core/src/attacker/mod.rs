//! The adversarial vehicle: observation, reward, policies, episode runner
//! and training.

pub mod episode;
pub mod observation;
pub mod policy;
pub mod reward;
pub mod train;

pub use episode::{run_episode, EpisodeOutcome};
pub use observation::{attacker_scaling, observe_attacker_raw, ATTACKER_OBS_DIM};
pub use policy::{AttackerPolicy, ConstantAttacker, NetworkAttacker, ScriptedAttacker};
pub use reward::{lookahead_reward, Lookahead, Termination};
pub use train::{evaluate_attacker, train_attacker, train_attacker_repeats, AttackerTrainOutput, AttackerTrainSetup};
