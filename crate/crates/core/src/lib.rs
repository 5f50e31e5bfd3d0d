pub mod attacker;
pub mod av;
pub mod error;
pub mod harness;
pub mod judge;
pub mod rl;
pub mod scalar;
pub mod seeding;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type QNetwork64 = rl::QNetwork<f64>;
pub type QNetwork32 = rl::QNetwork<f32>;
pub type Learner64 = rl::Learner<f64>;
pub type Learner32 = rl::Learner<f32>;
