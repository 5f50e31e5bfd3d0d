//! Experiment plumbing: configuration, evaluation, traces, training curves
//! and crash tables.

pub mod config;
pub mod curve;
pub mod eval;
pub mod report;
pub mod trace;

pub use config::ExperimentConfig;
pub use curve::CurvePoint;
pub use eval::{evaluate, EvalOutput, EvalSetup, FcHistogram};
pub use report::{Report, ReportRow};
pub use trace::{EpisodeTrace, StepRecord};
