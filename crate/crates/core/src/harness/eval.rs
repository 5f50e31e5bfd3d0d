//! Batch evaluation of a frozen AV, with or without an attacker, into a
//! failure-code histogram plus crash traces.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacker::{run_episode, AttackerPolicy, EpisodeOutcome};
use crate::av::{FrozenAv, RewardParams};
use crate::error::{Error, Result};
use crate::seeding::derive_seed;
use crate::sim::{init_world, SimConfig};

use super::trace::{EpisodeTrace, TraceFooter, TraceHeader, TRACE_FORMAT};

/// Index mixed into the base seed to separate evaluation worlds from
/// training worlds.
const EVAL_STREAM: u64 = 0xE7A1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcHistogram {
    pub config_hash: String,
    pub n_env_cars: usize,
    pub with_attacker: bool,
    pub episodes: u64,
    /// AV crashes per failure code.
    pub counts: [u64; 8],
    /// Of those, crashes whose partner was the attacker.
    pub attacker_involved: [u64; 8],
    pub total_crashes: u64,
}

impl FcHistogram {
    pub fn empty(config_hash: &str, n_env_cars: usize, with_attacker: bool) -> Self {
        Self {
            config_hash: config_hash.to_string(),
            n_env_cars,
            with_attacker,
            episodes: 0,
            counts: [0; 8],
            attacker_involved: [0; 8],
            total_crashes: 0,
        }
    }

    pub fn record(&mut self, outcome: &EpisodeOutcome) {
        self.episodes += 1;
        if let Some(fc) = outcome.failure_code() {
            self.counts[fc as usize] += 1;
            self.total_crashes += 1;
            if outcome.attacker_involved() {
                self.attacker_involved[fc as usize] += 1;
            }
        }
    }

    /// Crashes the AV is responsible for (codes 2 to 7).
    pub fn av_at_fault(&self) -> u64 {
        self.counts[2..].iter().sum()
    }

    pub fn crash_rate(&self) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            self.total_crashes as f64 / self.episodes as f64
        }
    }

    pub fn av_at_fault_rate(&self) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            self.av_at_fault() as f64 / self.episodes as f64
        }
    }

    /// Totals match the per-code counts and involvement never exceeds them.
    pub fn is_consistent(&self) -> bool {
        self.counts.iter().sum::<u64>() == self.total_crashes
            && self.total_crashes <= self.episodes
            && self.attacker_involved.iter().zip(&self.counts).all(|(a, c)| a <= c)
            && (self.with_attacker || self.attacker_involved.iter().all(|&a| a == 0))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let h: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            file: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        if !h.is_consistent() {
            return Err(Error::Parse {
                file: path.to_path_buf(),
                line: 1,
                msg: "totals do not match the per-code counts".into(),
            });
        }
        Ok(h)
    }
}

#[derive(Clone, Debug)]
pub struct EvalSetup {
    pub sim: SimConfig,
    pub reward: RewardParams,
    pub n_env_cars: usize,
    pub episodes: usize,
    pub step_limit: usize,
    pub seed: u64,
    pub config_hash: String,
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
    /// Directory for traces; `None` writes none.
    pub trace_dir: Option<PathBuf>,
    /// Also trace episodes that end without a crash.
    pub trace_all: bool,
}

#[derive(Clone, Debug)]
pub struct EvalOutput {
    pub histogram: FcHistogram,
    pub traces: Vec<PathBuf>,
}

/// Initial-world seed of evaluation episode `index`.
pub fn eval_episode_seed(base: u64, index: u64) -> u64 {
    derive_seed(derive_seed(base, EVAL_STREAM), index)
}

pub fn trace_file_name(index: u64) -> String {
    format!("episode_{index:07}.jsonl")
}

/// Runs `setup.episodes` independent episodes. Counts do not depend on the
/// number of workers: every episode owns its world and seed, and counts
/// commute.
pub fn evaluate(setup: &EvalSetup, av: &FrozenAv, attacker: Option<&dyn AttackerPolicy>) -> Result<EvalOutput> {
    setup.sim.validate()?;
    if let Some(dir) = &setup.trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    let with_attacker = attacker.is_some();
    let run_one = |i: u64| -> Result<(EpisodeOutcome, Option<PathBuf>)> {
        let seed = eval_episode_seed(setup.seed, i);
        let world = init_world(&setup.sim, seed, setup.n_env_cars, with_attacker)?;
        let record = setup.trace_dir.is_some();
        let (outcome, steps) = run_episode(world, av, attacker, &setup.reward, setup.step_limit, record);
        let mut path = None;
        if let (Some(dir), Some(steps)) = (&setup.trace_dir, steps) {
            if setup.trace_all || outcome.failure_code().is_some() {
                let trace = EpisodeTrace {
                    header: TraceHeader {
                        format: TRACE_FORMAT.to_string(),
                        config_hash: setup.config_hash.clone(),
                        seed,
                        episode_id: i,
                        n_env_cars: setup.n_env_cars,
                        with_attacker,
                        step_limit: setup.step_limit,
                        sim: setup.sim,
                    },
                    steps,
                    footer: TraceFooter {
                        failure_code: outcome.failure_code(),
                        termination: outcome.termination.clone(),
                        steps: outcome.steps,
                        cumulative_av_reward: outcome.cumulative_av_reward,
                        cumulative_attacker_reward: outcome.cumulative_attacker_reward,
                    },
                };
                let p = dir.join(trace_file_name(i));
                trace.save(&p)?;
                path = Some(p);
            }
        }
        Ok((outcome, path))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(setup.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Result<Vec<(EpisodeOutcome, Option<PathBuf>)>> =
        pool.install(|| (0..setup.episodes as u64).into_par_iter().map(run_one).collect());
    let mut histogram = FcHistogram::empty(&setup.config_hash, setup.n_env_cars, with_attacker);
    let mut traces = Vec::new();
    for (outcome, path) in results? {
        histogram.record(&outcome);
        traces.extend(path);
    }
    Ok(EvalOutput { histogram, traces })
}
