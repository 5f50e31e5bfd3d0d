//! Line-delimited JSON episode traces: one header line, one line per step,
//! one footer line. A trace is replayable from its header and action stream.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attacker::reward::Termination;
use crate::error::{Error, Result};
use crate::sim::{init_world, JointActions, SimConfig, VehicleState};

pub const TRACE_FORMAT: &str = "highway-trace/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub config_hash: String,
    pub seed: u64,
    pub episode_id: u64,
    pub n_env_cars: usize,
    pub with_attacker: bool,
    pub step_limit: usize,
    pub sim: SimConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Step index of the post-step state.
    pub step: u64,
    /// Written as `[id, action]` pairs; map keys would turn into strings.
    #[serde(with = "action_pairs")]
    pub actions: JointActions,
    /// Every vehicle after the step.
    pub vehicles: Vec<VehicleState>,
    pub av_reward: f64,
    pub attacker_reward: Option<f64>,
}

mod action_pairs {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::sim::{DiscreteAction, JointActions, VehicleId};

    pub fn serialize<S: Serializer>(actions: &JointActions, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(actions.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<JointActions, D::Error> {
        let pairs = Vec::<(VehicleId, DiscreteAction)>::deserialize(d)?;
        Ok(pairs.into_iter().collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFooter {
    pub termination: Termination,
    pub steps: usize,
    pub failure_code: Option<u8>,
    pub cumulative_av_reward: f64,
    pub cumulative_attacker_reward: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TraceLine {
    Header(TraceHeader),
    Step(StepRecord),
    Footer(TraceFooter),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeTrace {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
    pub footer: TraceFooter,
}

impl EpisodeTrace {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &TraceLine::Header(self.header.clone()))?;
        w.write_all(b"\n")?;
        for s in &self.steps {
            serde_json::to_writer(&mut w, &TraceLine::Step(s.clone()))?;
            w.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut w, &TraceLine::Footer(self.footer.clone()))?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = BufReader::new(std::fs::File::open(path)?);
        let parse = |line: usize, msg: String| Error::Parse {
            file: path.to_path_buf(),
            line,
            msg,
        };
        let mut header = None;
        let mut steps = Vec::new();
        let mut footer = None;
        for (i, line) in f.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TraceLine = serde_json::from_str(&line).map_err(|e| parse(i + 1, e.to_string()))?;
            match rec {
                TraceLine::Header(h) if header.is_none() && i == 0 => header = Some(h),
                TraceLine::Step(s) if header.is_some() && footer.is_none() => steps.push(s),
                TraceLine::Footer(f) if header.is_some() && footer.is_none() => footer = Some(f),
                _ => return Err(parse(i + 1, "record out of order".into())),
            }
        }
        let header = header.ok_or_else(|| parse(1, "missing header".into()))?;
        if header.format != TRACE_FORMAT {
            return Err(parse(1, format!("unknown trace format '{}'", header.format)));
        }
        let footer = footer.ok_or_else(|| parse(steps.len() + 2, "missing footer".into()))?;
        Ok(Self { header, steps, footer })
    }

    /// Re-simulates the action stream from the header's initial world and
    /// checks every recorded state bit for bit.
    pub fn replay(&self) -> Result<()> {
        let h = &self.header;
        let mut world = init_world(&h.sim, h.seed, h.n_env_cars, h.with_attacker)?;
        for rec in &self.steps {
            let (next, _) = world.step(&rec.actions);
            if next.step_index != rec.step || !next.vehicles_bitwise_eq(&rec.vehicles) {
                return Err(Error::Trace(format!(
                    "episode {} diverges from its trace at step {}",
                    h.episode_id, rec.step
                )));
            }
            world = next;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{env_joint_actions, DiscreteAction, Lateral, Longitudinal, AV_ID};

    fn short_trace(steps: usize) -> EpisodeTrace {
        let sim = SimConfig::default();
        let mut world = init_world(&sim, 7, 12, true).unwrap();
        let mut records = Vec::new();
        for k in 0..steps {
            let mut actions = env_joint_actions(&world);
            let ax = if k % 2 == 0 { Longitudinal::Accelerate } else { Longitudinal::Brake };
            actions.insert(AV_ID, DiscreteAction::new(ax, Lateral::Keep));
            let (next, _) = world.step(&actions);
            records.push(StepRecord {
                step: next.step_index,
                actions,
                vehicles: next.vehicles.clone(),
                av_reward: -0.25,
                attacker_reward: Some(-0.05),
            });
            world = next;
        }
        EpisodeTrace {
            header: TraceHeader {
                format: TRACE_FORMAT.into(),
                config_hash: "h".into(),
                seed: 7,
                episode_id: 3,
                n_env_cars: 12,
                with_attacker: true,
                step_limit: 200,
                sim,
            },
            steps: records,
            footer: TraceFooter {
                termination: Termination::Timeout,
                steps,
                failure_code: None,
                cumulative_av_reward: -0.25 * steps as f64,
                cumulative_attacker_reward: Some(-0.05 * steps as f64),
            },
        }
    }

    #[test]
    fn save_load_round_trip_and_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let trace = short_trace(15);
        trace.save(&path).unwrap();
        let back = EpisodeTrace::load(&path).unwrap();
        assert_eq!(back, trace);
        back.replay().unwrap();
    }

    #[test]
    fn replay_detects_tampering() {
        let mut trace = short_trace(5);
        trace.steps[3].vehicles[0].x += 1e-9;
        assert!(trace.replay().is_err());
    }

    #[test]
    fn truncated_trace_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        short_trace(4).save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut: Vec<&str> = text.lines().take(3).collect();
        std::fs::write(&path, cut.join("\n")).unwrap();
        match EpisodeTrace::load(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }
}
