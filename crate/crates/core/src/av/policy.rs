use crate::error::{Error, Result};
use crate::rl::{argmax, Checkpoint, ObservationScaling, QNetwork};
use crate::sim::{safety_check, DiscreteAction, WorldState, AV_ID};

use super::observation::{observe_av_raw, AV_OBS_DIM};

/// Trained AV policy with learning switched off: greedy action, then the
/// one-step safety filter when enabled. Immutable and shareable.
#[derive(Clone, Debug)]
pub struct FrozenAv {
    net: QNetwork<f64>,
    scaling: ObservationScaling,
    pub safety_check: bool,
}

impl FrozenAv {
    pub fn new(net: QNetwork<f64>, scaling: ObservationScaling, safety_check: bool) -> Result<Self> {
        if net.input_dim() != AV_OBS_DIM || scaling.dim() != AV_OBS_DIM {
            return Err(Error::Checkpoint(format!(
                "AV network expects {} inputs, got {}",
                AV_OBS_DIM,
                net.input_dim()
            )));
        }
        if net.output_dim() != DiscreteAction::COUNT {
            return Err(Error::Checkpoint("AV network must have 12 outputs".into()));
        }
        Ok(Self {
            net,
            scaling,
            safety_check,
        })
    }

    pub fn from_checkpoint(ck: &Checkpoint, safety_check: bool) -> Result<Self> {
        if ck.meta.agent != "av" {
            return Err(Error::Checkpoint(format!("expected an AV checkpoint, found '{}'", ck.meta.agent)));
        }
        Self::new(ck.network()?, ck.meta.scaling.clone(), safety_check)
    }

    pub fn network(&self) -> &QNetwork<f64> {
        &self.net
    }

    pub fn scaling(&self) -> &ObservationScaling {
        &self.scaling
    }

    /// Greedy action on a raw (unscaled) observation, before filtering.
    pub fn greedy(&self, raw: &[f64]) -> DiscreteAction {
        let q = self.net.forward(&self.scaling.apply::<f64>(raw));
        DiscreteAction::from_index(argmax(&q)).expect("12 outputs")
    }

    /// Action the AV executes in `world`.
    pub fn act(&self, world: &WorldState) -> DiscreteAction {
        let proposed = self.greedy(&observe_av_raw(world, AV_ID));
        if self.safety_check {
            safety_check(world, AV_ID, proposed)
        } else {
            proposed
        }
    }
}
