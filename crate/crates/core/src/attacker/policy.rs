use crate::error::{Error, Result};
use crate::rl::{argmax, Checkpoint, ObservationScaling, QNetwork};
use crate::sim::{DiscreteAction, WorldState};

use super::observation::{observe_attacker_raw, ATTACKER_OBS_DIM};

/// Decision rule of the adversarial vehicle. Receives the world and the
/// action the AV emitted this step.
pub trait AttackerPolicy: Sync {
    fn act(&self, world: &WorldState, av_action: DiscreteAction) -> DiscreteAction;
}

/// Greedy policy of a trained attacker network.
#[derive(Clone, Debug)]
pub struct NetworkAttacker {
    net: QNetwork<f64>,
    scaling: ObservationScaling,
}

impl NetworkAttacker {
    pub fn new(net: QNetwork<f64>, scaling: ObservationScaling) -> Result<Self> {
        if net.input_dim() != ATTACKER_OBS_DIM || scaling.dim() != ATTACKER_OBS_DIM {
            return Err(Error::Checkpoint(format!(
                "attacker network expects {} inputs, got {}",
                ATTACKER_OBS_DIM,
                net.input_dim()
            )));
        }
        if net.output_dim() != DiscreteAction::COUNT {
            return Err(Error::Checkpoint("attacker network must have 12 outputs".into()));
        }
        Ok(Self { net, scaling })
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.meta.agent != "attacker" {
            return Err(Error::Checkpoint(format!("expected an attacker checkpoint, found '{}'", ck.meta.agent)));
        }
        Self::new(ck.network()?, ck.meta.scaling.clone())
    }

    pub fn network(&self) -> &QNetwork<f64> {
        &self.net
    }
}

impl AttackerPolicy for NetworkAttacker {
    fn act(&self, world: &WorldState, av_action: DiscreteAction) -> DiscreteAction {
        let z = self.scaling.apply::<f64>(&observe_attacker_raw(world, av_action));
        DiscreteAction::from_index(argmax(&self.net.forward(&z))).expect("12 outputs")
    }
}

/// Always the same action.
#[derive(Clone, Copy, Debug)]
pub struct ConstantAttacker(pub DiscreteAction);

impl AttackerPolicy for ConstantAttacker {
    fn act(&self, _: &WorldState, _: DiscreteAction) -> DiscreteAction {
        self.0
    }
}

/// Policy given by a plain function, for scripted probes.
pub struct ScriptedAttacker<F>(pub F);

impl<F> AttackerPolicy for ScriptedAttacker<F>
where
    F: Fn(&WorldState, DiscreteAction) -> DiscreteAction + Sync,
{
    fn act(&self, world: &WorldState, av_action: DiscreteAction) -> DiscreteAction {
        (self.0)(world, av_action)
    }
}
