//! Double-DQN learner: online network selects, target network evaluates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{argmax, Activations, QNetwork};
use super::optim::{build_optimizer, Optimizer, OptimizerKind};
use super::replay::{DualReplay, Transition};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::DiscreteAction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub eps_start: f64,
    /// Linear decrease of epsilon per global environment step.
    pub eps_decay: f64,
    pub eps_floor: f64,
    pub steps_per_episode: usize,
    pub episodes: usize,
    pub batch_size: usize,
    /// Gradient updates between hard copies of the online net to the target.
    pub target_sync: usize,
    pub normal_capacity: usize,
    pub crash_capacity: usize,
    pub mix_fraction: f64,
    pub hidden: Vec<usize>,
    /// Environment steps per gradient update.
    pub train_every: usize,
    /// Episodes between greedy evaluation points of the training curve.
    pub eval_every: usize,
    pub eval_rollouts: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            learning_rate: 1e-6,
            optimizer: OptimizerKind::Sgd,
            eps_start: 0.2,
            eps_decay: 2e-6,
            eps_floor: 0.01,
            steps_per_episode: 200,
            episodes: 10_000,
            batch_size: 32,
            target_sync: 1000,
            normal_capacity: 100_000,
            crash_capacity: 10_000,
            mix_fraction: 0.25,
            hidden: vec![64, 64],
            train_every: 1,
            eval_every: 100,
            eval_rollouts: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0 <= self.eps_floor && self.eps_floor <= self.eps_start && self.eps_start <= 1.0) {
            return bad("need 0 <= eps_floor <= eps_start <= 1");
        }
        if self.eps_decay < 0.0 {
            return bad("eps_decay must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.mix_fraction) {
            return bad("mix_fraction must be in [0, 1]");
        }
        if self.steps_per_episode == 0
            || self.batch_size == 0
            || self.target_sync == 0
            || self.normal_capacity == 0
            || self.crash_capacity == 0
            || self.train_every == 0
            || self.eval_every == 0
        {
            return bad("counts and capacities must be positive");
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return bad("hidden layer widths must be positive");
        }
        Ok(())
    }

    pub fn epsilon(&self) -> EpsilonSchedule {
        EpsilonSchedule {
            start: self.eps_start,
            decay: self.eps_decay,
            floor: self.eps_floor,
        }
    }

    pub fn layer_dims(&self, input: usize) -> Vec<usize> {
        let mut dims = vec![input];
        dims.extend(&self.hidden);
        dims.push(DiscreteAction::COUNT);
        dims
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub decay: f64,
    pub floor: f64,
}

impl EpsilonSchedule {
    pub fn at(&self, step: u64) -> f64 {
        (self.start - self.decay * step as f64).max(self.floor)
    }
}

/// Bootstrapped target for one transition.
pub fn ddqn_target<T: Scalar>(online: &QNetwork<T>, target: &QNetwork<T>, tr: &Transition<T>, gamma: T) -> T {
    if tr.terminal || gamma == T::zero() {
        return tr.r;
    }
    let a_star = argmax(&online.forward(&tr.s_next));
    tr.r + gamma * target.forward(&tr.s_next)[a_star]
}

/// Epsilon-greedy choice. One uniform draw decides exploration; a second
/// picks the random action.
pub fn act<T: Scalar, R: Rng + ?Sized>(net: &QNetwork<T>, s: &[T], eps: f64, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    if u < eps {
        rng.gen_range(0..net.output_dim())
    } else {
        argmax(&net.forward(s))
    }
}

pub struct Learner<T: Scalar> {
    pub online: QNetwork<T>,
    pub target: QNetwork<T>,
    optimizer: Box<dyn Optimizer<T>>,
    gamma: T,
    batch_size: usize,
    target_sync: usize,
    updates: u64,
    grad: Vec<T>,
    cache: Activations<T>,
    rng: ChaCha8Rng,
}

impl<T: Scalar> Learner<T> {
    pub fn new(online: QNetwork<T>, cfg: &TrainConfig, rng_seed: u64) -> Self {
        let n = online.params().len();
        Self {
            target: online.clone(),
            optimizer: build_optimizer(cfg.optimizer, cfg.learning_rate, n),
            gamma: T::lit(cfg.gamma),
            batch_size: cfg.batch_size,
            target_sync: cfg.target_sync,
            updates: 0,
            grad: vec![T::zero(); n],
            cache: Activations::default(),
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            online,
        }
    }

    pub fn with_optimizer(mut self, optimizer: Box<dyn Optimizer<T>>) -> Self {
        self.optimizer = optimizer;
        self
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn sync_target(&mut self) {
        self.target.params_mut().copy_from_slice(self.online.params());
    }

    /// One update from a batch drawn from `replay`. `Ok(None)` when the
    /// normal buffer holds fewer than a batch.
    pub fn train_step(&mut self, replay: &DualReplay<T>) -> Result<Option<T>> {
        if replay.normal.len() < self.batch_size {
            return Ok(None);
        }
        let mut rng = std::mem::replace(&mut self.rng, ChaCha8Rng::seed_from_u64(0));
        let batch = replay.sample_batch(&mut rng, self.batch_size);
        self.rng = rng;
        self.fit(&batch).map(Some)
    }

    /// Gradient step on the mean loss of `batch`; returns that mean loss.
    pub fn fit(&mut self, batch: &[&Transition<T>]) -> Result<T> {
        assert!(!batch.is_empty(), "empty batch");
        let targets: Vec<T> = batch
            .iter()
            .map(|tr| ddqn_target(&self.online, &self.target, tr, self.gamma))
            .collect();
        self.grad.iter_mut().for_each(|g| *g = T::zero());
        let mut loss = T::zero();
        for (tr, y) in batch.iter().zip(&targets) {
            loss += self.online.backward(&tr.s, tr.a, *y, &mut self.grad, &mut self.cache);
        }
        let n = T::lit(batch.len() as f64);
        loss /= n;
        for g in &mut self.grad {
            *g /= n;
        }
        if !loss.is_finite() {
            return Err(Error::Divergence(format!("non-finite loss after {} updates", self.updates)));
        }
        self.optimizer.apply(self.online.params_mut(), &self.grad);
        if !self.online.all_finite() {
            return Err(Error::Divergence(format!("non-finite parameters after {} updates", self.updates + 1)));
        }
        self.updates += 1;
        if self.updates % self.target_sync as u64 == 0 {
            self.sync_target();
        }
        Ok(loss)
    }
}


/// Deterministic 5-state chain used to check the learner against value
/// iteration. Actions 0..6 step left, 6..12 step right; taking "right" in
/// the last state pays 1 and stays there.
pub mod chain {
    use super::*;
    use crate::rl::optim::Sgd;

    pub const STATES: usize = 5;
    pub const GAMMA: f64 = 0.9;

    pub fn transition(s: usize, a: usize) -> (usize, f64) {
        if a < 6 {
            (s.saturating_sub(1), 0.0)
        } else if s + 1 < STATES {
            (s + 1, 0.0)
        } else {
            (s, 1.0)
        }
    }

    pub fn value_iteration() -> Vec<[f64; 12]> {
        let mut q = vec![[0.0; 12]; STATES];
        for _ in 0..2000 {
            let prev = q.clone();
            for (s, row) in q.iter_mut().enumerate() {
                for (a, v) in row.iter_mut().enumerate() {
                    let (n, r) = transition(s, a);
                    let best = prev[n].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    *v = r + GAMMA * best;
                }
            }
        }
        q
    }

    fn encode(s: usize) -> Vec<f64> {
        let mut v = vec![0.0; STATES];
        v[s] = 1.0;
        v
    }

    /// Trains a one-hot linear Q-network with uniform exploration for
    /// `steps` updates. Returns the learned table and the reference table.
    pub fn train_and_solve(steps: usize, seed: u64) -> (Vec<[f64; 12]>, Vec<[f64; 12]>) {
        let cfg = TrainConfig {
            gamma: GAMMA,
            batch_size: 32,
            target_sync: 200,
            ..TrainConfig::default()
        };
        let mut learner =
            Learner::new(QNetwork::<f64>::zeros(&[STATES, 12]), &cfg, seed).with_optimizer(Box::new(Sgd { lr: 0.5 }));
        let mut replay = DualReplay::new(10_000, 10, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = 0;
        let mut episode = Vec::new();
        for _ in 0..steps {
            let a = rng.gen_range(0..12);
            let (n, r) = transition(s, a);
            episode.push(Transition {
                s: encode(s),
                a,
                r,
                s_next: encode(n),
                terminal: false,
            });
            s = if rng.gen_bool(0.05) { rng.gen_range(0..STATES) } else { n };
            if episode.len() == 50 {
                replay.push_episode(std::mem::take(&mut episode), None);
            }
            learner.train_step(&replay).expect("finite");
        }
        let q = (0..STATES)
            .map(|s| {
                let out = learner.online.forward(&encode(s));
                let mut row = [0.0; 12];
                row.copy_from_slice(&out);
                row
            })
            .collect();
        (q, value_iteration())
    }
}
