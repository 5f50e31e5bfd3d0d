use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Applies one update to a flat parameter buffer given its gradient.
pub trait Optimizer<T: Scalar>: Send {
    fn apply(&mut self, params: &mut [T], grads: &[T]);
}

#[derive(Clone, Debug)]
pub struct Sgd<T> {
    pub lr: T,
}

impl<T: Scalar> Optimizer<T> for Sgd<T> {
    fn apply(&mut self, params: &mut [T], grads: &[T]) {
        for (p, g) in params.iter_mut().zip(grads) {
            *p -= self.lr * *g;
        }
    }
}

#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: T, n_params: usize) -> Self {
        Self {
            lr,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            m: vec![T::zero(); n_params],
            v: vec![T::zero(); n_params],
            t: 0,
        }
    }
}

impl<T: Scalar> Optimizer<T> for Adam<T> {
    fn apply(&mut self, params: &mut [T], grads: &[T]) {
        self.t = self.t.saturating_add(1);
        let one = T::one();
        let c1 = one - self.beta1.powi(self.t);
        let c2 = one - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (one - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (one - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

pub fn build_optimizer<T: Scalar>(kind: OptimizerKind, lr: f64, n_params: usize) -> Box<dyn Optimizer<T>> {
    match kind {
        OptimizerKind::Sgd => Box::new(Sgd { lr: T::lit(lr) }),
        OptimizerKind::Adam => Box::new(Adam::new(T::lit(lr), n_params)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_step() {
        let mut p = vec![1.0, -2.0];
        Sgd { lr: 0.5 }.apply(&mut p, &[2.0, -4.0]);
        assert_eq!(p, vec![0.0, 0.0]);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut p = vec![0.0f64; 3];
        let mut opt = Adam::new(0.01, 3);
        opt.apply(&mut p, &[1.0, -3.0, 0.0]);
        assert!((p[0] + 0.01).abs() < 1e-9);
        assert!((p[1] - 0.01).abs() < 1e-9);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut p = vec![5.0f64];
        let mut opt = Adam::new(0.1, 1);
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.5)];
            opt.apply(&mut p, &g);
        }
        assert!((p[0] - 1.5).abs() < 1e-2);
    }
}
