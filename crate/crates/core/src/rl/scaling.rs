use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Per-component affine map `z = (x - offset) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationScaling {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ObservationScaling {
    pub fn new(offset: Vec<f64>, scale: Vec<f64>) -> Self {
        assert_eq!(offset.len(), scale.len(), "offset/scale length mismatch");
        assert!(scale.iter().all(|s| *s != 0.0 && s.is_finite()), "scales must be finite and non-zero");
        Self { offset, scale }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply<T: Scalar>(&self, raw: &[f64]) -> Vec<T> {
        assert_eq!(raw.len(), self.dim(), "observation dimension mismatch");
        raw.iter()
            .zip(self.offset.iter().zip(&self.scale))
            .map(|(x, (o, s))| T::lit((x - o) / s))
            .collect()
    }

    pub fn invert(&self, scaled: &[f64]) -> Vec<f64> {
        scaled
            .iter()
            .zip(self.offset.iter().zip(&self.scale))
            .map(|(z, (o, s))| z * s + o)
            .collect()
    }
}
