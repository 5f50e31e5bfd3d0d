//! Versioned binary container for a trained Q-network.
//!
//! Layout (little-endian):
//! `b"HWYQCKPT"`, `u32` version, `u64` metadata length, metadata as JSON,
//! `u64` parameter count, parameters as `f64`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ddqn::TrainConfig;
use super::network::QNetwork;
use super::scaling::ObservationScaling;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"HWYQCKPT";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    /// Which agent the network drives, e.g. `"av"` or `"attacker"`.
    pub agent: String,
    pub layer_dims: Vec<usize>,
    pub scaling: ObservationScaling,
    pub train: TrainConfig,
    /// Digest of the experiment configuration that produced the network.
    #[serde(default)]
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn from_network<T: Scalar>(net: &QNetwork<T>, agent: &str, scaling: ObservationScaling, train: TrainConfig, config_hash: String) -> Self {
        Self {
            meta: CheckpointMeta {
                agent: agent.to_string(),
                layer_dims: net.layer_dims().to_vec(),
                scaling,
                train,
                config_hash,
            },
            params: net.params().iter().map(|p| p.as_f64()).collect(),
        }
    }

    pub fn network<T: Scalar>(&self) -> Result<QNetwork<T>> {
        let params = self.params.iter().map(|p| T::lit(*p)).collect();
        QNetwork::from_params(&self.meta.layer_dims, params)
            .ok_or_else(|| Error::Checkpoint("parameter count does not match layer dims".into()))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta = serde_json::to_vec(&self.meta)?;
        let mut out = Vec::with_capacity(28 + meta.len() + 8 * self.params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: &str| Error::Checkpoint(m.to_string());
        let mut magic = [0u8; 8];
        bytes.read_exact(&mut magic).map_err(|_| corrupt("truncated header"))?;
        if &magic != MAGIC {
            return Err(corrupt("not a checkpoint file"));
        }
        let mut u32b = [0u8; 4];
        bytes.read_exact(&mut u32b).map_err(|_| corrupt("truncated header"))?;
        let version = u32::from_le_bytes(u32b);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let mut u64b = [0u8; 8];
        bytes.read_exact(&mut u64b).map_err(|_| corrupt("truncated header"))?;
        let meta_len = u64::from_le_bytes(u64b) as usize;
        if meta_len > bytes.len() {
            return Err(corrupt("truncated metadata"));
        }
        let (meta_bytes, rest) = bytes.split_at(meta_len);
        bytes = rest;
        let meta: CheckpointMeta =
            serde_json::from_slice(meta_bytes).map_err(|e| Error::Checkpoint(format!("bad metadata: {e}")))?;
        bytes.read_exact(&mut u64b).map_err(|_| corrupt("truncated parameter count"))?;
        let n = u64::from_le_bytes(u64b) as usize;
        if bytes.len() != n.checked_mul(8).ok_or_else(|| corrupt("bad parameter count"))? {
            return Err(corrupt("parameter block size mismatch"));
        }
        let params: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let ck = Self { meta, params };
        ck.network::<f64>()?;
        if !ck.params.iter().all(|p| p.is_finite()) {
            return Err(corrupt("non-finite parameter"));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }
}
