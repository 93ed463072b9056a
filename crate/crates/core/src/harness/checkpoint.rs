//! Binary checkpoint: `MGGCKPT`, a `u32` format version, a length-prefixed
//! JSON fingerprint, then named `f32` parameter blobs. Integers and floats
//! are little-endian.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::config::{ArchFlags, ModelConfig, Objective};
use super::model::MggModel;
use crate::error::{MggError, Result};
use crate::params::ParamStore;

pub const CHECKPOINT_MAGIC: &[u8; 7] = b"MGGCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Hyperparameters a checkpoint was trained under. Loading compares the whole
/// record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub model: ModelConfig,
    pub arch: ArchFlags,
    pub objective: Objective,
    pub seed: u64,
}

impl Fingerprint {
    pub fn new(model: &ModelConfig, arch: ArchFlags, objective: Objective, seed: u64) -> Self {
        Fingerprint { model: model.clone(), arch, objective, seed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub fingerprint: Fingerprint,
    pub params: ParamStore<f32>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or_else(|| {
            MggError::Format(format!("checkpoint truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn len(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }
}

fn push_u32(out: &mut Vec<u8>, value: usize) -> Result<()> {
    let v = u32::try_from(value).map_err(|_| MggError::Format(format!("{value} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

impl Checkpoint {
    /// Builds the network this checkpoint belongs to and checks that every
    /// parameter is present with the right shape.
    pub fn model(&self) -> Result<MggModel> {
        let model = MggModel::new(&self.fingerprint.model, self.fingerprint.arch)?;
        model.check_params(&self.params)?;
        Ok(model)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let fp = serde_json::to_vec(&self.fingerprint)?;
        push_u32(&mut out, fp.len())?;
        out.extend_from_slice(&fp);
        push_u32(&mut out, self.params.len())?;
        for (name, value) in self.params.iter() {
            push_u32(&mut out, name.len())?;
            out.extend_from_slice(name.as_bytes());
            push_u32(&mut out, value.nrows())?;
            push_u32(&mut out, value.ncols())?;
            for x in value.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(CHECKPOINT_MAGIC.len())? != CHECKPOINT_MAGIC {
            return Err(MggError::Format("not a checkpoint: bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(MggError::Format(format!("unsupported checkpoint version {version}")));
        }
        let n = r.len()?;
        let fingerprint: Fingerprint = serde_json::from_slice(r.take(n)?)?;
        let count = r.len()?;
        let mut params = ParamStore::new();
        for _ in 0..count {
            let n = r.len()?;
            let name = std::str::from_utf8(r.take(n)?)
                .map_err(|_| MggError::Format("parameter name is not UTF-8".into()))?
                .to_string();
            let (rows, cols) = (r.len()?, r.len()?);
            let data = r.take(rows * cols * 4)?;
            let values = data.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
            let value = Array2::from_shape_vec((rows, cols), values).map_err(|e| MggError::Format(e.to_string()))?;
            params.insert(name, value)?;
        }
        if r.pos != bytes.len() {
            return Err(MggError::Format(format!("{} trailing bytes after checkpoint", bytes.len() - r.pos)));
        }
        Ok(Checkpoint { fingerprint, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Loads and rejects a checkpoint whose fingerprint differs from `expected`.
    pub fn load_expecting(path: &Path, expected: &Fingerprint) -> Result<Self> {
        let ckpt = Self::load(path)?;
        ckpt.check_fingerprint(expected)?;
        Ok(ckpt)
    }

    pub fn check_fingerprint(&self, expected: &Fingerprint) -> Result<()> {
        if &self.fingerprint != expected {
            return Err(MggError::FingerprintMismatch {
                expected: serde_json::to_string(expected)?,
                found: serde_json::to_string(&self.fingerprint)?,
            });
        }
        Ok(())
    }
}
