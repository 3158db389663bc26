//! Binary model file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      4 bytes  "RCWM"
//! version    u32
//! dim        u64
//! classes    u32
//! meta_len   u32
//! meta       meta_len bytes of JSON (TrainMetadata)
//! bias       classes x f64
//! weights    dim x classes x f64, feature-major
//! checksum   32 bytes, SHA-256 of everything above
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};

use super::model::{ModelParams, TrainMetadata};
use super::ModelError;
use crate::corpus::Label;
use crate::fsutil;

pub const MODEL_MAGIC: &[u8; 4] = b"RCWM";
pub const MODEL_FORMAT_VERSION: u32 = 1;

const CHECKSUM_LEN: usize = 32;

pub fn model_to_bytes(model: &ModelParams) -> Vec<u8> {
    let meta = serde_json::to_vec(&model.meta).expect("metadata serializes");
    let mut out = Vec::with_capacity(28 + meta.len() + 8 * (model.weights.len() + 7) + CHECKSUM_LEN);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(model.dim as u64).to_le_bytes());
    out.extend_from_slice(&(Label::COUNT as u32).to_le_bytes());
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(&meta);
    for b in model.bias {
        out.extend_from_slice(&b.to_le_bytes());
    }
    for w in &model.weights {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| ModelError::CorruptFile("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, ModelError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<ModelParams, ModelError> {
    if bytes.len() < 4 || &bytes[..4] != MODEL_MAGIC {
        return Err(ModelError::VersionMismatch("not a model file (bad magic)".into()));
    }
    let mut c = Cursor { bytes, pos: 4 };
    let version = c.u32()?;
    if version != MODEL_FORMAT_VERSION {
        return Err(ModelError::VersionMismatch(format!(
            "file version {version}, supported {MODEL_FORMAT_VERSION}"
        )));
    }
    if bytes.len() < CHECKSUM_LEN + 8 {
        return Err(ModelError::CorruptFile("truncated".into()));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != checksum {
        return Err(ModelError::CorruptFile("checksum mismatch".into()));
    }
    let mut c = Cursor { bytes: body, pos: 8 };
    let dim = c.u64()? as usize;
    let classes = c.u32()? as usize;
    if classes != Label::COUNT {
        return Err(ModelError::VersionMismatch(format!("{classes} classes, expected 7")));
    }
    let meta_len = c.u32()? as usize;
    let meta: TrainMetadata = serde_json::from_slice(c.take(meta_len)?)
        .map_err(|e| ModelError::CorruptFile(format!("metadata: {e}")))?;
    let mut bias = [0.0; Label::COUNT];
    for b in &mut bias {
        *b = c.f64()?;
    }
    let count = dim
        .checked_mul(classes)
        .ok_or_else(|| ModelError::CorruptFile("dimension overflow".into()))?;
    if body.len() - c.pos != count * 8 {
        return Err(ModelError::CorruptFile(format!(
            "expected {} weight bytes, found {}",
            count * 8,
            body.len() - c.pos
        )));
    }
    let weights = c.take(count * 8)?
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok(ModelParams {
        dim,
        weights,
        bias,
        meta,
    })
}

pub fn save_model(model: &ModelParams, path: &Path) -> Result<(), ModelError> {
    fsutil::write_atomic(path, &model_to_bytes(model)).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<ModelParams, ModelError> {
    let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    model_from_bytes(&bytes)
}
