//! Checkpoints: a JSON metadata file next to a little-endian f64 blob.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::model::{Architecture, LearnedLaw};
use super::NetworkError;

pub const CHECKPOINT_FORMAT: &str = "conslaw-checkpoint-1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format: String,
    pub architecture: Architecture,
    pub n_params: usize,
    /// Blob file name, relative to the metadata file.
    pub params_file: String,
    /// Free-form provenance (problem, epoch, losses, grid).
    #[serde(default)]
    pub info: serde_json::Value,
}

fn blob_path(json_path: &Path, name: &str) -> PathBuf {
    json_path.parent().unwrap_or(Path::new(".")).join(name)
}

pub fn encode_f64(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode_f64(bytes: &[u8]) -> Result<Vec<f64>, NetworkError> {
    if bytes.len() % 8 != 0 {
        return Err(NetworkError::Format(format!("blob length {} is not a multiple of 8", bytes.len())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// Writes `<stem>.json` and `<stem>.f64`.
pub fn save_checkpoint(model: &LearnedLaw, info: serde_json::Value, json_path: &Path) -> Result<(), NetworkError> {
    let stem = json_path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| NetworkError::Format(format!("bad checkpoint path {}", json_path.display())))?;
    let params_file = format!("{stem}.f64");
    let meta = CheckpointMeta {
        format: CHECKPOINT_FORMAT.to_string(),
        architecture: model.arch.clone(),
        n_params: model.n_params(),
        params_file: params_file.clone(),
        info,
    };
    fs::write(blob_path(json_path, &params_file), encode_f64(&model.flatten()))?;
    fs::write(json_path, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

pub fn load_checkpoint(json_path: &Path) -> Result<(LearnedLaw, CheckpointMeta), NetworkError> {
    let meta: CheckpointMeta = serde_json::from_str(&fs::read_to_string(json_path)?)?;
    if meta.format != CHECKPOINT_FORMAT {
        return Err(NetworkError::Format(format!("unknown checkpoint format `{}`", meta.format)));
    }
    let flat = decode_f64(&fs::read(blob_path(json_path, &meta.params_file))?)?;
    let mut model = LearnedLaw::new(meta.architecture.clone(), 0);
    model.load_flat(&flat)?;
    if meta.n_params != flat.len() {
        return Err(NetworkError::ParamCount { expected: meta.n_params, found: flat.len() });
    }
    Ok((model, meta))
}
