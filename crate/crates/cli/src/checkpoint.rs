//! Versioned, checksummed state checkpoints.
//!
//! A checkpoint is a JSON envelope with a format version, a module tag, the
//! serialized payload, and a SHA-256 checksum of the payload's canonical
//! serialization. Loads verify all three before deserializing, so truncated
//! or tampered files and stale formats fail loudly instead of misparsing.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    module: String,
    checksum: String,
    payload: serde_json::Value,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("checkpoint version mismatch: file has {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint module mismatch: file has {found:?}, expected {expected:?}")]
    ModuleMismatch { found: String, expected: String },
    #[error("checkpoint checksum mismatch: payload does not match its recorded digest")]
    ChecksumMismatch,
}

fn digest(payload: &serde_json::Value) -> Result<String, serde_json::Error> {
    let canonical = serde_json::to_string(payload)?;
    let hash = Sha256::digest(canonical.as_bytes());
    Ok(hash.iter().map(|b| format!("{b:02x}")).collect())
}

/// Serializes `state` under `module` into a checksummed envelope at `path`.
pub fn save_checkpoint<T: Serialize>(
    state: &T,
    module: &str,
    path: &Path,
) -> Result<(), CheckpointError> {
    let payload = serde_json::to_value(state)?;
    let envelope = Envelope {
        format_version: FORMAT_VERSION,
        module: module.to_string(),
        checksum: digest(&payload)?,
        payload,
    };
    std::fs::write(path, serde_json::to_string(&envelope)?)?;
    Ok(())
}

/// Loads and verifies a checkpoint saved by [`save_checkpoint`].
pub fn load_checkpoint<T: DeserializeOwned>(
    path: &Path,
    module: &str,
) -> Result<T, CheckpointError> {
    let raw = std::fs::read_to_string(path)?;
    let envelope: Envelope = serde_json::from_str(&raw)?;
    if envelope.format_version != FORMAT_VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: envelope.format_version,
            expected: FORMAT_VERSION,
        });
    }
    if envelope.module != module {
        return Err(CheckpointError::ModuleMismatch {
            found: envelope.module,
            expected: module.to_string(),
        });
    }
    if digest(&envelope.payload)? != envelope.checksum {
        return Err(CheckpointError::ChecksumMismatch);
    }
    Ok(serde_json::from_value(envelope.payload)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Toy {
        values: Vec<f64>,
        label: String,
    }

    fn toy() -> Toy {
        Toy {
            values: vec![1.5, -0.25, 1.0 / 3.0],
            label: "x".into(),
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.ckpt");
        save_checkpoint(&toy(), "toy", &path).unwrap();
        let loaded: Toy = load_checkpoint(&path, "toy").unwrap();
        assert_eq!(loaded, toy());
    }

    #[test]
    fn truncated_file_fails() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.ckpt");
        save_checkpoint(&toy(), "toy", &path).unwrap();
        let raw = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &raw[..raw.len() / 2]).unwrap();
        assert!(load_checkpoint::<Toy>(&path, "toy").is_err());
    }

    #[test]
    fn tampered_payload_fails_the_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.ckpt");
        save_checkpoint(&toy(), "toy", &path).unwrap();
        let raw = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, raw.replace("1.5", "2.5")).unwrap();
        match load_checkpoint::<Toy>(&path, "toy") {
            Err(CheckpointError::ChecksumMismatch) => {}
            other => panic!("expected checksum mismatch, got {other:?}"),
        }
    }

    #[test]
    fn older_version_fails_explicitly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.ckpt");
        save_checkpoint(&toy(), "toy", &path).unwrap();
        let raw = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, raw.replace("\"format_version\":1", "\"format_version\":0")).unwrap();
        match load_checkpoint::<Toy>(&path, "toy") {
            Err(CheckpointError::VersionMismatch { found: 0, .. }) => {}
            other => panic!("expected version mismatch, got {other:?}"),
        }
    }

    #[test]
    fn module_tag_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.ckpt");
        save_checkpoint(&toy(), "toy", &path).unwrap();
        assert!(matches!(
            load_checkpoint::<Toy>(&path, "other"),
            Err(CheckpointError::ModuleMismatch { .. })
        ));
    }
}
