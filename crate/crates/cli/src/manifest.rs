//! Run manifest: config digest, artifact version, and the splittable
//! per-cell seed scheme. Seeds are hash-derived rather than drawn in
//! sequence so the parallelism degree cannot change sampled sets.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{hex_string, SweepConfig};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub digest: String,
    pub version: String,
    pub master_seed: u64,
    pub started_unix_ms: u128,
}

impl RunManifest {
    pub fn new(config: &SweepConfig) -> Self {
        RunManifest {
            digest: config.digest(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: config.seed,
            started_unix_ms: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|t| t.as_millis())
                .unwrap_or(0),
        }
    }
}

/// `cell_seed = sha256(master || p || e || d || family || trial)[..8]`,
/// little-endian fields, documented and stable.
pub fn cell_seed(master: u64, p: u64, e: u32, d: usize, family: &str, trial: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(p.to_le_bytes());
    hasher.update(e.to_le_bytes());
    hasher.update((d as u64).to_le_bytes());
    hasher.update(family.as_bytes());
    hasher.update(trial.to_le_bytes());
    let bytes = hasher.finalize();
    u64::from_le_bytes(bytes[..8].try_into().expect("sha256 is long enough"))
}

#[allow(dead_code)]
pub fn digest_of_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex_string(&hasher.finalize())
}
