use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::GlobalConfig;

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub command: Vec<String>,
    pub seed: u64,
    pub threads: usize,
    pub config_sha256: String,
    pub config: GlobalConfig,
}

pub fn config_hash(cfg: &GlobalConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

impl Manifest {
    pub fn new(command: Vec<String>, cfg: &GlobalConfig) -> Self {
        Self {
            tool: "afc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            core_version: afc_core::VERSION.into(),
            command,
            seed: cfg.run.seed,
            threads: cfg.run.threads,
            config_sha256: config_hash(cfg),
            config: cfg.clone(),
        }
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| format!("manifest {}: {e}", path.display()))?;
        let h = config_hash(&m.config);
        if h != m.config_sha256 {
            return Err(format!(
                "manifest {}: config hash {h} does not match recorded {}",
                path.display(),
                m.config_sha256
            ));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_config() {
        let a = GlobalConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.run.seed = 1;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn round_trip_and_tamper_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("manifest.json");
        let m = Manifest::new(vec!["params".into()], &GlobalConfig::default());
        std::fs::write(&p, serde_json::to_string_pretty(&m).unwrap()).unwrap();
        assert_eq!(Manifest::read(&p).unwrap(), m);
        let mut bad = m.clone();
        bad.config.run.seed = 9;
        std::fs::write(&p, serde_json::to_string_pretty(&bad).unwrap()).unwrap();
        assert!(Manifest::read(&p).is_err());
    }
}
