use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Digest of one input file, keyed by file name so that the hash does not
/// depend on where the inputs live.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub name: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn new(path: &Path, bytes: &[u8]) -> Self {
        Self {
            path: path.display().to_string(),
            name: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            sha256: sha256_hex(bytes),
        }
    }
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<InputDigest>,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub output_dir: Option<String>,
    pub config_hash: String,
}

#[derive(Serialize)]
struct HashedPart<'a> {
    tool_version: &'a str,
    subcommand: &'a str,
    parameters: &'a BTreeMap<String, String>,
    inputs: Vec<(&'a str, &'a str)>,
    seed: u64,
    tolerances: &'a BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        parameters: BTreeMap<String, String>,
        inputs: Vec<InputDigest>,
        seed: u64,
        tolerances: BTreeMap<String, f64>,
        output_dir: Option<&Path>,
    ) -> Self {
        let mut m = Self {
            tool: "fibersim",
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            parameters,
            inputs,
            seed,
            tolerances,
            output_dir: output_dir.map(|p| p.display().to_string()),
            config_hash: String::new(),
        };
        m.config_hash = m.compute_hash();
        m
    }

    /// SHA-256 over version, subcommand, parameters, input names and
    /// contents, seed and tolerances. Paths and the output directory are
    /// excluded.
    pub fn compute_hash(&self) -> String {
        let part = HashedPart {
            tool_version: self.tool_version,
            subcommand: &self.subcommand,
            parameters: &self.parameters,
            inputs: self.inputs.iter().map(|i| (i.name.as_str(), i.sha256.as_str())).collect(),
            seed: self.seed,
            tolerances: &self.tolerances,
        };
        sha256_hex(&serde_json::to_vec(&part).expect("serializable"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(out: Option<&Path>, path: &str) -> RunManifest {
        let inputs = vec![InputDigest::new(Path::new(path), b"{}")];
        RunManifest::new("topology validate", BTreeMap::new(), inputs, 7, BTreeMap::new(), out)
    }

    #[test]
    fn hash_ignores_locations() {
        let a = manifest(Some(Path::new("/tmp/a")), "/x/top.json");
        let b = manifest(None, "top.json");
        assert_eq!(a.config_hash, b.config_hash);
        assert_eq!(a.config_hash.len(), 64);
    }

    #[test]
    fn hash_tracks_seed_and_content() {
        let a = manifest(None, "top.json");
        let mut b = a.clone();
        b.seed = 8;
        assert_ne!(a.config_hash, b.compute_hash());
        let c = RunManifest::new(
            "topology validate",
            BTreeMap::new(),
            vec![InputDigest::new(Path::new("top.json"), b"[]")],
            7,
            BTreeMap::new(),
            None,
        );
        assert_ne!(a.config_hash, c.config_hash);
    }
}
