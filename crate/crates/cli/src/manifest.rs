//! Run manifests: what was run, on which input, with which parameters.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// SHA-256 of the problem file bytes.
    pub input_sha256: Option<String>,
    pub parameters: BTreeMap<String, Value>,
    pub versions: BTreeMap<String, String>,
    pub threads: usize,
    pub wall_time_s: f64,
    pub exit_code: i32,
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{:02x}", b)).collect()
}

impl RunManifest {
    pub fn new(subcommand: &str, threads: usize) -> RunManifest {
        let mut versions = BTreeMap::new();
        versions.insert("utm".into(), env!("CARGO_PKG_VERSION").into());
        versions.insert("utm-core".into(), utm_core::VERSION.into());
        RunManifest {
            subcommand: subcommand.into(),
            input_sha256: None,
            parameters: BTreeMap::new(),
            versions,
            threads,
            wall_time_s: 0.0,
            exit_code: 0,
            warnings: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, v: impl Into<Value>) {
        self.parameters.insert(key.into(), v.into());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serialises");
        s.push('\n');
        s
    }
}
