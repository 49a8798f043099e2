//! Machine-readable run reports.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub fn digest(path: &Path) -> std::io::Result<FileDigest> {
    let bytes = std::fs::read(path)?;
    let hash = Sha256::digest(&bytes);
    let mut sha256 = String::with_capacity(64);
    for byte in hash {
        write!(sha256, "{byte:02x}").expect("writing to a string");
    }
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256,
    })
}

#[derive(Serialize)]
pub struct RunReport<'a> {
    pub command: &'a str,
    pub inputs: &'a BTreeMap<String, FileDigest>,
    pub outcome: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<&'a str>,
    pub details: &'a serde_json::Value,
    pub outputs: &'a BTreeMap<String, String>,
    pub wall_ms: u128,
}

pub fn print(report: &RunReport) {
    println!(
        "{}",
        serde_json::to_string_pretty(report).expect("serializable report")
    );
}
