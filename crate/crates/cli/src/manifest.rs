use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

pub const MANIFEST: &str = "manifest.json";

/// What a command reports about its run, besides its outputs.
#[derive(Clone, Debug, Default)]
pub struct RunInfo {
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<String>,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, exactly as given.
    pub args: Vec<String>,
    /// Working directory that relative paths in `args` refer to.
    pub cwd: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<String>,
    pub output_dir: String,
    /// SHA-256 of every output file, keyed by path relative to the output
    /// directory.
    pub outputs: BTreeMap<String, String>,
    pub evaluations: usize,
    pub wall_clock_ms: u128,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digests of every file below `dir` except the manifest itself.
pub fn digest_outputs(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(dir).expect("walk stays below its root");
        let key = rel.to_string_lossy().replace('\\', "/");
        if key == MANIFEST {
            continue;
        }
        let bytes = fs::read(entry.path()).with_context(|| format!("reading {}", entry.path().display()))?;
        out.insert(key, sha256_hex(&bytes));
    }
    Ok(out)
}

pub fn write(command: &str, args: Vec<String>, out_dir: &Path, info: RunInfo, elapsed: Duration) -> Result<RunManifest> {
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        args,
        cwd: std::env::current_dir()?.display().to_string(),
        config: info.config,
        seeds: info.seeds,
        inputs: info.inputs,
        output_dir: out_dir.display().to_string(),
        outputs: digest_outputs(out_dir)?,
        evaluations: info.evaluations,
        wall_clock_ms: elapsed.as_millis(),
    };
    let text = recon_core::io::to_json_text(&manifest)?;
    recon_core::io::write_atomic(&out_dir.join(MANIFEST), text.as_bytes())?;
    Ok(manifest)
}

pub fn read(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
}

/// `args` with the value of `--out` replaced.
pub fn redirect_out(args: &[String], out: &Path) -> Vec<String> {
    let mut result = Vec::with_capacity(args.len());
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        if a == "--out" {
            iter.next();
            result.push("--out".to_string());
            result.push(out.display().to_string());
        } else if a.starts_with("--out=") {
            result.push(format!("--out={}", out.display()));
        } else {
            result.push(a.clone());
        }
    }
    result
}
