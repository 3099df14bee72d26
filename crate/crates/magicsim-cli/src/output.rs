//! Deterministic output rendering: fixed-width float formatting, CSV
//! assembly, run manifests, and the output-directory writer.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Render a float with 17 significant digits so the text round-trips to the
/// identical bit pattern.
pub fn fmt_float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// Incremental CSV assembly with a fixed header.
pub struct Csv {
    buffer: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { buffer: header.join(",") + "\n", columns: header.len() }
    }

    /// Append one row of already-rendered cells.
    pub fn push_row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "csv row width mismatch");
        self.buffer.push_str(&cells.join(","));
        self.buffer.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buffer.into_bytes()
    }
}

/// Provenance record written beside every command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    /// SHA-256 of the configuration file bytes.
    pub config_digest: String,
    pub tool_version: String,
    pub subcommand: String,
    /// ISO-8601 UTC; honors SOURCE_DATE_EPOCH for reproducible runs.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(config_bytes: &[u8], subcommand: &str) -> Self {
        let digest = Sha256::digest(config_bytes);
        let config_digest: String =
            digest.iter().map(|b| format!("{b:02x}")).collect();
        Self {
            config_digest,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            timestamp: timestamp_utc(),
        }
    }
}

fn timestamp_utc() -> String {
    let stamp = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<i64>().ok())
        .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0))
        .unwrap_or_else(chrono::Utc::now);
    stamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Serialize a value as pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serialization cannot fail");
    bytes.push(b'\n');
    bytes
}

/// Write the payload files plus `manifest.json` into `out_dir`, creating it
/// if needed.
pub fn write_outputs(
    out_dir: &Path,
    files: &[(String, Vec<u8>)],
    manifest: &RunManifest,
) -> std::io::Result<()> {
    fs::create_dir_all(out_dir)?;
    for (name, bytes) in files {
        let mut f = fs::File::create(out_dir.join(name))?;
        f.write_all(bytes)?;
    }
    let mut f = fs::File::create(out_dir.join("manifest.json"))?;
    f.write_all(&json_bytes(manifest))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.0, -0.0, 1.0, -1.5e-7, 366.18270648338953, f64::MIN_POSITIVE] {
            let s = fmt_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), if x == 0.0 { 0.0f64 } else { x }.to_bits(), "{s}");
        }
    }

    #[test]
    fn csv_layout() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.push_row(&["1".into(), fmt_float(2.0)]);
        let text = String::from_utf8(csv.into_bytes()).unwrap();
        assert_eq!(text, "a,b\n1,2.0000000000000000e0\n");
    }

    #[test]
    fn manifest_digest_is_stable() {
        let m1 = RunManifest::new(b"hello", "modes");
        let m2 = RunManifest::new(b"hello", "modes");
        assert_eq!(m1.config_digest, m2.config_digest);
        assert_eq!(m1.config_digest.len(), 64);
        let m3 = RunManifest::new(b"hello!", "modes");
        assert_ne!(m1.config_digest, m3.config_digest);
    }
}
