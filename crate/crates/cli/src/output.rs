//! Artifact paths and serialization. All files are written by the calling
//! thread after aggregation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Overrides the default output directory.
pub const OUT_ENV: &str = "RHO_LAB_OUT";
pub const DEFAULT_OUT_DIR: &str = "runs";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

pub fn tool_info() -> ToolInfo {
    ToolInfo {
        name: "rho-lab".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

pub fn output_dir() -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

/// `<dir>/<command>.jsonl` unless an explicit path is given.
pub fn data_path(explicit: Option<&Path>, command: &str) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| output_dir().join(format!("{command}.jsonl")))
}

/// `runs/t.jsonl` -> `runs/t.summary.json`.
pub fn summary_path(data: &Path) -> PathBuf {
    data.with_extension("summary.json")
}

pub fn jsonl_bytes<T: Serialize>(records: &[T]) -> Vec<u8> {
    let mut out = Vec::with_capacity(records.len() * 48);
    for r in records {
        serde_json::to_writer(&mut out, r).expect("records serialize to JSON");
        out.push(b'\n');
    }
    out
}

pub fn csv_bytes<T: Serialize>(records: &[T]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::output(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::output(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::output(path, e))?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::input(path, e))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::input(path, format!("malformed JSON: {e}")))
}

/// Compact decimal rendering for terminal output.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e12) {
        return format!("{v:.6e}");
    }
    let s = format!("{v:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_path_replaces_extension() {
        assert_eq!(
            summary_path(Path::new("runs/t.jsonl")),
            PathBuf::from("runs/t.summary.json")
        );
        assert_eq!(
            summary_path(Path::new("plain")),
            PathBuf::from("plain.summary.json")
        );
    }

    #[test]
    fn number_rendering() {
        assert_eq!(fmt_num(0.91), "0.91");
        assert_eq!(fmt_num(0.91 * 8.0 * 2.0 * 14.0 / 100.0), "2.0384");
        assert_eq!(fmt_num(14.0), "14");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(2.5e-7), "2.500000e-7");
    }

    #[test]
    fn jsonl_one_record_per_line() {
        #[derive(Serialize)]
        struct R {
            a: u32,
        }
        let b = jsonl_bytes(&[R { a: 1 }, R { a: 2 }]);
        assert_eq!(b, b"{\"a\":1}\n{\"a\":2}\n");
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
