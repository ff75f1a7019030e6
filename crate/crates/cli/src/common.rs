//! Shared command plumbing: config-file overlay, output-directory
//! resolution, and report writing.
//!
//! Flags override config-file values, which override defaults. Every
//! command echoes its full effective config in the report so a run can be
//! replayed with `--config` alone. The report is always the last file
//! written: its presence certifies a complete run.

use std::path::{Path, PathBuf};

use amfmx_core::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Environment override for the physical output directory. It never
/// changes the echoed config, so replays into a fresh directory still
/// produce byte-identical reports.
pub const OUT_DIR_ENV: &str = "AMFMX_OUT_DIR";

pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

pub fn resolve_out_dir(configured: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => configured.to_path_buf(),
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Parse a comma-separated numeric list flag.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|part| {
            part.trim().parse::<T>().map_err(|_| {
                Error::InvalidParameter(format!("cannot parse {what} entry {part:?}"))
            })
        })
        .collect()
}
