use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Bumped whenever a CSV column or JSON field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// JSON wrapper shared by every report.
#[derive(Serialize)]
pub struct Envelope<'a, C: Serialize, T: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub config: C,
    pub result: T,
}

impl<'a, C: Serialize, T: Serialize> Envelope<'a, C, T> {
    pub fn new(command: &'a str, config: C, result: T) -> Self {
        Self { schema_version: SCHEMA_VERSION, command, config, result }
    }
}

pub fn out_dir(out: &Option<PathBuf>) -> Result<Option<&Path>> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            Ok(Some(dir.as_path()))
        }
        None => Ok(None),
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
