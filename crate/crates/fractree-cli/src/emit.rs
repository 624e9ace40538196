//! Deterministic CSV/JSON emission. Floats are printed with 17 significant
//! digits so a parsed-back value is bit-identical and a re-run reproduces
//! the file byte for byte.

use std::io::Write;
use std::path::{Path, PathBuf};

/// 17-significant-digit scientific form; round-trips f64 exactly.
pub fn fmt(value: f64) -> String {
    format!("{value:.16e}")
}

pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &str) -> Self {
        Self {
            text: format!("{header}\n"),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Writes to the path, or to stdout when no path is given.
pub fn write_output(out: Option<&Path>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)
                        .map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
                }
            }
            std::fs::write(path, content)
                .map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| format!("cannot write to stdout: {e}")),
    }
}

/// Per-level output path: `prefix.csv` becomes `prefix_level4.csv`.
pub fn level_path(base: &Path, level: u32) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_level{level}.{}", ext.to_string_lossy()),
        None => format!("{stem}_level{level}"),
    };
    base.with_file_name(name)
}
