use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::CliResult;

/// Full-precision float for tables.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Accumulates a CSV table in memory.
pub struct Table {
    buf: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self { buf }
    }

    pub fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.buf, "{}", cells.join(","));
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_text(path, &self.buf)
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| crate::CliError::Io(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}
