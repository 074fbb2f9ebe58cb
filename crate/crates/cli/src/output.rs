use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use schemars::JsonSchema;
use serde::Serialize;
use serde_json::Value;

use crate::cli::Format;

/// A command result that can be rendered as text, JSON or CSV.
pub trait Report: Serialize + JsonSchema {
    /// Stem of the published schema file.
    const NAME: &'static str;

    /// Human-readable lines for `--format text`.
    fn summary(&self) -> Vec<String>;

    /// CSV rendering. Tabular results override this with one row per
    /// record; the default flattens the JSON form into `key,value` rows.
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        let value = serde_json::to_value(self)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["key", "value"])?;
        let mut rows = Vec::new();
        flatten("", &value, &mut rows);
        for (k, v) in rows {
            w.write_record([k, v])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, rows);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), v, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Null => rows.push((prefix.to_string(), String::new())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

/// Write `rows` as CSV with a header taken from the record's field names.
pub fn csv_records<R: Serialize>(out: &mut dyn Write, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn render<R: Report>(report: &R, format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Text => {
            for line in report.summary() {
                writeln!(out, "{line}")?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, report)?;
            writeln!(out)?;
        }
        Format::Csv => report.write_csv(out)?,
    }
    Ok(())
}

/// Render to `path` (atomically replaced) or to stdout.
pub fn emit<R: Report>(report: &R, format: Format, path: Option<&Path>) -> Result<()> {
    match path {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            render(report, format, &mut lock)?;
            lock.flush()?;
        }
        Some(p) => {
            let mut buf = Vec::new();
            render(report, format, &mut buf)?;
            write_atomic(p, &buf)?;
        }
    }
    Ok(())
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot write in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot install {}", path.display()))?;
    Ok(())
}
