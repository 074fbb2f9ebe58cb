use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use psilab_core::{build_psi_series, load_zero_table, LabError, PsiSeries, ZeroTable};

use crate::cli::PsiSource;
use crate::output::write_atomic;

/// A rejected parameter or configuration value.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

/// 2 for rejected inputs, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<Invalid>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<LabError>() {
            return match e {
                LabError::Domain(_)
                | LabError::OutOfRange { .. }
                | LabError::Hypothesis(_)
                | LabError::TableTooShort { .. } => 2,
                LabError::Parse { .. } | LabError::Io { .. } | LabError::Resource(_) => 1,
            };
        }
    }
    1
}

pub fn load_table(path: &Path) -> Result<ZeroTable> {
    Ok(load_zero_table(path)?)
}

pub fn psi_cache_path(cache_dir: &Path, limit: u64) -> PathBuf {
    cache_dir.join(format!("psi_{limit}.csv"))
}

pub fn read_psi(path: &Path) -> Result<PsiSeries> {
    let f =
        File::open(path).with_context(|| format!("cannot open psi cache {}", path.display()))?;
    PsiSeries::read_csv(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

pub fn write_psi(path: &Path, psi: &PsiSeries) -> Result<()> {
    let mut buf = Vec::new();
    psi.write_csv(&mut buf)?;
    write_atomic(path, &buf)
}

/// ψ covering `[1, need]`: the given cache file, else the smallest
/// sufficient cache in `cache_dir`, else a fresh sieve that is cached.
pub fn load_psi(src: &PsiSource, need: u64, cache_dir: &Path) -> Result<PsiSeries> {
    if let Some(path) = &src.psi_cache {
        let psi = read_psi(path)?;
        if psi.limit_x() < need {
            return Err(invalid(format!(
                "{} covers x <= {}, need {need}; rebuild with `psi build --limit {need}`",
                path.display(),
                psi.limit_x()
            )));
        }
        return Ok(psi);
    }
    let mut best: Option<(u64, PathBuf)> = None;
    if let Ok(entries) = std::fs::read_dir(cache_dir) {
        for e in entries.flatten() {
            let name = e.file_name();
            let Some(limit) = name
                .to_str()
                .and_then(|n| n.strip_prefix("psi_"))
                .and_then(|n| n.strip_suffix(".csv"))
                .and_then(|n| n.parse::<u64>().ok())
            else {
                continue;
            };
            if limit >= need && best.as_ref().is_none_or(|(b, _)| limit < *b) {
                best = Some((limit, e.path()));
            }
        }
    }
    if let Some((_, path)) = best {
        return read_psi(&path);
    }
    let psi = build_psi_series(need)?;
    // A cache that cannot be written is not fatal for the current command.
    let _ = write_psi(&psi_cache_path(cache_dir, need), &psi);
    Ok(psi)
}

pub fn ceil_u64(x: f64, what: &str) -> Result<u64> {
    if !(x.is_finite() && (0.0..1e15).contains(&x)) {
        return Err(invalid(format!("{what} = {x} is out of range")));
    }
    Ok(x.ceil() as u64)
}
