use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use psilab_core::zero_table::parse_zero_table;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::output::{write_atomic, Report};
use crate::sources::invalid;

/// Refuse downloads larger than this.
const MAX_BYTES: u64 = 1 << 30;

#[derive(Debug, Serialize, Deserialize, JsonSchema)]
pub struct FetchOut {
    pub url: String,
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
    pub verified: bool,
    pub zeros: usize,
    pub t_max: f64,
}

impl Report for FetchOut {
    const NAME: &'static str = "fetch-zeros";

    fn summary(&self) -> Vec<String> {
        vec![format!(
            "installed {} ({} zeros, t_max={}, sha256={})",
            self.path, self.zeros, self.t_max, self.sha256
        )]
    }
}

fn check_digest_arg(expected: Option<&str>, no_verify: bool) -> Result<Option<String>> {
    match (expected, no_verify) {
        (Some(_), true) => Err(invalid("--sha256 and --no-verify are mutually exclusive")),
        (None, false) => Err(invalid(
            "supply --sha256 or waive the check with --no-verify",
        )),
        (None, true) => Ok(None),
        (Some(h), false) => {
            let h = h.trim().to_ascii_lowercase();
            if h.len() != 64 || hex::decode(&h).is_err() {
                return Err(invalid(format!(
                    "--sha256 must be 64 hex digits, got {h:?}"
                )));
            }
            Ok(Some(h))
        }
    }
}

/// Download `url`, verify and validate it, then install it as
/// `<cache_dir>/zeros/<name>`. Nothing is written unless every check passes.
pub fn fetch_zeros(
    url: &str,
    expected: Option<&str>,
    no_verify: bool,
    name: &str,
    cache_dir: &Path,
) -> Result<FetchOut> {
    let expected = check_digest_arg(expected, no_verify)?;
    if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
        return Err(invalid(format!(
            "--name must be a plain file name, got {name:?}"
        )));
    }
    let agent = ureq::AgentBuilder::new()
        .timeout_connect(Duration::from_secs(30))
        .timeout_read(Duration::from_secs(300))
        .build();
    let resp = agent
        .get(url)
        .call()
        .with_context(|| format!("GET {url}"))?;
    let mut body = Vec::new();
    resp.into_reader()
        .take(MAX_BYTES + 1)
        .read_to_end(&mut body)
        .with_context(|| format!("reading {url}"))?;
    if body.len() as u64 > MAX_BYTES {
        bail!("{url}: response exceeds {MAX_BYTES} bytes");
    }
    let digest = hex::encode(Sha256::digest(&body));
    if let Some(want) = &expected {
        if *want != digest {
            bail!("{url}: sha256 mismatch, expected {want}, got {digest}; download discarded");
        }
    }
    let table = parse_zero_table(body.as_slice(), url)?;
    let dest: PathBuf = cache_dir.join("zeros").join(name);
    write_atomic(&dest, &body)?;
    Ok(FetchOut {
        url: url.to_string(),
        path: dest.display().to_string(),
        bytes: body.len() as u64,
        sha256: digest,
        verified: expected.is_some(),
        zeros: table.len(),
        t_max: table.t_max(),
    })
}
