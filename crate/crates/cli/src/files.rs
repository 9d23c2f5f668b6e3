use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use delineate_core::data::io::record_id_from_path;

use crate::config::RunConfig;

pub const SIGNAL_EXT: &str = "ecg";
pub const ANNOTATION_EXT: &str = "ann";
pub const ECHO_FILE: &str = "config.echo.toml";

/// Files in `dir` with extension `ext`, keyed by record id.
pub fn files_by_id(dir: &Path, ext: &str) -> Result<BTreeMap<String, PathBuf>> {
    let entries = fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))?;
    let mut out = BTreeMap::new();
    for e in entries {
        let path = e?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == ext) {
            out.insert(record_id_from_path(&path), path);
        }
    }
    Ok(out)
}

pub struct Pairing {
    pub pairs: Vec<(String, PathBuf, PathBuf)>,
    pub unpaired: Vec<PathBuf>,
}

/// Matches `<id>.ecg` signals with `<id>.ann` annotations.
pub fn pair_files(records: &Path, annotations: &Path) -> Result<Pairing> {
    let sig = files_by_id(records, SIGNAL_EXT)?;
    let mut ann = files_by_id(annotations, ANNOTATION_EXT)?;
    let mut pairs = Vec::new();
    let mut unpaired = Vec::new();
    for (id, s) in sig {
        match ann.remove(&id) {
            Some(a) => pairs.push((id, s, a)),
            None => unpaired.push(s),
        }
    }
    unpaired.extend(ann.into_values());
    Ok(Pairing { pairs, unpaired })
}

pub fn signals(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let files = files_by_id(dir, SIGNAL_EXT)?;
    if files.is_empty() {
        bail!(crate::DataError(format!("no .{SIGNAL_EXT} files in {}", dir.display())));
    }
    Ok(files.into_iter().collect())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn tool_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

/// Writes the effective configuration, headed by the tool version.
pub fn write_echo(dir: &Path, cfg: &RunConfig, command: &str) -> Result<()> {
    ensure_dir(dir)?;
    let text = format!("# {}\n# command: {command}\n{}", tool_version(), cfg.to_toml());
    let path = dir.join(ECHO_FILE);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
