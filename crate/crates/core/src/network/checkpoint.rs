//! Binary checkpoints: magic, format version, a JSON manifest, then every
//! tensor as little-endian f32 in manifest order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, NetworkConfig};
use crate::autodiff::Tensor;
use crate::rng::seeded_rng;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DLNTCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tool_version: String,
    pub network: NetworkConfig,
    pub step: usize,
    pub seed: u64,
    /// Free-form echo of the run configuration.
    pub config: serde_json::Value,
    pub tensors: Vec<TensorEntry>,
}

fn running_names(prefix: &str) -> (String, String) {
    (format!("running:{prefix}:mean"), format!("running:{prefix}:var"))
}

fn entries(model: &Model) -> Vec<(String, Tensor)> {
    let mut out: Vec<(String, Tensor)> = model
        .params
        .names()
        .iter()
        .cloned()
        .zip(model.params.tensors().iter().cloned())
        .collect();
    for (prefix, s) in &model.running {
        let (m, v) = running_names(prefix);
        let c = s.mean.len();
        out.push((m, Tensor { shape: [1, c, 1], data: s.mean.clone() }));
        out.push((v, Tensor { shape: [1, c, 1], data: s.var.clone() }));
    }
    out
}

pub fn save_checkpoint(path: &Path, model: &Model, step: usize, seed: u64, config: serde_json::Value) -> Result<()> {
    let entries = entries(model);
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        network: model.config.clone(),
        step,
        seed,
        config,
        tensors: entries.iter().map(|(n, t)| TensorEntry { name: n.clone(), shape: t.shape }).collect(),
    };
    let json = serde_json::to_vec(&manifest).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut buf = Vec::with_capacity(json.len() + 32 + 4 * model.param_count());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for (_, t) in &entries {
        for v in &t.data {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(Model, Manifest)> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Checkpoint(format!("{}: {m}", path.display()));
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }
    let len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let body = bytes.get(20..20 + len).ok_or_else(|| bad("truncated manifest"))?;
    let manifest: Manifest = serde_json::from_slice(body).map_err(|e| bad(&e.to_string()))?;
    let mut model = Model::build(&manifest.network, &mut seeded_rng(0))?;
    let mut at = 20 + len;
    let mut seen = 0usize;
    for entry in &manifest.tensors {
        let n: usize = entry.shape.iter().product();
        let raw = bytes.get(at..at + 4 * n).ok_or_else(|| bad("truncated tensor data"))?;
        at += 4 * n;
        let data: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect();
        if let Some(rest) = entry.name.strip_prefix("running:") {
            let (prefix, which) = rest.rsplit_once(':').ok_or_else(|| bad(&format!("bad tensor name {}", entry.name)))?;
            let stats = model
                .running
                .get_mut(prefix)
                .ok_or_else(|| bad(&format!("unexpected statistics {prefix}")))?;
            let dst = if which == "mean" { &mut stats.mean } else { &mut stats.var };
            if dst.len() != n {
                return Err(bad(&format!("statistics {} have {n} values, expected {}", entry.name, dst.len())));
            }
            *dst = data;
        } else {
            let i = model
                .params
                .position(&entry.name)
                .ok_or_else(|| bad(&format!("unexpected parameter {}", entry.name)))?;
            let t = &mut model.params.tensors_mut()[i];
            if t.shape != entry.shape {
                return Err(bad(&format!("parameter {} has shape {:?}, expected {:?}", entry.name, entry.shape, t.shape)));
            }
            t.data = data;
            seen += 1;
        }
    }
    if seen != model.params.len() {
        return Err(bad(&format!("{} of {} parameters present", seen, model.params.len())));
    }
    if at != bytes.len() {
        return Err(bad("trailing bytes after tensor data"));
    }
    Ok((model, manifest))
}
