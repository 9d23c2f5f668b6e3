//! Pool directory layout:
//!
//! - `<KIND>.ecg` for each segment kind: a single-lead signal file holding
//!   that kind's templates concatenated in manifest order
//! - `manifest.csv`: `kind,source_id,lead,length,amplitude_fraction` rows
//! - `amplitude_model.json`: the fitted [`AmplitudeModel`], when present

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{AmplitudeModel, SegmentPool, SegmentTemplate};
use crate::data::io::{format_record, load_record};
use crate::{EcgRecord, Error, Result, SegmentKind};

pub const MANIFEST: &str = "manifest.csv";
pub const MANIFEST_HEADER: &str = "kind,source_id,lead,length,amplitude_fraction";
pub const MODEL_FILE: &str = "amplitude_model.json";

pub fn kind_file_name(kind: SegmentKind) -> String {
    format!("{}.ecg", kind.name())
}

pub fn save_pool(pool: &SegmentPool, model: Option<&AmplitudeModel>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::from(MANIFEST_HEADER);
    manifest.push('\n');
    for kind in SegmentKind::ALL {
        let templates = pool.get(kind);
        let concat: Vec<f64> = templates.iter().flat_map(|t| t.samples.iter().copied()).collect();
        let rec = EcgRecord::new(kind.name(), pool.sampling_rate(), vec![kind.name().into()], vec![concat])?;
        let path = dir.join(kind_file_name(kind));
        fs::write(&path, format_record(&rec)).map_err(|e| Error::io(&path, e))?;
        for t in templates {
            let _ = writeln!(
                manifest,
                "{},{},{},{},{}",
                kind, t.source_id, t.lead, t.len(), t.amplitude_fraction
            );
        }
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    if let Some(model) = model {
        let path = dir.join(MODEL_FILE);
        let json = serde_json::to_string_pretty(model).expect("model serializes");
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

pub fn load_pool(dir: &Path) -> Result<SegmentPool> {
    let mpath = dir.join(MANIFEST);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let mut rows: BTreeMap<SegmentKind, Vec<(String, String, usize, f64)>> = BTreeMap::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h.trim() == MANIFEST_HEADER => {}
        _ => return Err(Error::parse(&mpath, 1, format!("expected header `{MANIFEST_HEADER}`"))),
    }
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::parse(&mpath, line_no, "expected 5 fields"));
        }
        let kind: SegmentKind = f[0].parse().map_err(|e: String| Error::parse(&mpath, line_no, e))?;
        let len: usize = f[3]
            .parse()
            .map_err(|e| Error::parse(&mpath, line_no, format!("bad length: {e}")))?;
        let frac: f64 = f[4]
            .parse()
            .map_err(|e| Error::parse(&mpath, line_no, format!("bad fraction: {e}")))?;
        rows.entry(kind).or_default().push((f[1].into(), f[2].into(), len, frac));
    }

    let mut pool: Option<SegmentPool> = None;
    for kind in SegmentKind::ALL {
        let path = dir.join(kind_file_name(kind));
        let rec = load_record(&path)?;
        let pool = pool.get_or_insert_with(|| SegmentPool::new(rec.sampling_rate()));
        let samples = rec.leads().first().map(Vec::as_slice).unwrap_or(&[]);
        let mut at = 0;
        for (source_id, lead, len, frac) in rows.remove(&kind).unwrap_or_default() {
            if at + len > samples.len() {
                return Err(Error::parse(&path, 0, format!("manifest lengths exceed {} samples", samples.len())));
            }
            pool.push(SegmentTemplate {
                kind,
                samples: samples[at..at + len].to_vec(),
                source_id,
                lead,
                native_length: len,
                amplitude_fraction: frac,
            });
            at += len;
        }
        if at != samples.len() {
            return Err(Error::parse(&path, 0, "manifest does not cover all samples"));
        }
    }
    Ok(pool.expect("six kinds"))
}

pub fn load_model(dir: &Path) -> Result<AmplitudeModel> {
    let path = dir.join(MODEL_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.line(), e.to_string()))
}
