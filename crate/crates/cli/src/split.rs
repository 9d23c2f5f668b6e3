use std::collections::{BTreeMap, BTreeSet};

use anyhow::{bail, Result};
use rand::seq::SliceRandom;

use delineate_core::rng::seeded_rng;

use crate::DataError;

/// Subject of a record id: everything before the first `-`.
pub fn subject_of(id: &str) -> &str {
    id.split('-').next().unwrap_or(id)
}

/// Parses `record_id,subject_id` rows; a header row starting with
/// `record` is skipped.
pub fn parse_subject_manifest(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("record")) {
            continue;
        }
        let Some((r, s)) = line.split_once(',') else {
            bail!(DataError(format!("subject manifest line {}: expected `record_id,subject_id`", i + 1)));
        };
        out.insert(r.trim().to_string(), s.trim().to_string());
    }
    Ok(out)
}

/// Shuffles subjects with `seed` and deals them round-robin into `k` folds.
/// Returns `(record, subject, fold)` rows in record order.
pub fn split_subjects(
    records: &[String],
    overrides: &BTreeMap<String, String>,
    k: usize,
    seed: u64,
) -> Result<Vec<(String, String, usize)>> {
    let subject = |r: &str| overrides.get(r).cloned().unwrap_or_else(|| subject_of(r).to_string());
    let subjects: BTreeSet<String> = records.iter().map(|r| subject(r)).collect();
    if k == 0 {
        bail!(crate::UsageError("--folds must be at least 1".into()));
    }
    if k > subjects.len() {
        bail!(DataError(format!("{k} folds requested but only {} subjects", subjects.len())));
    }
    let mut order: Vec<String> = subjects.into_iter().collect();
    order.shuffle(&mut seeded_rng(seed));
    let fold: BTreeMap<String, usize> = order.into_iter().enumerate().map(|(i, s)| (s, i % k)).collect();
    let mut rows: Vec<_> = records
        .iter()
        .map(|r| {
            let s = subject(r);
            let f = fold[&s];
            (r.clone(), s, f)
        })
        .collect();
    rows.sort();
    Ok(rows)
}
