use serde::{Deserialize, Serialize};

use super::WaveKind;
use crate::{Error, Result};

/// Half-open sample range `[onset, offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interval {
    pub onset: usize,
    pub offset: usize,
}

impl Interval {
    pub fn new(onset: usize, offset: usize) -> Option<Self> {
        (onset < offset).then_some(Interval { onset, offset })
    }

    pub(crate) fn new_unchecked(onset: usize, offset: usize) -> Self {
        debug_assert!(onset < offset);
        Interval { onset, offset }
    }

    pub fn len(&self) -> usize {
        self.offset - self.onset
    }

    pub fn is_empty(&self) -> bool {
        self.offset <= self.onset
    }

    /// Last sample inside the interval.
    pub fn last(&self) -> usize {
        self.offset - 1
    }

    pub fn shifted(&self, by: isize) -> Option<Self> {
        let on = self.onset as isize + by;
        let off = self.offset as isize + by;
        (on >= 0).then(|| Interval::new_unchecked(on as usize, off as usize))
    }
}

/// Per-wave ordered lists of non-overlapping intervals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiducialSet {
    waves: [Vec<Interval>; 3],
}

impl FiducialSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a set from per-wave lists, validating order and disjointness.
    pub fn from_waves(p: Vec<Interval>, qrs: Vec<Interval>, t: Vec<Interval>) -> Result<Self> {
        let mut set = Self::empty();
        for (wave, list) in WaveKind::ALL.into_iter().zip([p, qrs, t]) {
            validate(wave, &list)?;
            set.waves[wave.index()] = list;
        }
        Ok(set)
    }

    pub fn get(&self, wave: WaveKind) -> &[Interval] {
        &self.waves[wave.index()]
    }

    /// Appends an interval; it must start at or after the previous offset.
    pub fn push(&mut self, wave: WaveKind, iv: Interval) -> Result<()> {
        let list = &mut self.waves[wave.index()];
        if let Some(prev) = list.last() {
            if iv.onset < prev.offset {
                return Err(Error::InvalidFiducials {
                    wave,
                    reason: format!(
                        "({}, {}) overlaps or precedes ({}, {})",
                        iv.onset, iv.offset, prev.onset, prev.offset
                    ),
                });
            }
        }
        list.push(iv);
        Ok(())
    }

    pub(crate) fn set_unchecked(&mut self, wave: WaveKind, list: Vec<Interval>) {
        self.waves[wave.index()] = list;
    }

    pub fn total(&self) -> usize {
        self.waves.iter().map(Vec::len).sum()
    }

    /// Largest offset across all waves (0 if empty).
    pub fn max_offset(&self) -> usize {
        self.waves
            .iter()
            .flat_map(|l| l.last())
            .map(|iv| iv.offset)
            .max()
            .unwrap_or(0)
    }

    /// All intervals tagged with their wave, sorted by onset.
    pub fn timeline(&self) -> Vec<(WaveKind, Interval)> {
        let mut all: Vec<_> = WaveKind::ALL
            .into_iter()
            .flat_map(|w| self.get(w).iter().map(move |&iv| (w, iv)))
            .collect();
        all.sort_by_key(|&(w, iv)| (iv.onset, iv.offset, w));
        all
    }
}

fn validate(wave: WaveKind, list: &[Interval]) -> Result<()> {
    for iv in list {
        if iv.onset >= iv.offset {
            return Err(Error::InvalidFiducials {
                wave,
                reason: format!("onset {} is not before offset {}", iv.onset, iv.offset),
            });
        }
    }
    for pair in list.windows(2) {
        if pair[1].onset < pair[0].offset {
            return Err(Error::InvalidFiducials {
                wave,
                reason: format!(
                    "({}, {}) overlaps ({}, {})",
                    pair[0].onset, pair[0].offset, pair[1].onset, pair[1].offset
                ),
            });
        }
    }
    Ok(())
}
