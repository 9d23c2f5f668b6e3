//! Segment pools: cropping annotated records into P/PQ/QRS/ST/T/TP templates,
//! amplitude normalization and amplitude-distribution fitting.

mod crop;
mod fit;
pub mod io;
mod normalize;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use crop::{crop_record, crop_segments, CroppedSegment};
pub use fit::{fit_amplitude_models, AmplitudeModel, LogNormalParams, NormalParams};
pub use normalize::{normalize_pool, registry_qrs_maxima, NormalizedPool};

use crate::{EcgRecord, Error, FiducialSet, Result, SegmentKind};

/// A cropped, amplitude-normalized segment.
///
/// QRS samples are expressed as a fraction of the registry-wide maximum
/// |QRS|; every other kind as a fraction of its beat's normalized QRS peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentTemplate {
    pub kind: SegmentKind,
    pub samples: Vec<f64>,
    pub source_id: String,
    pub lead: String,
    /// Length at the source record's sampling rate.
    pub native_length: usize,
    /// Peak |sample| after normalization.
    pub amplitude_fraction: f64,
}

impl SegmentTemplate {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Templates grouped by kind. Every kind has an entry, possibly empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPool {
    sampling_rate: f64,
    templates: BTreeMap<SegmentKind, Vec<SegmentTemplate>>,
}

impl SegmentPool {
    pub fn new(sampling_rate: f64) -> Self {
        SegmentPool {
            sampling_rate,
            templates: SegmentKind::ALL.iter().map(|&k| (k, Vec::new())).collect(),
        }
    }

    /// Sampling rate shared by all stored templates.
    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    pub fn push(&mut self, template: SegmentTemplate) {
        self.templates
            .get_mut(&template.kind)
            .expect("every kind is present")
            .push(template);
    }

    pub fn get(&self, kind: SegmentKind) -> &[SegmentTemplate] {
        &self.templates[&kind]
    }

    pub fn count(&self, kind: SegmentKind) -> usize {
        self.templates[&kind].len()
    }

    pub fn total(&self) -> usize {
        self.templates.values().map(Vec::len).sum()
    }

    /// Uniform draw over a kind's templates; returns the index with the template.
    pub fn draw<R: Rng + ?Sized>(
        &self,
        kind: SegmentKind,
        rng: &mut R,
    ) -> Result<(usize, &SegmentTemplate)> {
        let list = self.get(kind);
        if list.is_empty() {
            return Err(Error::EmptyPool { kind });
        }
        let i = rng.random_range(0..list.len());
        Ok((i, &list[i]))
    }

    pub fn iter(&self) -> impl Iterator<Item = &SegmentTemplate> {
        self.templates.values().flatten()
    }
}

/// Peak absolute value; 0 for an empty slice.
pub(crate) fn peak_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_present_and_draw_is_uniform() {
        let mut pool = SegmentPool::new(250.0);
        for k in SegmentKind::ALL {
            assert_eq!(pool.count(k), 0);
        }
        for i in 0..4 {
            pool.push(SegmentTemplate {
                kind: SegmentKind::T,
                samples: vec![i as f64; 3],
                source_id: "s".into(),
                lead: "I".into(),
                native_length: 3,
                amplitude_fraction: 1.0,
            });
        }
        let mut rng = crate::rng::seeded_rng(3);
        let mut hits = [0usize; 4];
        for _ in 0..40_000 {
            hits[pool.draw(SegmentKind::T, &mut rng).unwrap().0] += 1;
        }
        for h in hits {
            assert!((h as f64 / 10_000.0 - 1.0).abs() < 0.05, "{hits:?}");
        }
        assert!(matches!(
            pool.draw(SegmentKind::P, &mut rng),
            Err(Error::EmptyPool { kind: SegmentKind::P })
        ));
    }
}

/// Crops every lead of every annotated record and normalizes the result.
pub fn build_pool(records: &[(EcgRecord, FiducialSet)]) -> Result<NormalizedPool> {
    let mut segments = Vec::new();
    for (rec, fids) in records {
        segments.extend(crop_segments(rec, fids)?);
    }
    Ok(normalize_pool(&segments, &registry_qrs_maxima(&segments)))
}
