use std::collections::BTreeMap;

use super::{peak_abs, CroppedSegment, SegmentPool, SegmentTemplate};
use crate::resample::resample_linear;
use crate::SegmentKind;

/// Normalized pool plus the number of templates dropped per kind because
/// their associated QRS amplitude was zero or unknown.
#[derive(Debug, Clone)]
pub struct NormalizedPool {
    pub pool: SegmentPool,
    pub discarded: BTreeMap<SegmentKind, usize>,
}

impl NormalizedPool {
    pub fn discarded_total(&self) -> usize {
        self.discarded.values().sum()
    }
}

/// Registry-wide (all leads) maximum |QRS| per source record.
pub fn registry_qrs_maxima(segments: &[CroppedSegment]) -> BTreeMap<String, f64> {
    let mut maxima = BTreeMap::new();
    for s in segments.iter().filter(|s| s.kind == SegmentKind::Qrs) {
        let e = maxima.entry(s.source_id.clone()).or_insert(0.0f64);
        *e = e.max(peak_abs(&s.samples));
    }
    maxima
}

/// Builds an amplitude-normalized pool.
///
/// QRS templates are divided by their registry maximum |QRS|, so the largest
/// QRS of every registry peaks at exactly 1. Every other template is first put
/// on the same registry scale and then divided by the normalized peak of its
/// associated QRS, which leaves it expressed as a fraction of that QRS.
///
/// Templates are merged in `(source_id, lead)` order and resampled to the
/// sampling rate of the first one when rates differ.
pub fn normalize_pool(
    segments: &[CroppedSegment],
    registry_maxima: &BTreeMap<String, f64>,
) -> NormalizedPool {
    let mut order: Vec<&CroppedSegment> = segments.iter().collect();
    order.sort_by(|a, b| (&a.source_id, &a.lead).cmp(&(&b.source_id, &b.lead)));

    let fs = order.first().map_or(250.0, |s| s.sampling_rate);
    let mut pool = SegmentPool::new(fs);
    let mut discarded: BTreeMap<SegmentKind, usize> = BTreeMap::new();

    for seg in order {
        let registry_max = registry_maxima.get(&seg.source_id).copied().unwrap_or(0.0);
        // (x / registry_max) / (qrs_peak / registry_max) reduces to x / qrs_peak
        let divisor = if seg.kind == SegmentKind::Qrs {
            registry_max
        } else {
            seg.associated_qrs_peak.unwrap_or(0.0)
        };
        if !(registry_max > 0.0 && divisor > 0.0 && divisor.is_finite()) {
            *discarded.entry(seg.kind).or_default() += 1;
            continue;
        }
        let mut samples: Vec<f64> = seg.samples.iter().map(|x| x / divisor).collect();
        if (seg.sampling_rate - fs).abs() > 1e-9 {
            let len = ((samples.len() as f64) * fs / seg.sampling_rate).round().max(1.0) as usize;
            samples = resample_linear(&samples, len);
        }
        pool.push(SegmentTemplate {
            kind: seg.kind,
            amplitude_fraction: peak_abs(&samples),
            samples,
            source_id: seg.source_id.clone(),
            lead: seg.lead.clone(),
            native_length: seg.samples.len(),
        });
    }
    let total: usize = discarded.values().sum();
    if total > 0 {
        log::warn!("discarded {total} templates without a usable QRS amplitude");
    }
    NormalizedPool { pool, discarded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Interval;

    fn seg(kind: SegmentKind, source: &str, samples: Vec<f64>, qrs: Option<f64>) -> CroppedSegment {
        CroppedSegment {
            kind,
            source_id: source.into(),
            lead: "I".into(),
            sampling_rate: 250.0,
            span: Interval::new(0, samples.len().max(1)).unwrap(),
            samples,
            associated_qrs_peak: qrs,
        }
    }

    #[test]
    fn qrs_scaled_by_registry_max() {
        let segs = vec![
            seg(SegmentKind::Qrs, "a", vec![0.0, 2.0, -0.5], Some(2.0)),
            seg(SegmentKind::Qrs, "a", vec![0.2, 1.0, 0.0], Some(1.0)),
        ];
        let maxima = registry_qrs_maxima(&segs);
        assert_eq!(maxima["a"], 2.0);
        let out = normalize_pool(&segs, &maxima);
        let q = out.pool.get(SegmentKind::Qrs);
        assert_eq!(q[0].amplitude_fraction, 1.0);
        assert_eq!(q[1].amplitude_fraction, 0.5);
        assert_eq!(q[1].samples, vec![0.1, 0.5, 0.0]);
    }

    #[test]
    fn t_fraction_relative_to_normalized_qrs() {
        // registry max 1.0, so the normalized QRS peak is 0.5 and a T wave
        // peaking at 0.3 is 0.6 of it
        let segs = vec![
            seg(SegmentKind::Qrs, "a", vec![1.0], Some(1.0)),
            seg(SegmentKind::Qrs, "a", vec![0.5], Some(0.5)),
            seg(SegmentKind::T, "a", vec![0.1, 0.3, 0.1], Some(0.5)),
        ];
        let out = normalize_pool(&segs, &registry_qrs_maxima(&segs));
        let t = &out.pool.get(SegmentKind::T)[0];
        assert!((t.amplitude_fraction - 0.6).abs() < 1e-12);
        assert_eq!(out.discarded_total(), 0);
    }

    #[test]
    fn fraction_independent_of_registry_scale() {
        let segs = vec![
            seg(SegmentKind::Qrs, "a", vec![4.0], Some(4.0)),
            seg(SegmentKind::Qrs, "a", vec![2.0], Some(2.0)),
            seg(SegmentKind::T, "a", vec![0.6], Some(2.0)),
        ];
        let out = normalize_pool(&segs, &registry_qrs_maxima(&segs));
        assert!((out.pool.get(SegmentKind::T)[0].amplitude_fraction - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_qrs_discards_with_count() {
        let segs = vec![
            seg(SegmentKind::Qrs, "a", vec![1.0], Some(1.0)),
            seg(SegmentKind::P, "a", vec![0.1], None),
            seg(SegmentKind::T, "a", vec![0.1], Some(0.0)),
        ];
        let out = normalize_pool(&segs, &registry_qrs_maxima(&segs));
        assert_eq!(out.discarded[&SegmentKind::P], 1);
        assert_eq!(out.discarded[&SegmentKind::T], 1);
        assert_eq!(out.pool.total(), 1);
    }

    #[test]
    fn zero_t_has_zero_fraction() {
        let segs = vec![
            seg(SegmentKind::Qrs, "a", vec![1.0], Some(1.0)),
            seg(SegmentKind::T, "a", vec![0.0; 5], Some(1.0)),
        ];
        let out = normalize_pool(&segs, &registry_qrs_maxima(&segs));
        assert_eq!(out.pool.get(SegmentKind::T)[0].amplitude_fraction, 0.0);
    }

    #[test]
    fn mixed_rates_resampled_to_first() {
        let mut s500 = seg(SegmentKind::Qrs, "b", vec![1.0; 20], Some(1.0));
        s500.sampling_rate = 500.0;
        let segs = vec![seg(SegmentKind::Qrs, "a", vec![1.0; 10], Some(1.0)), s500];
        let out = normalize_pool(&segs, &registry_qrs_maxima(&segs));
        assert_eq!(out.pool.sampling_rate(), 250.0);
        let q = out.pool.get(SegmentKind::Qrs);
        assert_eq!(q[1].len(), 10);
        assert_eq!(q[1].native_length, 20);
    }
}
