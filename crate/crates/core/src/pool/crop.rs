use crate::data::{EcgRecord, FiducialSet, Interval, WaveKind};
use crate::{Error, Result, SegmentKind};

/// A raw (millivolt) segment cut from one lead.
#[derive(Debug, Clone, PartialEq)]
pub struct CroppedSegment {
    pub kind: SegmentKind,
    pub source_id: String,
    pub lead: String,
    pub sampling_rate: f64,
    pub span: Interval,
    pub samples: Vec<f64>,
    /// Peak |QRS| (mV) of the beat this segment belongs to, if known.
    pub associated_qrs_peak: Option<f64>,
}

/// Crops every lead of `record` using the shared annotation set.
pub fn crop_segments(record: &EcgRecord, fids: &FiducialSet) -> Result<Vec<CroppedSegment>> {
    let mut out = Vec::new();
    for lead in 0..record.lead_count() {
        out.extend(crop_record(record, lead, fids)?);
    }
    Ok(out)
}

/// Crops one lead.
///
/// P, QRS and T segments are the annotated runs. Pauses are the gaps
/// P→QRS (PQ), QRS→T (ST) and T→P or T→QRS (TP); empty gaps and gaps
/// between other pairs are skipped. P and PQ belong to the following QRS;
/// ST, T and TP to the preceding one.
pub fn crop_record(record: &EcgRecord, lead: usize, fids: &FiducialSet) -> Result<Vec<CroppedSegment>> {
    let n = record.len();
    let lead_name = record.lead_names()[lead].clone();
    let timeline = fids.timeline();
    if let Some(&(wave, iv)) = timeline.iter().find(|(_, iv)| iv.offset > n) {
        return Err(Error::InvalidFiducials {
            wave,
            reason: format!("offset {} past record length {n}", iv.offset),
        });
    }
    for pair in timeline.windows(2) {
        let ((wa, a), (wb, b)) = (pair[0], pair[1]);
        if b.onset < a.offset {
            return Err(Error::Overlap {
                lead: lead_name,
                first: format!("{wa}({}, {})", a.onset, a.offset),
                second: format!("{wb}({}, {})", b.onset, b.offset),
            });
        }
    }

    let signal = record.lead(lead);
    let make = |kind, span: Interval| CroppedSegment {
        kind,
        source_id: record.id().to_string(),
        lead: lead_name.clone(),
        sampling_rate: record.sampling_rate(),
        span,
        samples: signal[span.onset..span.offset].to_vec(),
        associated_qrs_peak: None,
    };

    let mut out: Vec<CroppedSegment> = Vec::new();
    // indices into `out` waiting for the next QRS
    let mut pending: Vec<usize> = Vec::new();
    let mut last_qrs: Option<f64> = None;

    for (i, &(wave, iv)) in timeline.iter().enumerate() {
        match wave {
            WaveKind::P => {
                // a P with no QRS before the next P has no same-beat QRS
                for idx in pending.drain(..) {
                    out[idx].associated_qrs_peak = None;
                }
                pending.push(out.len());
                out.push(make(SegmentKind::P, iv));
            }
            WaveKind::Qrs => {
                let mut seg = make(SegmentKind::Qrs, iv);
                let peak = super::peak_abs(&seg.samples);
                seg.associated_qrs_peak = Some(peak);
                for idx in pending.drain(..) {
                    out[idx].associated_qrs_peak = Some(peak);
                }
                last_qrs = Some(peak);
                out.push(seg);
            }
            WaveKind::T => {
                let mut seg = make(SegmentKind::T, iv);
                seg.associated_qrs_peak = last_qrs;
                out.push(seg);
            }
        }

        let Some(&(next_wave, next)) = timeline.get(i + 1) else {
            continue;
        };
        let Some(gap) = Interval::new(iv.offset, next.onset) else {
            continue;
        };
        let pause = match (wave, next_wave) {
            (WaveKind::P, WaveKind::Qrs) => SegmentKind::Pq,
            (WaveKind::Qrs, WaveKind::T) => SegmentKind::St,
            (WaveKind::T, WaveKind::P | WaveKind::Qrs) => SegmentKind::Tp,
            _ => continue,
        };
        let mut seg = make(pause, gap);
        match pause {
            SegmentKind::Pq => pending.push(out.len()),
            _ => seg.associated_qrs_peak = last_qrs,
        }
        out.push(seg);
    }
    Ok(out)
}
