//! Signal and annotation types shared by every stage of the pipeline.
//!
//! Ground truth has two interchangeable forms: a [`DelineationMask`] with one
//! boolean channel per [`WaveKind`], and a [`FiducialSet`] listing `(onset,
//! offset)` sample pairs per wave. Onsets are inclusive and offsets exclusive,
//! so a run's length is `offset - onset`.

mod fiducials;
pub mod io;
mod kinds;
mod mask;
mod record;

pub use fiducials::{FiducialSet, Interval};
pub use kinds::{SegmentKind, WaveKind};
pub use mask::DelineationMask;
pub use record::EcgRecord;

/// Extracts one `(onset, offset)` pair per maximal run of `true` samples.
///
/// Runs touching the first or last sample are reported with onset `0` or
/// offset `N` respectively.
pub fn fiducials_from_mask(mask: &DelineationMask) -> FiducialSet {
    let mut fids = FiducialSet::empty();
    for wave in WaveKind::ALL {
        let runs = runs_of(mask.channel(wave));
        // Maximal runs are sorted and separated by at least one false sample.
        fids.set_unchecked(wave, runs);
    }
    fids
}

/// Rasterizes a fiducial set into a mask of `n` samples.
pub fn mask_from_fiducials(fids: &FiducialSet, n: usize) -> crate::Result<DelineationMask> {
    let mut mask = DelineationMask::new(n)?;
    for wave in WaveKind::ALL {
        for iv in fids.get(wave) {
            if iv.offset > n {
                return Err(crate::Error::OutOfRange {
                    what: "fiducial offset",
                    value: iv.offset,
                    limit: n,
                });
            }
            mask.channel_mut(wave)[iv.onset..iv.offset].fill(true);
        }
    }
    Ok(mask)
}

pub(crate) fn runs_of(channel: &[bool]) -> Vec<Interval> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &v) in channel.iter().enumerate() {
        match (v, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push(Interval::new_unchecked(s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push(Interval::new_unchecked(s, channel.len()));
    }
    runs
}
