use crate::{DelineationMask, Error, Result, WaveKind};

/// A sample is set when strictly more than half of the masks set it.
pub fn majority_vote(masks: &[DelineationMask]) -> Result<DelineationMask> {
    let first = masks.first().ok_or_else(|| Error::Shape("majority vote of no masks".into()))?;
    let len = first.len();
    if let Some(m) = masks.iter().find(|m| m.len() != len) {
        return Err(Error::Shape(format!("mask lengths differ: {len} vs {}", m.len())));
    }
    let mut out = DelineationMask::new(len)?;
    let k = masks.len();
    for w in WaveKind::ALL {
        let dst = out.channel_mut(w);
        for (i, d) in dst.iter_mut().enumerate() {
            let votes = masks.iter().filter(|m| m.channel(w)[i]).count();
            *d = 2 * votes > k;
        }
    }
    Ok(out)
}
