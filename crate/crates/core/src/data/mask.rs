use super::WaveKind;
use crate::{Error, Result};

/// Boolean mask of shape `3 × N`, one channel per [`WaveKind`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelineationMask {
    len: usize,
    channels: [Vec<bool>; 3],
}

impl DelineationMask {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Shape("mask length must be positive".into()));
        }
        Ok(DelineationMask {
            len,
            channels: std::array::from_fn(|_| vec![false; len]),
        })
    }

    pub fn from_channels(channels: [Vec<bool>; 3]) -> Result<Self> {
        let len = channels[0].len();
        if len == 0 || channels.iter().any(|c| c.len() != len) {
            return Err(Error::Shape("mask channels must share a positive length".into()));
        }
        Ok(DelineationMask { len, channels })
    }

    /// Builds a mask by thresholding per-channel probabilities laid out
    /// channel-major (`3 × len`).
    pub fn from_probabilities(probs: &[f64], len: usize, threshold: f64) -> Result<Self> {
        if probs.len() != 3 * len {
            return Err(Error::Shape(format!(
                "expected {} probabilities, got {}",
                3 * len,
                probs.len()
            )));
        }
        let channels = std::array::from_fn(|c| {
            probs[c * len..(c + 1) * len]
                .iter()
                .map(|&p| p > threshold)
                .collect()
        });
        Self::from_channels(channels)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.channels.iter().all(|c| c.iter().all(|&b| !b))
    }

    pub fn channel(&self, wave: WaveKind) -> &[bool] {
        &self.channels[wave.index()]
    }

    pub fn channel_mut(&mut self, wave: WaveKind) -> &mut [bool] {
        &mut self.channels[wave.index()]
    }

    pub fn get(&self, wave: WaveKind, i: usize) -> bool {
        self.channels[wave.index()][i]
    }

    /// Channel-major `3 × len` values of 0.0 / 1.0.
    pub fn to_f64(&self) -> Vec<f64> {
        self.channels
            .iter()
            .flat_map(|c| c.iter().map(|&b| if b { 1.0 } else { 0.0 }))
            .collect()
    }

    /// Sub-mask `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len {
            return Err(Error::OutOfRange {
                what: "mask slice end",
                value: start + len,
                limit: self.len,
            });
        }
        Self::from_channels(std::array::from_fn(|c| {
            self.channels[c][start..start + len].to_vec()
        }))
    }
}
