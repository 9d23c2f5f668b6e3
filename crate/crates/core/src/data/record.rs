use crate::{Error, Result};

/// Multi-lead sampled signal in millivolts.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    id: String,
    sampling_rate: f64,
    lead_names: Vec<String>,
    signal: Vec<Vec<f64>>,
}

impl EcgRecord {
    pub fn new(
        id: impl Into<String>,
        sampling_rate: f64,
        lead_names: Vec<String>,
        signal: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
            return Err(Error::InvalidRecord(format!(
                "sampling rate must be positive, got {sampling_rate}"
            )));
        }
        if lead_names.len() != signal.len() {
            return Err(Error::InvalidRecord(format!(
                "{} lead names for {} leads",
                lead_names.len(),
                signal.len()
            )));
        }
        if let Some(first) = signal.first() {
            if signal.iter().any(|l| l.len() != first.len()) {
                return Err(Error::InvalidRecord("leads differ in length".into()));
            }
        }
        Ok(EcgRecord {
            id: id.into(),
            sampling_rate,
            lead_names,
            signal,
        })
    }

    pub fn single_lead(id: impl Into<String>, sampling_rate: f64, samples: Vec<f64>) -> Result<Self> {
        Self::new(id, sampling_rate, vec!["I".to_string()], vec![samples])
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    pub fn lead_names(&self) -> &[String] {
        &self.lead_names
    }

    pub fn lead_count(&self) -> usize {
        self.signal.len()
    }

    pub fn len(&self) -> usize {
        self.signal.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lead(&self, i: usize) -> &[f64] {
        &self.signal[i]
    }

    pub fn leads(&self) -> &[Vec<f64>] {
        &self.signal
    }

    /// Subject identifier: the part of the record id before the first `-`.
    pub fn subject_id(&self) -> &str {
        subject_of(&self.id)
    }

    /// Converts sample counts to milliseconds at this record's sampling rate.
    pub fn samples_to_ms(&self, samples: f64) -> f64 {
        samples * 1000.0 / self.sampling_rate
    }
}

pub(crate) fn subject_of(id: &str) -> &str {
    id.split('-').next().unwrap_or(id)
}
