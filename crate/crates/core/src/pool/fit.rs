use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use super::SegmentPool;
use crate::stats::{mean, population_sd};
use crate::{Error, Result, SegmentKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalParams {
    pub mu_log: f64,
    pub sigma_log: f64,
}

/// Amplitude laws: a normal over QRS amplitude fractions and a log-normal
/// per other kind over its fraction of the beat's QRS amplitude.
///
/// All standard deviations use the population (`n`) convention, which is the
/// maximum-likelihood estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeModel {
    pub qrs: NormalParams,
    pub fractions: BTreeMap<SegmentKind, LogNormalParams>,
}

impl AmplitudeModel {
    pub fn sample_qrs<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Normal::new(self.qrs.mu, self.qrs.sigma)
            .expect("validated parameters")
            .sample(rng)
    }

    /// Draws a strictly positive fraction of the QRS amplitude for `kind`.
    pub fn sample_fraction<R: Rng + ?Sized>(&self, kind: SegmentKind, rng: &mut R) -> Result<f64> {
        let p = self
            .fractions
            .get(&kind)
            .ok_or(Error::Fit { kind, usable: 0 })?;
        Ok(LogNormal::new(p.mu_log, p.sigma_log)
            .expect("validated parameters")
            .sample(rng))
    }

    pub fn fraction_params(&self, kind: SegmentKind) -> Option<LogNormalParams> {
        self.fractions.get(&kind).copied()
    }
}

/// Fits the amplitude model from the stored amplitude fractions of a pool.
///
/// Non-QRS kinds use only strictly positive fractions (the log is undefined
/// at 0). Each kind needs at least two usable values.
pub fn fit_amplitude_models(pool: &SegmentPool) -> Result<AmplitudeModel> {
    let qrs: Vec<f64> = pool
        .get(SegmentKind::Qrs)
        .iter()
        .map(|t| t.amplitude_fraction)
        .filter(|f| f.is_finite())
        .collect();
    if qrs.len() < 2 {
        return Err(Error::Fit {
            kind: SegmentKind::Qrs,
            usable: qrs.len(),
        });
    }
    let mut fractions = BTreeMap::new();
    for kind in SegmentKind::ALL.into_iter().filter(|&k| k != SegmentKind::Qrs) {
        let logs: Vec<f64> = pool
            .get(kind)
            .iter()
            .map(|t| t.amplitude_fraction)
            .filter(|&f| f > 0.0 && f.is_finite())
            .map(f64::ln)
            .collect();
        if logs.len() < 2 {
            return Err(Error::Fit {
                kind,
                usable: logs.len(),
            });
        }
        fractions.insert(
            kind,
            LogNormalParams {
                mu_log: mean(&logs),
                sigma_log: population_sd(&logs),
            },
        );
    }
    Ok(AmplitudeModel {
        qrs: NormalParams {
            mu: mean(&qrs),
            sigma: population_sd(&qrs),
        },
        fractions,
    })
}
