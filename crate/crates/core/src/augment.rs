//! Training-time signal corruption. Only the signal changes; labels do not.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::pool::peak_abs;
use crate::synth::Range;
use crate::{Error, Result};

fn draw<R: Rng + ?Sized>(rng: &mut R, (lo, hi): Range) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Sum of 1–3 sinusoids; amplitude is the total, as a fraction of max|x|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WanderAug {
    pub enabled: bool,
    pub probability: f64,
    pub amplitude: Range,
    pub frequency: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerlineAug {
    pub enabled: bool,
    pub probability: f64,
    /// Hz, must stay below half the sampling rate.
    pub frequency: f64,
    pub amplitude: Range,
}

/// Periodic single-sample spikes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpikeAug {
    pub enabled: bool,
    pub probability: f64,
    /// Spikes per second.
    pub rate: Range,
    pub amplitude: Range,
}

/// Periodic rectangular pulses of random sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacemakerAug {
    pub enabled: bool,
    pub probability: f64,
    pub rate: Range,
    /// Inclusive pulse width in samples.
    pub width: (usize, usize),
    pub amplitude: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WhiteNoiseAug {
    pub enabled: bool,
    pub probability: f64,
    pub snr_db: Range,
}

/// Symmetric clipping at a fraction of max|x|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaturationAug {
    pub enabled: bool,
    pub probability: f64,
    pub clip: Range,
}

/// Amplitudes are fractions of the input's max|x|.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationConfig {
    pub wander: WanderAug,
    pub powerline: PowerlineAug,
    pub spikes: SpikeAug,
    pub pacemaker: PacemakerAug,
    pub white_noise: WhiteNoiseAug,
    pub saturation: SaturationAug,
    pub rng_seed: u64,
}

impl Default for WanderAug {
    fn default() -> Self {
        WanderAug { enabled: true, probability: 0.5, amplitude: (0.05, 0.3), frequency: (0.05, 0.5) }
    }
}

impl Default for PowerlineAug {
    fn default() -> Self {
        PowerlineAug { enabled: true, probability: 0.3, frequency: 50.0, amplitude: (0.01, 0.1) }
    }
}

impl Default for SpikeAug {
    fn default() -> Self {
        SpikeAug { enabled: true, probability: 0.1, rate: (0.5, 3.0), amplitude: (0.2, 1.0) }
    }
}

impl Default for PacemakerAug {
    fn default() -> Self {
        PacemakerAug { enabled: true, probability: 0.1, rate: (0.8, 2.0), width: (1, 3), amplitude: (0.3, 1.5) }
    }
}

impl Default for WhiteNoiseAug {
    fn default() -> Self {
        WhiteNoiseAug { enabled: true, probability: 0.5, snr_db: (15.0, 40.0) }
    }
}

impl Default for SaturationAug {
    fn default() -> Self {
        SaturationAug { enabled: true, probability: 0.05, clip: (0.5, 0.9) }
    }
}

impl AugmentationConfig {
    /// Every effect switched off.
    pub fn disabled() -> Self {
        let mut c = Self::default();
        c.wander.enabled = false;
        c.powerline.enabled = false;
        c.spikes.enabled = false;
        c.pacemaker.enabled = false;
        c.white_noise.enabled = false;
        c.saturation.enabled = false;
        c
    }

    pub fn validate(&self, sampling_rate: f64) -> Result<()> {
        let probs = [
            ("wander", self.wander.probability),
            ("powerline", self.powerline.probability),
            ("spikes", self.spikes.probability),
            ("pacemaker", self.pacemaker.probability),
            ("white_noise", self.white_noise.probability),
            ("saturation", self.saturation.probability),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("augmentation.{name}.probability = {p} is not in [0, 1]")));
            }
        }
        let ranges = [
            ("wander.amplitude", self.wander.amplitude),
            ("wander.frequency", self.wander.frequency),
            ("powerline.amplitude", self.powerline.amplitude),
            ("spikes.rate", self.spikes.rate),
            ("spikes.amplitude", self.spikes.amplitude),
            ("pacemaker.rate", self.pacemaker.rate),
            ("pacemaker.amplitude", self.pacemaker.amplitude),
            ("saturation.clip", self.saturation.clip),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Config(format!("augmentation.{name} = [{lo}, {hi}] must be a non-negative range")));
            }
        }
        let (lo, hi) = self.white_noise.snr_db;
        if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::Config("augmentation.white_noise.snr_db must be a finite range".into()));
        }
        if self.pacemaker.width.0 < 1 || self.pacemaker.width.0 > self.pacemaker.width.1 {
            return Err(Error::Config("augmentation.pacemaker.width must be a range ≥ 1".into()));
        }
        if !(self.powerline.frequency >= 0.0 && self.powerline.frequency < sampling_rate / 2.0) {
            return Err(Error::Config(format!(
                "augmentation.powerline.frequency = {} must be below fs/2 = {}",
                self.powerline.frequency,
                sampling_rate / 2.0
            )));
        }
        Ok(())
    }
}

fn fires<R: Rng + ?Sized>(enabled: bool, probability: f64, rng: &mut R) -> bool {
    enabled && rng.random::<f64>() < probability
}

/// Adds pulses every `period` samples starting at a random phase.
fn periodic<R: Rng + ?Sized>(xs: &mut [f64], period: f64, width: usize, height: f64, rng: &mut R) {
    let mut t = rng.random_range(0.0..period);
    while (t as usize) < xs.len() {
        let i = t as usize;
        for x in xs.iter_mut().skip(i).take(width) {
            *x += height;
        }
        t += period;
    }
}

/// Applies the enabled effects in the order wander, powerline, spikes,
/// pacemaker, white noise, saturation. Each effect fires independently with
/// its probability. With nothing enabled the output equals the input.
pub fn augment<R: Rng + ?Sized>(
    signal: &[f64],
    sampling_rate: f64,
    config: &AugmentationConfig,
    rng: &mut R,
) -> Vec<f64> {
    let mut x = signal.to_vec();
    let scale = peak_abs(signal);
    let n = x.len();

    let c = &config.wander;
    if fires(c.enabled, c.probability, rng) {
        let count = rng.random_range(1..=3usize);
        let total = draw(rng, c.amplitude) * scale;
        for _ in 0..count {
            let f = draw(rng, c.frequency);
            let phase = rng.random_range(0.0..TAU);
            let a = total / count as f64;
            for (i, v) in x.iter_mut().enumerate() {
                *v += a * (TAU * f * i as f64 / sampling_rate + phase).sin();
            }
        }
    }

    let c = &config.powerline;
    if fires(c.enabled, c.probability, rng) && c.frequency < sampling_rate / 2.0 {
        let a = draw(rng, c.amplitude) * scale;
        let phase = rng.random_range(0.0..TAU);
        for (i, v) in x.iter_mut().enumerate() {
            *v += a * (TAU * c.frequency * i as f64 / sampling_rate + phase).sin();
        }
    }

    let c = &config.spikes;
    if fires(c.enabled, c.probability, rng) {
        let rate = draw(rng, c.rate);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let a = sign * draw(rng, c.amplitude) * scale;
        if rate > 0.0 {
            periodic(&mut x, sampling_rate / rate, 1, a, rng);
        }
    }

    let c = &config.pacemaker;
    if fires(c.enabled, c.probability, rng) {
        let rate = draw(rng, c.rate);
        let width = rng.random_range(c.width.0..=c.width.1.max(c.width.0));
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let a = sign * draw(rng, c.amplitude) * scale;
        if rate > 0.0 {
            periodic(&mut x, sampling_rate / rate, width, a, rng);
        }
    }

    let c = &config.white_noise;
    if fires(c.enabled, c.probability, rng) && n > 0 {
        let snr = draw(rng, c.snr_db);
        let power = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let sd = (power / 10f64.powf(snr / 10.0)).sqrt();
        for v in x.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v += sd * z;
        }
    }

    let c = &config.saturation;
    if fires(c.enabled, c.probability, rng) {
        let limit = draw(rng, c.clip) * peak_abs(&x);
        for v in x.iter_mut() {
            *v = v.clamp(-limit, limit);
        }
    }
    x
}
