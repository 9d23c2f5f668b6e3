use serde::{Deserialize, Serialize};

use crate::resample::Interpolation;
use crate::{Error, Result};

/// Closed range `[lo, hi]` written as a two-element array in config files.
pub type Range = (f64, f64);

/// Generation parameters. Probabilities are thresholds for independent
/// uniform draws; ranges are sampled uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub target_fs: f64,
    pub target_length: usize,

    // global rules
    pub p_vt: f64,
    pub p_af: f64,
    pub p_av_block: f64,
    pub p_sinus_arrest: f64,
    pub p_st_shift: f64,

    // per-cycle rules
    pub p_no_p: f64,
    pub p_no_qrst: f64,
    pub p_no_pq: f64,
    pub p_no_st: f64,
    pub p_no_tp: f64,
    pub p_u_wave: f64,
    pub p_ectopic: f64,
    pub p_merge_pqrs: f64,
    pub p_merge_qrst: f64,
    pub p_merge_tp: f64,

    /// Seconds of flat baseline inserted by a sinus arrest.
    pub sinus_arrest_duration: Range,
    /// Signed ST offset as a fraction of the cycle's QRS amplitude.
    pub st_shift: Range,
    /// Per-segment length factor.
    pub cycle_jitter: Range,
    /// Multiplier applied to the whole trace (normalized units to mV).
    pub global_amplitude: Range,
    /// Clamp for QRS amplitudes drawn from the normal model.
    pub qrs_amplitude_clamp: Range,

    pub ectopic_amplitude: Range,
    pub ectopic_duration: Range,
    /// Inclusive range of the AV-block period (every n-th QRS+T dropped).
    pub av_block_period: (u32, u32),
    /// U-wave amplitude as a fraction of the QRS amplitude.
    pub u_wave_amplitude: Range,
    /// TP length factor during VT.
    pub vt_tp_factor: Range,
    /// Segment length factor during AF, replacing `cycle_jitter`.
    pub af_jitter: Range,
    /// Fibrillatory wave amplitude as a fraction of the QRS amplitude.
    pub af_wave_amplitude: Range,
    /// Seconds per fibrillatory wave.
    pub af_wave_duration: Range,

    // post-composition operations
    pub p_baseline_wander: f64,
    pub wander_amplitude: Range,
    pub wander_frequency: Range,
    pub p_rhythm_interpolation: f64,
    /// Stretch factor for the global resampling (<1 faster, >1 slower).
    pub rhythm_factor: Range,
    pub p_flatline_edge: f64,
    /// Longest flat edge as a fraction of `target_length`.
    pub flatline_max_fraction: f64,

    pub interpolation: Interpolation,
    pub rng_seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            target_fs: 250.0,
            target_length: 2048,
            p_vt: 0.05,
            p_af: 0.05,
            p_av_block: 0.05,
            p_sinus_arrest: 0.05,
            p_st_shift: 0.10,
            p_no_p: 0.05,
            p_no_qrst: 0.05,
            p_no_pq: 0.05,
            p_no_st: 0.05,
            p_no_tp: 0.05,
            p_u_wave: 0.05,
            p_ectopic: 0.08,
            p_merge_pqrs: 0.05,
            p_merge_qrst: 0.05,
            p_merge_tp: 0.05,
            sinus_arrest_duration: (1.0, 2.5),
            st_shift: (-0.25, 0.25),
            cycle_jitter: (0.8, 1.2),
            global_amplitude: (0.5, 1.5),
            qrs_amplitude_clamp: (0.05, 2.0),
            ectopic_amplitude: (1.2, 2.0),
            ectopic_duration: (1.5, 2.5),
            av_block_period: (2, 4),
            u_wave_amplitude: (0.1, 0.3),
            vt_tp_factor: (0.1, 0.5),
            af_jitter: (0.6, 1.4),
            af_wave_amplitude: (0.03, 0.1),
            af_wave_duration: (0.1, 0.2),
            p_baseline_wander: 0.5,
            wander_amplitude: (0.0, 0.15),
            wander_frequency: (0.05, 0.5),
            p_rhythm_interpolation: 0.5,
            rhythm_factor: (0.85, 1.2),
            p_flatline_edge: 0.1,
            flatline_max_fraction: 0.1,
            interpolation: Interpolation::Linear,
            rng_seed: 123_456,
        }
    }
}

impl GenerationConfig {
    /// Every knob at its neutral value: no rules fire, no post-composition
    /// operation is applied and the global amplitude is 1.
    pub fn plain() -> Self {
        GenerationConfig {
            p_vt: 0.0,
            p_af: 0.0,
            p_av_block: 0.0,
            p_sinus_arrest: 0.0,
            p_st_shift: 0.0,
            p_no_p: 0.0,
            p_no_qrst: 0.0,
            p_no_pq: 0.0,
            p_no_st: 0.0,
            p_no_tp: 0.0,
            p_u_wave: 0.0,
            p_ectopic: 0.0,
            p_merge_pqrs: 0.0,
            p_merge_qrst: 0.0,
            p_merge_tp: 0.0,
            p_baseline_wander: 0.0,
            p_rhythm_interpolation: 0.0,
            p_flatline_edge: 0.0,
            global_amplitude: (1.0, 1.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("p_vt", self.p_vt),
            ("p_af", self.p_af),
            ("p_av_block", self.p_av_block),
            ("p_sinus_arrest", self.p_sinus_arrest),
            ("p_st_shift", self.p_st_shift),
            ("p_no_p", self.p_no_p),
            ("p_no_qrst", self.p_no_qrst),
            ("p_no_pq", self.p_no_pq),
            ("p_no_st", self.p_no_st),
            ("p_no_tp", self.p_no_tp),
            ("p_u_wave", self.p_u_wave),
            ("p_ectopic", self.p_ectopic),
            ("p_merge_pqrs", self.p_merge_pqrs),
            ("p_merge_qrst", self.p_merge_qrst),
            ("p_merge_tp", self.p_merge_tp),
            ("p_baseline_wander", self.p_baseline_wander),
            ("p_rhythm_interpolation", self.p_rhythm_interpolation),
            ("p_flatline_edge", self.p_flatline_edge),
            ("flatline_max_fraction", self.flatline_max_fraction),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not in [0, 1]")));
            }
        }
        let ranges = [
            ("sinus_arrest_duration", self.sinus_arrest_duration),
            ("st_shift", self.st_shift),
            ("cycle_jitter", self.cycle_jitter),
            ("global_amplitude", self.global_amplitude),
            ("qrs_amplitude_clamp", self.qrs_amplitude_clamp),
            ("ectopic_amplitude", self.ectopic_amplitude),
            ("ectopic_duration", self.ectopic_duration),
            ("u_wave_amplitude", self.u_wave_amplitude),
            ("vt_tp_factor", self.vt_tp_factor),
            ("af_jitter", self.af_jitter),
            ("af_wave_amplitude", self.af_wave_amplitude),
            ("af_wave_duration", self.af_wave_duration),
            ("wander_amplitude", self.wander_amplitude),
            ("wander_frequency", self.wander_frequency),
            ("rhythm_factor", self.rhythm_factor),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("{name} = [{lo}, {hi}] is empty")));
            }
        }
        if self.av_block_period.0 < 1 || self.av_block_period.0 > self.av_block_period.1 {
            return Err(Error::Config("av_block_period must be a non-empty range ≥ 1".into()));
        }
        if self.target_length == 0 {
            return Err(Error::Config("target_length must be positive".into()));
        }
        if !(self.target_fs > 0.0) {
            return Err(Error::Config("target_fs must be positive".into()));
        }
        if self.rhythm_factor.0 < 0.25 {
            return Err(Error::Config("rhythm_factor lower bound must be ≥ 0.25".into()));
        }
        if self.cycle_jitter.0 <= 0.0 || self.af_jitter.0 <= 0.0 {
            return Err(Error::Config("length factors must be positive".into()));
        }
        Ok(())
    }
}
