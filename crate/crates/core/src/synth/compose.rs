use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sample_cycle_rules, sample_global_rules, uniform, CycleRules, GenerationConfig, GlobalRules};
use crate::pool::{peak_abs, AmplitudeModel, SegmentPool};
use crate::resample::resample;
use crate::rng::stream_rng;
use crate::{fiducials_from_mask, DelineationMask, EcgRecord, Error, FiducialSet, Result, SegmentKind, WaveKind};

/// One pooled segment placed in a cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentLog {
    pub kind: SegmentKind,
    /// Index into the pool's templates of this kind.
    pub template: usize,
    /// `[start, end)`; cycle coordinates in a [`CycleOutput`], final trace
    /// coordinates in a [`Provenance`] (possibly empty when cropped away).
    pub span: (usize, usize),
    /// Template length at the target sampling rate, before jitter.
    pub native_len: usize,
    pub jitter: f64,
    /// Peak |sample| for waves, scale factor for pauses.
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtraKind {
    UWave,
    Fibrillation,
    Arrest,
}

/// Unlabelled material that does not come from the segment kind itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraLog {
    pub kind: ExtraKind,
    pub span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleLog {
    pub index: usize,
    pub rules: CycleRules,
    pub qrs_amplitude: f64,
    pub segments: Vec<SegmentLog>,
    pub extras: Vec<ExtraLog>,
}

impl CycleLog {
    pub fn segment(&self, kind: SegmentKind) -> Option<&SegmentLog> {
        self.segments.iter().find(|s| s.kind == kind)
    }
}

#[derive(Debug, Clone)]
pub struct CycleOutput {
    pub samples: Vec<f64>,
    pub labels: Vec<Option<WaveKind>>,
    pub log: CycleLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatEdge {
    pub at_start: bool,
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wander {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

/// Everything drawn while generating one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub global: GlobalRules,
    /// Offset of the first kept sample inside the composed cycles.
    pub start_offset: usize,
    pub rhythm_factor: f64,
    pub wander: Vec<Wander>,
    pub amplitude_factor: f64,
    pub flatline: Option<FlatEdge>,
    /// Cycles overlapping the final trace, spans in final coordinates.
    pub cycles: Vec<CycleLog>,
}

impl Provenance {
    /// One line per cycle, preceded by `#` lines describing global draws.
    pub fn rule_log(&self) -> String {
        let g = &self.global;
        let mut out = format!(
            "# vt={} af={} av_block={} sinus_arrest={} st_shift={}\n",
            u8::from(g.vt),
            u8::from(g.af),
            g.av_block.map_or("-".to_string(), |v| v.to_string()),
            g.sinus_arrest.map_or("-".to_string(), |v| v.to_string()),
            g.st_shift.map_or("-".to_string(), |v| format!("{v:.4}")),
        );
        out += &format!(
            "# start={} rhythm={:.4} wander={} amplitude={:.4} flatline={}\n",
            self.start_offset,
            self.rhythm_factor,
            self.wander.len(),
            self.amplitude_factor,
            self.flatline
                .map_or("-".to_string(), |f| format!("{}:{}", if f.at_start { "start" } else { "end" }, f.len)),
        );
        for c in &self.cycles {
            out += &format!("cycle={} {} qrs_amp={:.5}", c.index, c.rules.log_fields(), c.qrs_amplitude);
            for s in &c.segments {
                out += &format!(" {}#{}@{}..{}", s.kind, s.template, s.span.0, s.span.1);
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticRecord {
    pub record: EcgRecord,
    pub mask: DelineationMask,
    pub provenance: Provenance,
}

impl SyntheticRecord {
    pub fn fiducials(&self) -> FiducialSet {
        fiducials_from_mask(&self.mask)
    }
}

/// Draws and shapes segments for consecutive cycles of one record.
///
/// The first template drawn of each wave kind fixes that kind's polarity;
/// later templates are flipped to match it.
pub struct Composer<'a> {
    config: &'a GenerationConfig,
    pool: &'a SegmentPool,
    model: &'a AmplitudeModel,
    polarity: [Option<f64>; 3],
}

struct Shaped {
    template: usize,
    samples: Vec<f64>,
    native_len: usize,
    jitter: f64,
}

fn detrend(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let (a, b) = (xs[0], xs[n - 1]);
    let d = (n - 1) as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| x - (a + (b - a) * i as f64 / d))
        .collect()
}

fn extreme_sign(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if m < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn scale_to_peak(xs: &mut [f64], target: f64) {
    let p = peak_abs(xs);
    if p > 0.0 {
        let k = target / p;
        xs.iter_mut().for_each(|x| *x *= k);
    }
}

impl<'a> Composer<'a> {
    pub fn new(config: &'a GenerationConfig, pool: &'a SegmentPool, model: &'a AmplitudeModel) -> Self {
        Composer { config, pool, model, polarity: [None; 3] }
    }

    fn shape<R: Rng + ?Sized>(&mut self, kind: SegmentKind, factor: f64, rng: &mut R) -> Result<Shaped> {
        let (template, t) = self.pool.draw(kind, rng)?;
        let ratio = self.config.target_fs / self.pool.sampling_rate();
        let native_len = ((t.len() as f64 * ratio).round() as usize).max(1);
        let len = ((native_len as f64 * factor).round() as usize).max(1);
        let mut samples = resample(&detrend(&t.samples), len, self.config.interpolation);
        if let Some(w) = kind.wave() {
            let s = extreme_sign(&samples);
            let reference = *self.polarity[w.index()].get_or_insert(s);
            if reference != s {
                samples.iter_mut().for_each(|x| *x = -*x);
            }
        }
        Ok(Shaped { template, samples, native_len, jitter: factor })
    }

    fn jitter<R: Rng + ?Sized>(&self, global: &GlobalRules, rng: &mut R) -> f64 {
        let range = if global.af { self.config.af_jitter } else { self.config.cycle_jitter };
        uniform(rng, range)
    }

    fn fibrillation<R: Rng + ?Sized>(&mut self, len: usize, qrs_amp: f64, rng: &mut R) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(len + 64);
        while out.len() < len {
            let (_, t) = self.pool.draw(SegmentKind::P, rng)?;
            let wave_len = ((uniform(rng, self.config.af_wave_duration) * self.config.target_fs).round() as usize).max(2);
            let mut w = resample(&detrend(&t.samples), wave_len, self.config.interpolation);
            let amp = qrs_amp * uniform(rng, self.config.af_wave_amplitude);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            scale_to_peak(&mut w, sign * amp);
            if peak_abs(&w) == 0.0 {
                // flat P template: fall back to a half sine
                w = (0..wave_len)
                    .map(|i| sign * amp * (std::f64::consts::PI * (i as f64 + 0.5) / wave_len as f64).sin())
                    .collect();
            }
            out.extend(w);
        }
        out.truncate(len);
        Ok(out)
    }

    /// Builds one cycle. `extra_pause` flat samples are appended after the
    /// TP segment (sinus arrest).
    pub fn compose_cycle<R: Rng + ?Sized>(
        &mut self,
        global: &GlobalRules,
        rules: CycleRules,
        index: usize,
        extra_pause: usize,
        rng: &mut R,
    ) -> Result<CycleOutput> {
        let cfg = self.config;
        let (lo, hi) = cfg.qrs_amplitude_clamp;
        let mut qrs_amp = self.model.sample_qrs(rng).clamp(lo, hi);
        let mut qrs_stretch = 1.0;
        if rules.ectopic {
            qrs_amp *= uniform(rng, cfg.ectopic_amplitude);
            qrs_stretch = uniform(rng, cfg.ectopic_duration);
        }
        if global.vt {
            qrs_stretch = uniform(rng, cfg.ectopic_duration);
        }

        let mut samples = Vec::new();
        let mut labels = Vec::new();
        let mut segments = Vec::new();
        let mut extras = Vec::new();
        let push = |xs: Vec<f64>, label: Option<WaveKind>, samples: &mut Vec<f64>, labels: &mut Vec<Option<WaveKind>>| {
            let start = samples.len();
            labels.extend(std::iter::repeat_n(label, xs.len()));
            samples.extend(xs);
            (start, samples.len())
        };

        let order = [
            (SegmentKind::P, rules.has_p),
            (SegmentKind::Pq, rules.has_pq),
            (SegmentKind::Qrs, rules.has_qrst),
            (SegmentKind::St, rules.has_st),
            (SegmentKind::T, rules.has_qrst),
            (SegmentKind::Tp, rules.has_tp),
        ];
        for (kind, present) in order {
            if !present {
                continue;
            }
            let mut factor = self.jitter(global, rng);
            if kind == SegmentKind::Qrs {
                factor *= qrs_stretch;
            }
            if kind == SegmentKind::Tp && global.vt {
                factor *= uniform(rng, cfg.vt_tp_factor);
            }
            let mut shaped = self.shape(kind, factor, rng)?;
            let amplitude = match kind {
                SegmentKind::Qrs => qrs_amp,
                SegmentKind::P | SegmentKind::T => qrs_amp * self.model.sample_fraction(kind, rng)?,
                _ => qrs_amp,
            };
            if kind.is_pause() {
                shaped.samples.iter_mut().for_each(|x| *x *= amplitude);
            } else {
                scale_to_peak(&mut shaped.samples, amplitude);
            }
            if kind == SegmentKind::St {
                if let Some(shift) = global.st_shift {
                    let n = shaped.samples.len();
                    let taper = (n / 4).max(1);
                    for (i, x) in shaped.samples.iter_mut().enumerate() {
                        let edge = i.min(n - 1 - i) as f64 + 0.5;
                        let w = (edge / taper as f64).min(1.0);
                        *x += shift * qrs_amp * w;
                    }
                }
            }
            let (label, content) = if kind == SegmentKind::Tp && global.af {
                let len = shaped.samples.len();
                (None, Some(self.fibrillation(len, qrs_amp, rng)?))
            } else {
                (kind.wave(), None)
            };
            let fib = content.is_some();
            let span = push(content.unwrap_or(shaped.samples), label, &mut samples, &mut labels);
            if fib {
                extras.push(ExtraLog { kind: ExtraKind::Fibrillation, span });
            }
            segments.push(SegmentLog {
                kind,
                template: shaped.template,
                span,
                native_len: shaped.native_len,
                jitter: shaped.jitter,
                amplitude,
            });
            if kind == SegmentKind::T && rules.has_u {
                let factor = self.jitter(global, rng);
                let mut u = self.shape(SegmentKind::P, factor, rng)?.samples;
                let amp = qrs_amp * uniform(rng, cfg.u_wave_amplitude);
                let s = extreme_sign(&u);
                scale_to_peak(&mut u, s * amp);
                let span = push(u, None, &mut samples, &mut labels);
                extras.push(ExtraLog { kind: ExtraKind::UWave, span });
            }
        }
        if extra_pause > 0 {
            let level = samples.last().copied().unwrap_or(0.0);
            let span = push(vec![level; extra_pause], None, &mut samples, &mut labels);
            extras.push(ExtraLog { kind: ExtraKind::Arrest, span });
        }
        if samples.is_empty() {
            return Err(Error::Numeric(format!("cycle {index} composed no samples")));
        }
        Ok(CycleOutput {
            samples,
            labels,
            log: CycleLog { index, rules, qrs_amplitude: qrs_amp, segments, extras },
        })
    }
}

fn shift_span(span: (usize, usize), by: usize) -> (usize, usize) {
    (span.0 + by, span.1 + by)
}

/// Composes one record of `config.target_length` samples.
///
/// Cycles are drawn until the requested length (plus the random starting
/// offset inside the first cycle) is covered. Adjacent regions of the same
/// wave are kept apart by a short unlabelled separator. Post-composition
/// operations run in the fixed order: starting-segment crop, rhythm
/// interpolation, baseline wander, global amplitude, flat-line edge.
pub fn compose_record<R: Rng + ?Sized>(
    config: &GenerationConfig,
    pool: &SegmentPool,
    model: &AmplitudeModel,
    rng: &mut R,
) -> Result<SyntheticRecord> {
    config.validate()?;
    let length = config.target_length;
    let global = sample_global_rules(config, rng);
    let rhythm_on = rng.random::<f64>() < config.p_rhythm_interpolation;
    let rhythm_draw = uniform(rng, config.rhythm_factor);
    let r = if rhythm_on { rhythm_draw } else { 1.0 };
    let raw_needed = (((length - 1) as f64) / r).floor() as usize + 2;
    let r_min = if config.p_rhythm_interpolation > 0.0 { config.rhythm_factor.0.min(1.0) } else { 1.0 };
    let separator = ((1.0 / r_min).ceil() as usize + 1).max(2);
    let arrest_point = uniform(rng, (0.0, 0.75 * raw_needed as f64));

    let mut composer = Composer::new(config, pool, model);
    let mut raw: Vec<f64> = Vec::new();
    let mut labels: Vec<Option<WaveKind>> = Vec::new();
    let mut logs: Vec<CycleLog> = Vec::new();
    let mut start = 0usize;
    let mut arrest_pending = global.sinus_arrest;
    let mut index = 0usize;
    while index == 0 || raw.len() < start + raw_needed {
        let rules = sample_cycle_rules(config, &global, index, rng);
        let rel = raw.len() as f64 - start as f64;
        let extra = match arrest_pending {
            Some(n) if index > 0 && rel >= arrest_point => {
                arrest_pending = None;
                n
            }
            _ => 0,
        };
        let mut cycle = composer.compose_cycle(&global, rules, index, extra, rng)?;
        if let (Some(Some(a)), Some(Some(b))) = (labels.last(), cycle.labels.first()) {
            if a == b {
                let level = *raw.last().unwrap();
                raw.extend(std::iter::repeat_n(level, separator));
                labels.extend(std::iter::repeat_n(None, separator));
            }
        }
        let offset = raw.len();
        for s in &mut cycle.log.segments {
            s.span = shift_span(s.span, offset);
        }
        for e in &mut cycle.log.extras {
            e.span = shift_span(e.span, offset);
        }
        raw.extend(cycle.samples);
        labels.extend(cycle.labels);
        logs.push(cycle.log);
        if index == 0 {
            start = rng.random_range(0..raw.len());
        }
        index += 1;
    }

    // crop + rhythm interpolation through one index map
    let src_label = |j: usize| -> usize { start + ((j as f64 / r).round() as usize).min(raw_needed - 1) };
    let mut signal = Vec::with_capacity(length);
    let mut mask = DelineationMask::new(length)?;
    for j in 0..length {
        let t = j as f64 / r;
        let i0 = t.floor() as usize;
        let frac = t - i0 as f64;
        let a = raw[start + i0];
        let b = raw[start + (i0 + 1).min(raw_needed - 1)];
        signal.push(a + (b - a) * frac);
        if let Some(w) = labels[src_label(j)] {
            mask.channel_mut(w)[j] = true;
        }
    }
    // first final index whose source index reaches `x`; src_label is monotone
    let to_final = |x: usize| -> usize {
        let (mut lo, mut hi) = (0usize, length);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if src_label(mid) < x {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let map_span = |(s, e): (usize, usize)| -> (usize, usize) {
        let a = to_final(s.max(start));
        let b = to_final(e.max(start)).max(a);
        (a, b)
    };
    let mut cycles = Vec::new();
    for mut log in logs {
        for s in &mut log.segments {
            s.span = map_span(s.span);
        }
        for e in &mut log.extras {
            e.span = map_span(e.span);
        }
        if log.segments.iter().any(|s| s.span.1 > s.span.0) || log.extras.iter().any(|e| e.span.1 > e.span.0) {
            cycles.push(log);
        }
    }

    let mut wander = Vec::new();
    if rng.random::<f64>() < config.p_baseline_wander {
        let count = rng.random_range(1..=3usize);
        let total = uniform(rng, config.wander_amplitude);
        for _ in 0..count {
            wander.push(Wander {
                amplitude: total / count as f64,
                frequency: uniform(rng, config.wander_frequency),
                phase: rng.random_range(0.0..TAU),
            });
        }
        for (j, x) in signal.iter_mut().enumerate() {
            let t = j as f64 / config.target_fs;
            *x += wander.iter().map(|w| w.amplitude * (TAU * w.frequency * t + w.phase).sin()).sum::<f64>();
        }
    }

    let amplitude_factor = uniform(rng, config.global_amplitude);
    signal.iter_mut().for_each(|x| *x *= amplitude_factor);

    let mut flatline = None;
    if rng.random::<f64>() < config.p_flatline_edge && length > 1 {
        let max = ((config.flatline_max_fraction * length as f64).floor() as usize).clamp(1, length - 1);
        let k = rng.random_range(1..=max);
        let at_start = rng.random::<bool>();
        let range = if at_start { 0..k } else { length - k..length };
        let level = if at_start { signal[k] } else { signal[length - k - 1] };
        for j in range.clone() {
            signal[j] = level;
            for w in WaveKind::ALL {
                mask.channel_mut(w)[j] = false;
            }
        }
        let clip = |span: &mut (usize, usize)| {
            if at_start {
                span.0 = span.0.max(k);
                span.1 = span.1.max(span.0);
            } else {
                span.1 = span.1.min(length - k);
                span.0 = span.0.min(span.1);
            }
        };
        for c in &mut cycles {
            c.segments.iter_mut().for_each(|s| clip(&mut s.span));
            c.extras.iter_mut().for_each(|e| clip(&mut e.span));
        }
        flatline = Some(FlatEdge { at_start, len: k });
    }

    if signal.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("synthesized signal is not finite".into()));
    }
    Ok(SyntheticRecord {
        record: EcgRecord::single_lead("synth", config.target_fs, signal)?,
        mask,
        provenance: Provenance {
            global,
            start_offset: start,
            rhythm_factor: r,
            wander,
            amplitude_factor,
            flatline,
            cycles,
        },
    })
}

/// Deterministic record source: record `index` is drawn from its own RNG
/// stream of `config.rng_seed`, independently of every other index.
#[derive(Debug, Clone, Copy)]
pub struct Synthesizer<'a> {
    config: &'a GenerationConfig,
    pool: &'a SegmentPool,
    model: &'a AmplitudeModel,
}

impl<'a> Synthesizer<'a> {
    pub fn new(config: &'a GenerationConfig, pool: &'a SegmentPool, model: &'a AmplitudeModel) -> Result<Self> {
        config.validate()?;
        for kind in SegmentKind::ALL {
            if pool.count(kind) == 0 {
                return Err(Error::EmptyPool { kind });
            }
        }
        Ok(Synthesizer { config, pool, model })
    }

    pub fn config(&self) -> &GenerationConfig {
        self.config
    }

    pub fn generate(&self, index: u64) -> Result<SyntheticRecord> {
        let mut rng = stream_rng(self.config.rng_seed, index);
        let mut rec = compose_record(self.config, self.pool, self.model, &mut rng)?;
        let id = format!("synth{}-{index}", self.config.rng_seed);
        rec.record = EcgRecord::single_lead(id, self.config.target_fs, rec.record.lead(0).to_vec())?;
        Ok(rec)
    }
}
