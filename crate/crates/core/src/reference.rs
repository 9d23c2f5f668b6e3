//! Parametric annotated ECG records.
//!
//! No clinical database ships with this crate, so pools, demos and tests draw
//! their "real" source material from this generator: beats built from
//! windowed bumps and Gaussians with exact wave boundaries, per-subject
//! morphology, beat-to-beat jitter and additive sensor noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{FiducialSet, Interval, WaveKind};
use crate::rng::{stream_rng, GenRng};
use crate::EcgRecord;

#[derive(Debug, Clone)]
pub struct ReferenceConfig {
    pub sampling_rate: f64,
    pub duration_s: f64,
    pub leads: usize,
    pub heart_rate_bpm: (f64, f64),
    pub noise_sd_mv: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            sampling_rate: 250.0,
            duration_s: 10.0,
            leads: 2,
            heart_rate_bpm: (55.0, 100.0),
            noise_sd_mv: 0.005,
        }
    }
}

/// Subject-level morphology parameters (durations in seconds, amplitudes in mV).
#[derive(Debug, Clone)]
struct Morphology {
    p_dur: f64,
    p_amp: f64,
    pq_dur: f64,
    qrs_dur: f64,
    r_amp: f64,
    q_frac: f64,
    s_frac: f64,
    st_dur: f64,
    t_dur: f64,
    t_amp: f64,
    rr: f64,
}

impl Morphology {
    fn draw(cfg: &ReferenceConfig, rng: &mut GenRng) -> Self {
        let hr = rng.random_range(cfg.heart_rate_bpm.0..=cfg.heart_rate_bpm.1);
        Morphology {
            p_dur: rng.random_range(0.08..0.11),
            p_amp: rng.random_range(0.08..0.25),
            pq_dur: rng.random_range(0.04..0.09),
            qrs_dur: rng.random_range(0.07..0.11),
            r_amp: rng.random_range(0.8..1.8),
            q_frac: rng.random_range(0.03..0.15),
            s_frac: rng.random_range(0.1..0.35),
            st_dur: rng.random_range(0.06..0.12),
            t_dur: rng.random_range(0.14..0.22),
            t_amp: rng.random_range(0.15..0.5),
            rr: 60.0 / hr,
        }
    }
}

fn bump(u: f64) -> f64 {
    (std::f64::consts::PI * u).sin().powi(2)
}

fn t_shape(u: f64) -> f64 {
    // slower rise than fall
    bump(u.powf(0.8))
}

fn qrs_shape(u: f64, q: f64, s: f64) -> f64 {
    let g = |c: f64, w: f64| (-0.5 * ((u - c) / w).powi(2)).exp();
    -q * g(0.25, 0.06) + g(0.5, 0.08) - s * g(0.72, 0.06)
}

/// One annotated record. `subject` seeds the morphology, `index` the beat
/// variability and noise.
pub fn reference_record(cfg: &ReferenceConfig, subject: u64, index: u64, seed: u64) -> (EcgRecord, FiducialSet) {
    let mut subj_rng = stream_rng(seed, subject.wrapping_mul(2));
    let morph = Morphology::draw(cfg, &mut subj_rng);
    let lead_gain: Vec<(f64, f64)> = (0..cfg.leads)
        .map(|_| {
            let g = subj_rng.random_range(0.5..1.2) * if subj_rng.random_bool(0.25) { -1.0 } else { 1.0 };
            (g, subj_rng.random_range(0.6..1.3))
        })
        .collect();

    let mut rng = stream_rng(seed ^ 0x5eed_0f_ecb, subject.wrapping_mul(1 << 20).wrapping_add(index));
    let fs = cfg.sampling_rate;
    let n = (cfg.duration_s * fs).round() as usize;
    let mut leads = vec![vec![0.0; n]; cfg.leads];
    let mut fids = FiducialSet::empty();
    let secs = |s: f64| ((s * fs).round() as usize).max(1);

    let mut t = secs(rng.random_range(0.05..morph.rr * 0.8));
    loop {
        let jitter = |rng: &mut GenRng, base: f64| base * rng.random_range(0.93..1.07);
        let p_len = secs(jitter(&mut rng, morph.p_dur));
        let pq_len = secs(jitter(&mut rng, morph.pq_dur));
        let qrs_len = secs(jitter(&mut rng, morph.qrs_dur));
        let st_len = secs(jitter(&mut rng, morph.st_dur));
        let t_len = secs(jitter(&mut rng, morph.t_dur));
        let rr = secs(jitter(&mut rng, morph.rr));
        let amp = rng.random_range(0.92..1.08);

        let p = Interval::new(t, t + p_len).unwrap();
        let qrs = Interval::new(p.offset + pq_len, p.offset + pq_len + qrs_len).unwrap();
        let tw = Interval::new(qrs.offset + st_len, qrs.offset + st_len + t_len).unwrap();
        if tw.offset >= n {
            break;
        }
        for (lead, &(gain, t_gain)) in leads.iter_mut().zip(&lead_gain) {
            for (iv, f, a) in [
                (p, &bump as &dyn Fn(f64) -> f64, morph.p_amp),
                (qrs, &|u| qrs_shape(u, morph.q_frac, morph.s_frac), morph.r_amp),
                (tw, &t_shape, morph.t_amp * t_gain),
            ] {
                for i in iv.onset..iv.offset {
                    let u = (i - iv.onset) as f64 / (iv.len() - 1).max(1) as f64;
                    lead[i] += gain * amp * a * f(u);
                }
            }
        }
        fids.push(WaveKind::P, p).expect("beats are sequential");
        fids.push(WaveKind::Qrs, qrs).expect("beats are sequential");
        fids.push(WaveKind::T, tw).expect("beats are sequential");
        // keep at least a short TP even at high rates
        t = (p.onset + rr).max(tw.offset + secs(0.04));
    }

    let noise = Normal::new(0.0, cfg.noise_sd_mv.max(0.0)).expect("finite sd");
    for lead in &mut leads {
        for x in lead.iter_mut() {
            *x += noise.sample(&mut rng);
        }
    }
    let names = (0..cfg.leads).map(|i| format!("L{}", i + 1)).collect();
    let rec = EcgRecord::new(format!("ref{subject:03}-{index}"), fs, names, leads).expect("consistent shape");
    (rec, fids)
}

/// `count` records from `count.div_ceil(2)` subjects (two records each).
pub fn reference_dataset(cfg: &ReferenceConfig, count: usize, seed: u64) -> Vec<(EcgRecord, FiducialSet)> {
    (0..count)
        .map(|i| reference_record(cfg, (i / 2) as u64, (i % 2) as u64, seed))
        .collect()
}
