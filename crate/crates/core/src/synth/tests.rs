use proptest::prelude::*;

use super::*;
use crate::data::runs_of;
use crate::pool::{build_pool, fit_amplitude_models, AmplitudeModel, SegmentPool};
use crate::reference::{reference_dataset, ReferenceConfig};
use crate::rng::seeded_rng;
use crate::{SegmentKind, WaveKind};

fn fixture() -> (SegmentPool, AmplitudeModel) {
    let data = reference_dataset(&ReferenceConfig::default(), 6, 42);
    let pool = build_pool(&data).unwrap().pool;
    let model = fit_amplitude_models(&pool).unwrap();
    (pool, model)
}

fn stress() -> GenerationConfig {
    GenerationConfig {
        p_vt: 0.2,
        p_af: 0.2,
        p_av_block: 0.3,
        p_sinus_arrest: 0.3,
        p_st_shift: 0.3,
        p_no_p: 0.2,
        p_no_qrst: 0.2,
        p_no_pq: 0.3,
        p_no_st: 0.3,
        p_no_tp: 0.3,
        p_u_wave: 0.3,
        p_ectopic: 0.2,
        p_merge_pqrs: 0.3,
        p_merge_qrst: 0.3,
        p_merge_tp: 0.3,
        p_flatline_edge: 0.5,
        p_rhythm_interpolation: 0.7,
        rhythm_factor: (0.8, 1.25),
        ..GenerationConfig::default()
    }
}

/// Mask channels must be exactly the union of the logged spans of that wave,
/// one run per non-empty span.
fn check_labels(rec: &SyntheticRecord) {
    for w in WaveKind::ALL {
        let spans: Vec<(usize, usize)> = rec
            .provenance
            .cycles
            .iter()
            .flat_map(|c| c.segments.iter())
            .filter(|s| s.kind.wave() == Some(w) && s.span.1 > s.span.0)
            .map(|s| s.span)
            .collect();
        let runs: Vec<(usize, usize)> = runs_of(rec.mask.channel(w)).iter().map(|r| (r.onset, r.offset)).collect();
        assert_eq!(runs, spans, "{w}");
    }
}

#[test]
fn plain_records_have_full_cycles() {
    let (pool, model) = fixture();
    let cfg = GenerationConfig::plain();
    let synth = Synthesizer::new(&cfg, &pool, &model).unwrap();
    let rec = synth.generate(0).unwrap();
    assert_eq!(rec.record.len(), cfg.target_length);
    assert_eq!(rec.record.sampling_rate(), cfg.target_fs);
    assert!(rec.provenance.cycles.len() > 5);
    for c in &rec.provenance.cycles {
        assert_eq!(c.rules, CycleRules::full());
    }
    check_labels(&rec);
    let f = rec.fiducials();
    let (p, q, t) = (f.get(WaveKind::P).len(), f.get(WaveKind::Qrs).len(), f.get(WaveKind::T).len());
    assert!(p.abs_diff(q) <= 1 && q.abs_diff(t) <= 1, "{p} {q} {t}");
}

#[test]
fn qrs_peaks_equal_drawn_amplitude() {
    let (pool, model) = fixture();
    let cfg = GenerationConfig::plain();
    let rec = Synthesizer::new(&cfg, &pool, &model).unwrap().generate(3).unwrap();
    let x = rec.record.lead(0);
    let mut checked = 0;
    for c in &rec.provenance.cycles {
        let s = c.segment(SegmentKind::Qrs).unwrap();
        if s.span.0 == 0 || s.span.1 >= x.len() {
            continue;
        }
        let peak = x[s.span.0..s.span.1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - c.qrs_amplitude).abs() < 1e-12);
        checked += 1;
    }
    assert!(checked > 3);
}

#[test]
fn deterministic_per_index() {
    let (pool, model) = fixture();
    let cfg = stress();
    let synth = Synthesizer::new(&cfg, &pool, &model).unwrap();
    let a = synth.generate(5).unwrap();
    let b = synth.generate(5).unwrap();
    let c = synth.generate(6).unwrap();
    assert_eq!(a.record, b.record);
    assert_eq!(a.mask, b.mask);
    assert_eq!(a.provenance, b.provenance);
    assert_ne!(a.record.lead(0), c.record.lead(0));
}

#[test]
fn vt_and_af_records_have_no_p_labels() {
    let (pool, model) = fixture();
    for cfg in [
        GenerationConfig { p_vt: 1.0, ..GenerationConfig::default() },
        GenerationConfig { p_af: 1.0, ..GenerationConfig::default() },
    ] {
        let synth = Synthesizer::new(&cfg, &pool, &model).unwrap();
        for i in 0..10 {
            let rec = synth.generate(i).unwrap();
            assert!(rec.mask.channel(WaveKind::P).iter().all(|v| !v));
            assert!(rec.mask.channel(WaveKind::Qrs).iter().any(|&v| v));
        }
    }
}

#[test]
fn af_replaces_tp_with_fibrillation() {
    let (pool, model) = fixture();
    let cfg = GenerationConfig { p_af: 1.0, ..GenerationConfig::plain() };
    let rec = Synthesizer::new(&cfg, &pool, &model).unwrap().generate(1).unwrap();
    let fib = rec
        .provenance
        .cycles
        .iter()
        .flat_map(|c| &c.extras)
        .filter(|e| e.kind == ExtraKind::Fibrillation)
        .count();
    assert!(fib > 3);
}

#[test]
fn sinus_arrest_inserts_pause() {
    let (pool, model) = fixture();
    let cfg = GenerationConfig { p_sinus_arrest: 1.0, ..GenerationConfig::plain() };
    let synth = Synthesizer::new(&cfg, &pool, &model).unwrap();
    let mut seen = 0;
    for i in 0..10 {
        let rec = synth.generate(i).unwrap();
        let n = rec.provenance.global.sinus_arrest.unwrap();
        for e in rec.provenance.cycles.iter().flat_map(|c| &c.extras) {
            if e.kind == ExtraKind::Arrest {
                seen += 1;
                assert!(e.span.1 - e.span.0 <= n);
            }
        }
    }
    assert!(seen >= 8, "{seen}");
}

#[test]
fn everything_suppressed_still_composes() {
    let (pool, model) = fixture();
    let cfg = GenerationConfig {
        p_no_p: 1.0,
        p_no_qrst: 1.0,
        p_no_pq: 1.0,
        p_no_st: 1.0,
        p_no_tp: 1.0,
        ..GenerationConfig::plain()
    };
    let rec = Synthesizer::new(&cfg, &pool, &model).unwrap().generate(0).unwrap();
    assert_eq!(rec.record.len(), cfg.target_length);
    assert!(rec.mask.to_f64().iter().all(|&v| v == 0.0));
}

#[test]
fn empty_kind_is_rejected() {
    let (pool, model) = fixture();
    let mut partial = SegmentPool::new(pool.sampling_rate());
    for t in pool.iter().filter(|t| t.kind != SegmentKind::Tp) {
        partial.push(t.clone());
    }
    let cfg = GenerationConfig::default();
    assert!(matches!(
        Synthesizer::new(&cfg, &partial, &model),
        Err(crate::Error::EmptyPool { kind: SegmentKind::Tp })
    ));
    let mut rng = seeded_rng(0);
    assert!(compose_record(&cfg, &partial, &model, &mut rng).is_err());
}

#[test]
fn rhythm_interpolation_rescales_time() {
    let (pool, model) = fixture();
    let base = GenerationConfig::plain();
    let slow = GenerationConfig { p_rhythm_interpolation: 1.0, rhythm_factor: (1.25, 1.25), ..base.clone() };
    let a = Synthesizer::new(&base, &pool, &model).unwrap().generate(2).unwrap();
    let b = Synthesizer::new(&slow, &pool, &model).unwrap().generate(2).unwrap();
    assert_eq!(b.provenance.rhythm_factor, 1.25);
    let count = |r: &SyntheticRecord| r.fiducials().get(WaveKind::Qrs).len() as f64;
    assert!(count(&b) < count(&a));
    check_labels(&b);
}

#[test]
fn rule_log_has_one_line_per_cycle() {
    let (pool, model) = fixture();
    let cfg = stress();
    let rec = Synthesizer::new(&cfg, &pool, &model).unwrap().generate(9).unwrap();
    let log = rec.provenance.rule_log();
    let lines = log.lines().filter(|l| l.starts_with("cycle=")).count();
    assert_eq!(lines, rec.provenance.cycles.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn labels_track_provenance(index in 0u64..10_000, stressed in any::<bool>()) {
        let (pool, model) = fixture();
        let cfg = if stressed { stress() } else { GenerationConfig::default() };
        let rec = Synthesizer::new(&cfg, &pool, &model).unwrap().generate(index).unwrap();
        prop_assert_eq!(rec.record.len(), cfg.target_length);
        prop_assert!(rec.record.lead(0).iter().all(|v| v.is_finite()));
        check_labels(&rec);
        if rec.provenance.global.vt {
            prop_assert!(rec.mask.channel(WaveKind::P).iter().all(|v| !v));
        }
        for c in &rec.provenance.cycles {
            if c.rules.ectopic {
                prop_assert!(!c.rules.has_p);
            }
        }
    }
}
