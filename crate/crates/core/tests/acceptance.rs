//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Exits 0 after reporting, so a documented failure does not hide the rest of
//! the workspace's tests. Set `ACCEPTANCE_STRICT=1` to exit 1 when any
//! criterion fails.

use std::time::{Duration, Instant};

use delineate_core::autodiff::{
    boundary_loss, dice_loss, f1_instance_loss, instance_counts, losses::f1_from_counts, Graph, Tensor, TensorId,
};
use delineate_core::data::io::{format_annotations, format_record, parse_annotations, parse_record};
use delineate_core::eval::{
    correspondence_matrix, detection_metrics, evaluate, majority_vote, resolve_matches, EvaluationConfig,
    MetricsReport, Predictor,
};
use delineate_core::network::{
    train_model, DataMix, Model, ModelPredictor, NetworkConfig, TrainerConfig, TrainingData,
};
use delineate_core::pool::{build_pool, fit_amplitude_models, AmplitudeModel, SegmentPool};
use delineate_core::reference::{reference_dataset, ReferenceConfig};
use delineate_core::rng::seeded_rng;
use delineate_core::stats::ks_one_sample;
use delineate_core::synth::{GenerationConfig, Synthesizer};
use delineate_core::{
    fiducials_from_mask, mask_from_fiducials, DelineationMask, EcgRecord, FiducialSet, Interval, SegmentKind,
    WaveKind,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use statrs::distribution::{ContinuousCDF, LogNormal, Normal};

// pinned tolerances
const FD_STEP: f64 = 1e-6;
const FD_REL_TOL: f64 = 1e-4;
const COUNT_TOL: f64 = 1e-9;
const KS_MIN_P: f64 = 0.01;
const DICE_REDUCTION: f64 = 0.5;
const QRS_F1_MIN: f64 = 0.90;
const ABLATION_F1_DROP: f64 = 0.02;
const WNET_RATIO: f64 = 1.9;
const CYCLES_PER_S_FLOOR: f64 = 100.0;
const CYCLES_PER_S_TARGET: f64 = 500.0;

// desk-scale training setup
const TRAIN_SEED: u64 = 123_456;
const TRAIN_STEPS: usize = 200;
const TRAIN_WINDOW: usize = 512;
const HELD_OUT: u64 = 50;
const HELD_OUT_SEED: u64 = 987_654;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Fixture {
    pool: SegmentPool,
    amp: AmplitudeModel,
}

fn fixture() -> Fixture {
    let data = reference_dataset(&ReferenceConfig::default(), 20, 1);
    let pool = build_pool(&data).expect("pool").pool;
    let amp = fit_amplitude_models(&pool).expect("fit");
    Fixture { pool, amp }
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-3)
}

type LossFn = fn(&mut Graph, TensorId, TensorId) -> TensorId;

fn c1_gradients() -> Outcome {
    let losses: [(&str, LossFn); 3] = [
        ("dice", |g, p, t| dice_loss(g, p, t, 1.0).unwrap()),
        ("boundary(n=11)", |g, p, t| boundary_loss(g, p, t, 11, 1.0).unwrap()),
        ("f1_instance", |g, p, t| f1_instance_loss(g, p, t, 1.0).unwrap()),
    ];
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst = [0.0f64; 3];
    let shape = [2, 3, 64];
    for _ in 0..50 {
        let pred = Tensor::new(shape, (0..384).map(|_| rng.random_range(0.02..0.98)).collect()).unwrap();
        let gt = Tensor::new(shape, (0..384).map(|_| f64::from(u8::from(rng.random_bool(0.4)))).collect()).unwrap();
        for (k, (_, f)) in losses.iter().enumerate() {
            let eval = |p: &Tensor| {
                let mut g = Graph::new();
                let pi = g.param(p.clone());
                let ti = g.constant(gt.clone());
                let l = f(&mut g, pi, ti);
                (g, pi, l)
            };
            let (mut g, pi, l) = eval(&pred);
            g.backward(l).unwrap();
            let grad = g.grad(pi).unwrap();
            for i in 0..pred.numel() {
                let mut a = pred.clone();
                a.data[i] += FD_STEP;
                let mut b = pred.clone();
                b.data[i] -= FD_STEP;
                let (ga, _, la) = eval(&a);
                let (gb, _, lb) = eval(&b);
                let numeric = (ga.value(la).item() - gb.value(lb).item()) / (2.0 * FD_STEP);
                worst[k] = worst[k].max(rel_err(grad.data[i], numeric));
            }
        }
    }
    let pass = worst.iter().all(|&w| w < FD_REL_TOL);
    let detail = losses
        .iter()
        .zip(worst)
        .map(|((n, _), w)| format!("{n} max rel err {w:.2e}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("50 tensors (2,3,64): {detail} (tol {FD_REL_TOL:e})"))
}

/// Random mask whose runs and gaps are at least two samples long, including
/// runs touching either edge.
fn random_runs(rng: &mut StdRng, n: usize) -> Vec<bool> {
    let mut v = vec![false; n];
    let mut i = if rng.random_bool(0.3) { 0 } else { rng.random_range(0..n.min(12)) };
    while i + 2 <= n {
        let len = rng.random_range(2..=24).min(n - i);
        if len < 2 {
            break;
        }
        v[i..i + len].fill(true);
        i += len + rng.random_range(2..=30);
    }
    if rng.random_bool(0.3) && n >= 4 && !v[n - 3] && !v[n - 4] {
        v[n - 2..].fill(true);
    }
    v
}

fn brute_runs(v: &[bool]) -> usize {
    (0..v.len()).filter(|&i| v[i] && (i == 0 || !v[i - 1])).count()
}

fn c2_counting() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut edge_runs = 0;
    for _ in 0..200 {
        let n = rng.random_range(8..=512);
        let v = random_runs(&mut rng, n);
        edge_runs += usize::from(v[0]) + usize::from(v[n - 1]);
        let mut g = Graph::new();
        let x = g.constant(Tensor::new([1, 1, n], v.iter().map(|&b| f64::from(u8::from(b))).collect()).unwrap());
        let c = instance_counts(&mut g, x).unwrap();
        worst = worst.max((g.value(c).item() - brute_runs(&v) as f64).abs());
    }
    let mut eq2_ok = true;
    for gt in 0..=10 {
        for p in 0..=10 {
            let (gf, pf) = (f64::from(gt), f64::from(p));
            let (tp, fp, fn_, loss) = f1_from_counts(gf, pf, 1.0);
            let fn_ref = (gf - pf).max(0.0);
            let tp_ref = (gf - fn_ref).abs();
            let fp_ref = (pf - gf).max(0.0);
            let loss_ref = 1.0 - (2.0 * tp_ref + 1.0) / (2.0 * tp_ref + fp_ref + fn_ref + 1.0);
            eq2_ok &= tp == tp_ref && fp == fp_ref && fn_ == fn_ref && tp == gf.min(pf) && (loss - loss_ref).abs() < 1e-15;
        }
    }
    let pass = worst <= COUNT_TOL && eq2_ok;
    outcome(
        pass,
        format!(
            "200 masks (runs/gaps >= 2, {edge_runs} edge-touching runs): max count err {worst:.1e}; \
             Eq. counts 0..10 incl. TP=min: {}",
            if eq2_ok { "exact" } else { "mismatch" }
        ),
    )
}

fn random_intervals(rng: &mut StdRng, n: usize) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut i = rng.random_range(0..20);
    while i < n {
        let len = rng.random_range(1..=40);
        if i + len > n {
            break;
        }
        out.push(Interval::new(i, i + len).unwrap());
        i += len + rng.random_range(1..=60);
    }
    out
}

/// Containment from scratch: fiducials onset, midpoint and last sample of one
/// interval against the closed span of the other, both ways.
fn brute_corresponds(a: &Interval, b: &Interval) -> bool {
    let fid = |iv: &Interval| {
        let last = (iv.offset - 1) as f64;
        [iv.onset as f64, (iv.onset as f64 + last) / 2.0, last]
    };
    let inside = |iv: &Interval, x: f64| x >= iv.onset as f64 && x <= (iv.offset - 1) as f64;
    fid(b).into_iter().any(|x| inside(a, x)) || fid(a).into_iter().any(|x| inside(b, x))
}

fn c3_matching() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let mut mismatches = 0;
    let mut identity = true;
    for _ in 0..500 {
        let t = random_intervals(&mut rng, 600);
        let p = random_intervals(&mut rng, 600);
        let h = correspondence_matrix(&t, &p);
        for (i, a) in t.iter().enumerate() {
            for (j, b) in p.iter().enumerate() {
                mismatches += usize::from(h.get(i, j) != brute_corresponds(a, b));
            }
        }
        let m = detection_metrics(&resolve_matches(&h, &t, &p), t.len(), p.len());
        identity &= m.tp + m.fn_ == t.len() && m.tp + m.fp == p.len();
    }
    outcome(
        mismatches == 0 && identity,
        format!("500 pairs: {mismatches} cell mismatches; TP+FN=M {}", if identity { "holds" } else { "violated" }),
    )
}

fn peak_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn c4_generator(fx: &Fixture) -> Outcome {
    // amplitude laws measured on the trace itself
    let plain = GenerationConfig { rng_seed: 4, ..GenerationConfig::plain() };
    let synth = Synthesizer::new(&plain, &fx.pool, &fx.amp).unwrap();
    let mut qrs = Vec::new();
    let mut ratio = Vec::new();
    let mut index = 0;
    while qrs.len() < 10_000 {
        let rec = synth.generate(index).unwrap();
        index += 1;
        let x = rec.record.lead(0);
        let cycles = &rec.provenance.cycles;
        // skip the cycles cut by the record edges
        for c in cycles.iter().skip(1).take(cycles.len().saturating_sub(2)) {
            let (Some(q), Some(t)) = (c.segment(SegmentKind::Qrs), c.segment(SegmentKind::T)) else { continue };
            let qa = peak_abs(&x[q.span.0..q.span.1]);
            qrs.push(qa);
            ratio.push(peak_abs(&x[t.span.0..t.span.1]) / qa);
        }
    }
    let qp = fx.amp.qrs;
    let normal = Normal::new(qp.mu, qp.sigma).unwrap();
    let ks_q = ks_one_sample(&qrs, |v| normal.cdf(v));
    let tp = fx.amp.fraction_params(SegmentKind::T).unwrap();
    let lognormal = LogNormal::new(tp.mu_log, tp.sigma_log).unwrap();
    let ks_t = ks_one_sample(&ratio, |v| lognormal.cdf(v));

    // VT removes every P wave
    let vt = GenerationConfig { p_vt: 1.0, rng_seed: 40, ..GenerationConfig::default() };
    let vsynth = Synthesizer::new(&vt, &fx.pool, &fx.amp).unwrap();
    let p_samples: usize = (0..100)
        .map(|i| vsynth.generate(i).unwrap().mask.channel(WaveKind::P).iter().filter(|&&b| b).count())
        .sum();

    // bit-identical regeneration from a fresh instance
    let cfg = GenerationConfig { rng_seed: 41, ..GenerationConfig::default() };
    let a = Synthesizer::new(&cfg, &fx.pool, &fx.amp).unwrap();
    let b = Synthesizer::new(&cfg, &fx.pool, &fx.amp).unwrap();
    let identical = (0..20).all(|i| {
        let (ra, rb) = (a.generate(i).unwrap(), b.generate(i).unwrap());
        let bits = |r: &EcgRecord| r.lead(0).iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        bits(&ra.record) == bits(&rb.record) && ra.mask == rb.mask
    });

    let pass = ks_q.p_value > KS_MIN_P && ks_t.p_value > KS_MIN_P && p_samples == 0 && identical;
    outcome(
        pass,
        format!(
            "{} cycles: QRS~N KS p={:.3}, T/QRS~LogN KS p={:.3}; p_vt=1 P samples in 100 records: {p_samples}; \
             same seed bit-identical: {identical}",
            qrs.len(),
            ks_q.p_value,
            ks_t.p_value
        ),
    )
}

fn desk_net() -> NetworkConfig {
    NetworkConfig { depth: 3, start_channels: 4, ..NetworkConfig::default() }
}

fn desk_trainer(seed: u64, f1_weight: f64) -> TrainerConfig {
    TrainerConfig {
        learning_rate: 1e-3,
        batch_size: 16,
        steps_per_epoch: TRAIN_STEPS,
        epochs: 1,
        window: TRAIN_WINDOW,
        augment: false,
        data_mix: DataMix::Synthetic,
        dice_weight: 1.0,
        boundary_weight: 0.0,
        f1_weight,
        seed,
        ..TrainerConfig::default()
    }
}

struct DeskRun {
    dice_head: f64,
    dice_tail: f64,
    qrs_f1: f64,
    fp_per_record: f64,
}

fn desk_run(fx: &Fixture, seed: u64, f1_weight: f64) -> DeskRun {
    let gen = GenerationConfig::default();
    let data = TrainingData {
        real: Vec::new(),
        synthesizer: Some(Synthesizer::new(&gen, &fx.pool, &fx.amp).unwrap()),
        augmentation: None,
        sampling_rate: gen.target_fs,
    };
    let cfg = desk_trainer(seed, f1_weight);
    let model = Model::with_seed(&desk_net(), seed).unwrap();
    let res = train_model(&cfg, model, &data, |_| {}).expect("training");
    let avg = |rows: &[delineate_core::network::LossRow]| rows.iter().map(|r| r.dice).sum::<f64>() / rows.len() as f64;
    let dice_head = avg(&res.log[..10]);
    let dice_tail = avg(&res.log[TRAIN_STEPS - 10..]);

    let held = GenerationConfig { rng_seed: HELD_OUT_SEED, ..gen };
    let synth = Synthesizer::new(&held, &fx.pool, &fx.amp).unwrap();
    let pred = ModelPredictor { model: &res.model, threshold: 0.5 };
    let preds: [&dyn Predictor; 1] = [&pred];
    let mut report = MetricsReport::empty(Default::default());
    for i in 0..HELD_OUT {
        let rec = synth.generate(i).unwrap();
        report.merge(&evaluate(&rec.record, &rec.fiducials(), &preds, &EvaluationConfig::default()).unwrap());
    }
    let fp: usize = WaveKind::ALL.iter().map(|&w| report.detection(w).fp).sum();
    DeskRun { dice_head, dice_tail, qrs_f1: report.detection(WaveKind::Qrs).f1, fp_per_record: fp as f64 / HELD_OUT as f64 }
}

fn c5_training(base: &DeskRun) -> Outcome {
    let reduction = 1.0 - base.dice_tail / base.dice_head;
    outcome(
        reduction >= DICE_REDUCTION && base.qrs_f1 >= QRS_F1_MIN,
        format!(
            "depth 3, N=4, {TRAIN_STEPS} steps, batch 16, lr 1e-3, seed {TRAIN_SEED}: train Dice {:.4} -> {:.4} \
             ({:.1}% reduction, need >= {:.0}%); held-out QRS F1 {:.4} (need >= {QRS_F1_MIN})",
            base.dice_head,
            base.dice_tail,
            100.0 * reduction,
            100.0 * DICE_REDUCTION,
            base.qrs_f1
        ),
    )
}

fn c6_ablation(fx: &Fixture, base: &DeskRun) -> Outcome {
    let seeds = [TRAIN_SEED, TRAIN_SEED + 1, TRAIN_SEED + 2];
    let mut dice_only = vec![(base.qrs_f1, base.fp_per_record)];
    let mut with_f1 = Vec::new();
    for (k, &s) in seeds.iter().enumerate() {
        if k > 0 {
            let r = desk_run(fx, s, 0.0);
            dice_only.push((r.qrs_f1, r.fp_per_record));
        }
        let r = desk_run(fx, s, 0.2);
        with_f1.push((r.qrs_f1, r.fp_per_record));
    }
    let mean = |v: &[(f64, f64)], f: fn(&(f64, f64)) -> f64| v.iter().map(f).sum::<f64>() / v.len() as f64;
    let (f1_a, fp_a) = (mean(&dice_only, |r| r.0), mean(&dice_only, |r| r.1));
    let (f1_b, fp_b) = (mean(&with_f1, |r| r.0), mean(&with_f1, |r| r.1));
    outcome(
        f1_a - f1_b <= ABLATION_F1_DROP && fp_b < fp_a,
        format!(
            "3 seeds: QRS F1 dice-only {f1_a:.4} vs +0.2 F1 loss {f1_b:.4} (max drop {ABLATION_F1_DROP}); \
             FP/record {fp_a:.2} vs {fp_b:.2}"
        ),
    )
}

fn c7_architecture() -> Outcome {
    let mut ratio_ok = true;
    let mut ratios = Vec::new();
    for (depth, n) in [(3, 4), (4, 8), (5, 8)] {
        let u = NetworkConfig { depth, start_channels: n, ..NetworkConfig::default() };
        let w = NetworkConfig { use_wnet: true, ..u.clone() };
        let r = Model::with_seed(&w, 0).unwrap().param_count() as f64 / Model::with_seed(&u, 0).unwrap().param_count() as f64;
        ratio_ok &= r > WNET_RATIO;
        ratios.push(format!("{r:.3}"));
    }
    let mut ladder_ok = true;
    let mut length_ok = true;
    for depth in 2..=6 {
        for wnet in [false, true] {
            let cfg = NetworkConfig { depth, start_channels: 4, blocks_per_level: 2, use_wnet: wnet, ..NetworkConfig::default() };
            let m = Model::with_seed(&cfg, 1).unwrap();
            for i in 0..depth {
                let out = m.params.get(&format!("u0.enc{i}.conv1.w")).unwrap().shape[0];
                ladder_ok &= out == 4 << i && cfg.channels(i) == 4 << i;
            }
            let l = cfg.length_multiple() * 3;
            let x: Vec<f64> = (0..l).map(|j| (j as f64 * 0.1).sin()).collect();
            length_ok &= m.predict_probabilities(&x).unwrap().len() == 3 * l;
            let mut g = Graph::new();
            let xi = g.constant(Tensor::new([2, 1, l], [x.clone(), x].concat()).unwrap());
            let fp = m.forward(&mut g, xi, None).unwrap();
            length_ok &= g.shape(fp.output) == [2, 3, l];
        }
    }
    outcome(
        ratio_ok && ladder_ok && length_ok,
        format!(
            "W-Net/U-Net params {} (need > {WNET_RATIO}); channel ladder 2^i*N: {ladder_ok}; length preserved depth 2..6: {length_ok}",
            ratios.join("/")
        ),
    )
}

fn c8_throughput(fx: &Fixture) -> Outcome {
    let cfg = GenerationConfig { rng_seed: 8, ..GenerationConfig::default() };
    let synth = Synthesizer::new(&cfg, &fx.pool, &fx.amp).unwrap();
    // warm-up
    for i in 0..20 {
        synth.generate(i).unwrap();
    }
    let start = Instant::now();
    let mut cycles = 0usize;
    let mut i = 1000;
    while start.elapsed() < Duration::from_secs(2) {
        cycles += synth.generate(i).unwrap().provenance.cycles.len();
        i += 1;
    }
    let rate = cycles as f64 / start.elapsed().as_secs_f64();
    outcome(
        rate >= CYCLES_PER_S_FLOOR,
        format!(
            "single worker, fs=250: {rate:.0} cycles/s (floor {CYCLES_PER_S_FLOOR}, target {CYCLES_PER_S_TARGET}: {})",
            if rate >= CYCLES_PER_S_TARGET { "met" } else { "missed" }
        ),
    )
}

fn c9_round_trips() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let mut fid_ok = true;
    for _ in 0..500 {
        let n = rng.random_range(50..1500);
        let waves: Vec<Vec<Interval>> = (0..3).map(|_| random_intervals(&mut rng, n)).collect();
        let fids = FiducialSet::from_waves(waves[0].clone(), waves[1].clone(), waves[2].clone()).unwrap();
        let mask = mask_from_fiducials(&fids, n).unwrap();
        fid_ok &= fiducials_from_mask(&mask) == fids;
        fid_ok &= mask_from_fiducials(&fiducials_from_mask(&mask), n).unwrap() == mask;
    }

    let mut file_ok = true;
    let mut srng = seeded_rng(90);
    for k in 0..20 {
        let n = srng.random_range(10..400);
        let leads = srng.random_range(1..4);
        let signal: Vec<Vec<f64>> = (0..leads).map(|_| (0..n).map(|_| srng.random_range(-5.0..5.0)).collect()).collect();
        let names = (0..leads).map(|l| format!("L{l}")).collect();
        let rec = EcgRecord::new(format!("rec{k}"), 250.0 + k as f64, names, signal).unwrap();
        let path = std::path::Path::new("rec.txt");
        let back = parse_record(&format_record(&rec), rec.id(), path).unwrap();
        file_ok &= back == rec;
        let mut r2 = StdRng::seed_from_u64(k);
        let w: Vec<Vec<Interval>> = (0..3).map(|_| random_intervals(&mut r2, n)).collect();
        let fids = FiducialSet::from_waves(w[0].clone(), w[1].clone(), w[2].clone()).unwrap();
        file_ok &= parse_annotations(&format_annotations(&fids), path).unwrap() == fids;
    }

    let mut vote_ok = true;
    for _ in 0..100 {
        let n = rng.random_range(1..300);
        let masks: Vec<DelineationMask> = (0..3)
            .map(|_| {
                DelineationMask::from_channels(std::array::from_fn(|_| (0..n).map(|_| rng.random_bool(0.5)).collect()))
                    .unwrap()
            })
            .collect();
        let voted = majority_vote(&masks).unwrap();
        for w in WaveKind::ALL {
            for i in 0..n {
                let votes = masks.iter().filter(|m| m.get(w, i)).count();
                vote_ok &= voted.get(w, i) == (votes * 2 > masks.len());
            }
        }
    }
    outcome(
        fid_ok && file_ok && vote_ok,
        format!("mask<->fiducials x500: {fid_ok}; record/annotation text save-load: {file_ok}; majority vote x100: {vote_ok}"),
    )
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let fx = fixture();
    let mut failed = Vec::new();
    let mut report = |id: usize, name: &str, budget: Duration, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let took = t.elapsed();
        let in_budget = took <= budget;
        let pass = o.pass && in_budget;
        if !pass {
            failed.push(id);
        }
        println!(
            "{} C{id} {name}: {} [{:.1}s, budget {}s{}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs(),
            if in_budget { "" } else { ", over budget" }
        );
    };
    let min = |m: u64| Duration::from_secs(60 * m);
    report(1, "loss gradient oracle", min(1), &mut c1_gradients);
    report(2, "instance counting oracle", min(1), &mut c2_counting);
    report(3, "matching oracle", min(1), &mut c3_matching);
    report(4, "generator fidelity", min(2), &mut || c4_generator(&fx));
    let mut base = None;
    report(5, "desk-scale training", min(15), &mut || {
        let run = desk_run(&fx, TRAIN_SEED, 0.0);
        let o = c5_training(&run);
        base = Some(run);
        o
    });
    let base = base.expect("criterion 5 ran");
    report(6, "loss ablation direction", min(45), &mut || c6_ablation(&fx, &base));
    report(7, "architecture contracts", min(1), &mut c7_architecture);
    report(8, "synthesis throughput", min(1), &mut || c8_throughput(&fx));
    report(9, "round trips", min(1), &mut c9_round_trips);
    if failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
    } else {
        println!("acceptance: failed {:?}", failed);
        if strict {
            std::process::exit(1);
        }
    }
}
