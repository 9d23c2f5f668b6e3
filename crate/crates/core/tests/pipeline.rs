use delineate_core::augment::AugmentationConfig;
use delineate_core::data::io::{load_annotations, load_record, save_annotations, save_record};
use delineate_core::eval::{evaluate, EvalMode, EvaluationConfig, MetricsReport, Predictor};
use delineate_core::network::{
    load_checkpoint, save_checkpoint, train, DataMix, ModelPredictor, NetworkConfig, TrainerConfig, TrainingData,
};
use delineate_core::pool::io::{load_model, load_pool, save_pool};
use delineate_core::pool::{build_pool, fit_amplitude_models};
use delineate_core::reference::{reference_dataset, ReferenceConfig};
use delineate_core::synth::{GenerationConfig, Synthesizer};
use delineate_core::{mask_from_fiducials, SegmentKind, WaveKind};

#[test]
fn reference_to_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = reference_dataset(&ReferenceConfig::default(), 6, 5);

    // records survive the text formats
    for (rec, fids) in &data {
        let sig = dir.path().join(format!("{}.txt", rec.id()));
        let ann = dir.path().join(format!("{}.ann", rec.id()));
        save_record(rec, &sig).unwrap();
        save_annotations(fids, &ann).unwrap();
        assert_eq!(&load_record(&sig).unwrap(), rec);
        assert_eq!(&load_annotations(&ann).unwrap(), fids);
    }

    let built = build_pool(&data).unwrap();
    assert_eq!(built.discarded_total(), 0);
    let model = fit_amplitude_models(&built.pool).unwrap();
    let pool_dir = dir.path().join("pool");
    save_pool(&built.pool, Some(&model), &pool_dir).unwrap();
    let pool = load_pool(&pool_dir).unwrap();
    let amp = load_model(&pool_dir).unwrap();
    assert_eq!(pool, built.pool);
    assert_eq!(amp, model);
    for k in SegmentKind::ALL {
        assert!(pool.count(k) > 0, "{k:?}");
    }

    let gen = GenerationConfig { target_length: 1024, ..GenerationConfig::default() };
    let synth = Synthesizer::new(&gen, &pool, &amp).unwrap();
    let sample = synth.generate(3).unwrap();
    assert_eq!(sample.record.len(), 1024);
    assert_eq!(mask_from_fiducials(&sample.fiducials(), 1024).unwrap(), sample.mask);

    let net = NetworkConfig { depth: 3, start_channels: 4, ..NetworkConfig::default() };
    let cfg = TrainerConfig {
        batch_size: 4,
        steps_per_epoch: 10,
        epochs: 1,
        window: 256,
        data_mix: DataMix::Both,
        f1_weight: 0.2,
        boundary_weight: 0.1,
        ..TrainerConfig::default()
    };
    let real: Vec<_> = data
        .iter()
        .map(|(rec, fids)| (rec.lead(0).to_vec(), mask_from_fiducials(fids, rec.len()).unwrap()))
        .collect();
    let td = TrainingData {
        real,
        synthesizer: Some(synth),
        augmentation: Some(AugmentationConfig::default()),
        sampling_rate: 250.0,
    };
    let res = train(&cfg, &net, &td).unwrap();
    assert_eq!(res.log.len(), 10);
    assert!(res.log.iter().all(|r| r.total.is_finite() && r.f1 > 0.0 && r.boundary > 0.0));

    let ckpt = dir.path().join("model.ckpt");
    save_checkpoint(&ckpt, &res.model, 10, cfg.seed, serde_json::to_value(&cfg).unwrap()).unwrap();
    let (loaded, manifest) = load_checkpoint(&ckpt).unwrap();
    assert_eq!(manifest.network, net);

    // f32 storage: predictions agree to single precision
    let rec = &data[0].0;
    let a = res.model.predict_probabilities(rec.lead(0)).unwrap();
    let b = loaded.predict_probabilities(rec.lead(0)).unwrap();
    let worst = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(worst < 1e-3, "{worst}");

    let pred = ModelPredictor { model: &loaded, threshold: 0.5 };
    let preds: [&dyn Predictor; 1] = [&pred];
    let mut total = MetricsReport::empty(EvalMode::Multi);
    for (rec, fids) in &data {
        let cfg = EvaluationConfig { mode: EvalMode::Multi, ..EvaluationConfig::default() };
        total.merge(&evaluate(rec, fids, &preds, &cfg).unwrap());
    }
    for w in WaveKind::ALL {
        let d = total.detection(w);
        let truth: usize = data.iter().map(|(_, f)| f.get(w).len()).sum();
        assert_eq!(d.tp + d.fn_, truth);
    }
    let table = total.to_table();
    assert!(table.starts_with("wave,Pr,Re,F1"));
    let json = total.to_json();
    assert_eq!(json["records"], 6);
}
