use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde_json::json;

use delineate_core::data::io::{load_annotations, load_record, save_annotations, save_record};
use delineate_core::eval::{
    evaluate, evaluate_masks, majority_vote, normalize_input, EvalMode, EvaluationConfig, MetricsReport, Predictor,
};
use delineate_core::network::{
    load_checkpoint, save_checkpoint, train_model, DataMix, Model, ModelPredictor, TrainError, TrainingData,
    LOG_HEADER,
};
use delineate_core::pool::io::{load_model, load_pool, save_pool};
use delineate_core::pool::{build_pool, fit_amplitude_models, SegmentPool};
use delineate_core::reference::{reference_dataset, ReferenceConfig};
use delineate_core::synth::Synthesizer;
use delineate_core::{fiducials_from_mask, mask_from_fiducials, EcgRecord, FiducialSet, SegmentKind};

use crate::config::RunConfig;
use crate::files::{self, pair_files, write, write_echo, ANNOTATION_EXT, SIGNAL_EXT};
use crate::plot::render_svg;
use crate::split::{parse_subject_manifest, split_subjects};
use crate::{DataError, UsageError};

fn required(flag: Option<PathBuf>, config: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| config.clone())
        .ok_or_else(|| UsageError(format!("--{name} is required (or set paths.{name} in the config)")).into())
}

fn signal_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.{SIGNAL_EXT}"))
}

fn annotation_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.{ANNOTATION_EXT}"))
}

pub fn gen_reference(cfg: &RunConfig, out: &Path, count: usize, leads: usize, seed: u64) -> Result<()> {
    files::ensure_dir(out)?;
    let rc = ReferenceConfig { leads, sampling_rate: cfg.generation.target_fs, ..ReferenceConfig::default() };
    for (rec, fids) in reference_dataset(&rc, count, seed) {
        save_record(&rec, signal_path(out, rec.id()))?;
        save_annotations(&fids, annotation_path(out, rec.id()))?;
    }
    write_echo(out, cfg, &format!("gen-reference --count {count} --seed {seed}"))?;
    info!("wrote {count} reference records to {}", out.display());
    Ok(())
}

/// Loads every signal/annotation pair, warning about and skipping unpaired
/// or unreadable ones.
fn load_annotated(records: &Path, annotations: &Path) -> Result<(Vec<(EcgRecord, FiducialSet)>, Vec<String>)> {
    let pairing = pair_files(records, annotations)?;
    let mut skipped: Vec<String> = Vec::new();
    for p in &pairing.unpaired {
        warn!("skipping unpaired file {}", p.display());
        skipped.push(p.display().to_string());
    }
    let mut loaded = Vec::new();
    for (id, s, a) in pairing.pairs {
        let rec = load_record(&s).and_then(|r| load_annotations(&a).map(|f| (r, f)));
        match rec {
            Ok((r, f)) if f.max_offset() <= r.len() => loaded.push((r, f)),
            Ok(_) => {
                warn!("skipping {id}: annotations extend past the signal");
                skipped.push(a.display().to_string());
            }
            Err(e) => {
                warn!("skipping {id}: {e}");
                skipped.push(a.display().to_string());
            }
        }
    }
    if loaded.is_empty() {
        bail!(DataError(format!(
            "no usable signal/annotation pairs in {} and {} ({} skipped)",
            records.display(),
            annotations.display(),
            skipped.len()
        )));
    }
    Ok((loaded, skipped))
}

pub fn build_pool_cmd(cfg: &RunConfig, records: Option<PathBuf>, annotations: Option<PathBuf>, out: &Path) -> Result<()> {
    let records = required(records, &cfg.paths.records, "records")?;
    let annotations = annotations.or_else(|| cfg.paths.annotations.clone()).unwrap_or_else(|| records.clone());
    let (data, skipped) = load_annotated(&records, &annotations)?;
    let built = build_pool(&data)?;
    let model = fit_amplitude_models(&built.pool)?;
    save_pool(&built.pool, Some(&model), out)?;
    let counts: BTreeMap<String, usize> =
        SegmentKind::ALL.iter().map(|&k| (k.name().to_string(), built.pool.count(k))).collect();
    let discarded: BTreeMap<String, usize> = built.discarded.iter().map(|(k, v)| (k.name().to_string(), *v)).collect();
    let summary = json!({
        "tool_version": files::tool_version(),
        "records_used": data.len(),
        "skipped": skipped,
        "sampling_rate": built.pool.sampling_rate(),
        "templates": counts,
        "discarded": discarded,
    });
    write(&out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    write_echo(out, cfg, "build-pool")?;
    println!("pool: {} records, {} templates ({} skipped files)", data.len(), built.pool.total(), skipped.len());
    Ok(())
}

pub fn split_cmd(cfg: &RunConfig, records: Option<PathBuf>, folds: usize, out: &Path) -> Result<()> {
    let records = required(records, &cfg.paths.records, "records")?;
    let ids: Vec<String> = files::signals(&records)?.into_iter().map(|(id, _)| id).collect();
    let overrides = match &cfg.paths.subjects {
        Some(p) => parse_subject_manifest(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => BTreeMap::new(),
    };
    let rows = split_subjects(&ids, &overrides, folds, cfg.split_seed())?;
    files::ensure_dir(out)?;
    let mut text = String::from("record_id,subject_id,fold\n");
    for (r, s, f) in &rows {
        let _ = writeln!(text, "{r},{s},{f}");
    }
    write(&out.join("folds.csv"), text)?;
    write_echo(out, cfg, &format!("split --folds {folds}"))?;
    println!("split {} records into {folds} folds", rows.len());
    Ok(())
}

fn load_pool_dir(cfg: &RunConfig, pool: Option<PathBuf>) -> Result<(SegmentPool, delineate_core::pool::AmplitudeModel)> {
    let dir = required(pool, &cfg.paths.pool, "pool")?;
    let p = load_pool(&dir)?;
    let m = load_model(&dir)?;
    Ok((p, m))
}

pub fn synth_cmd(cfg: &RunConfig, pool: Option<PathBuf>, count: usize, out: &Path) -> Result<()> {
    let (pool, model) = load_pool_dir(cfg, pool)?;
    let synth = Synthesizer::new(&cfg.generation, &pool, &model)?;
    files::ensure_dir(out)?;
    for i in 0..count as u64 {
        let rec = synth.generate(i)?;
        let id = rec.record.id().to_string();
        save_record(&rec.record, signal_path(out, &id))?;
        save_annotations(&rec.fiducials(), annotation_path(out, &id))?;
        write(&out.join(format!("{id}.rules")), rec.provenance.rule_log())?;
    }
    write_echo(out, cfg, &format!("synth --count {count}"))?;
    println!("synthesized {count} records into {}", out.display());
    Ok(())
}

pub fn train_cmd(
    cfg: &RunConfig,
    pool: Option<PathBuf>,
    records: Option<PathBuf>,
    annotations: Option<PathBuf>,
    out: &Path,
) -> Result<()> {
    let t = &cfg.trainer;
    let needs_real = matches!(t.data_mix, DataMix::Real | DataMix::Both);
    let needs_synth = matches!(t.data_mix, DataMix::Synthetic | DataMix::Both);
    let loaded_pool = if needs_synth { Some(load_pool_dir(cfg, pool)?) } else { None };
    let synthesizer = match &loaded_pool {
        Some((p, m)) => Some(Synthesizer::new(&cfg.generation, p, m)?),
        None => None,
    };
    let mut real = Vec::new();
    if needs_real {
        let records = required(records, &cfg.paths.records, "records")?;
        let annotations = annotations.or_else(|| cfg.paths.annotations.clone()).unwrap_or_else(|| records.clone());
        for (rec, fids) in load_annotated(&records, &annotations)?.0 {
            let mask = mask_from_fiducials(&fids, rec.len())?;
            real.extend(rec.leads().iter().map(|l| (l.clone(), mask.clone())));
        }
    }
    let data = TrainingData {
        real,
        synthesizer,
        augmentation: t.augment.then(|| cfg.augmentation.clone()),
        sampling_rate: cfg.generation.target_fs,
    };
    let model = Model::with_seed(&cfg.network, t.seed)?;
    files::ensure_dir(out)?;
    write_echo(out, cfg, "train")?;
    info!("training {} parameters for {} steps", model.param_count(), t.total_steps());
    let every = (t.total_steps() / 20).max(1);
    let result = train_model(t, model, &data, |row| {
        if row.step % every == 0 {
            info!("step {} loss {:.5} (dice {:.5})", row.step, row.total, row.dice);
        }
    });
    let config = serde_json::to_value(cfg)?;
    let write_log = |rows: &[delineate_core::network::LossRow]| {
        let mut text = format!("{LOG_HEADER}\n");
        for r in rows {
            text.push_str(&r.to_csv());
            text.push('\n');
        }
        write(&out.join("losses.csv"), text)
    };
    match result {
        Ok(res) => {
            write_log(&res.log)?;
            save_checkpoint(&out.join("model.ckpt"), &res.model, res.log.len(), t.seed, config)?;
            let last = res.log.last().map_or(f64::NAN, |r| r.total);
            println!("trained {} steps, final loss {last:.5}; checkpoint {}", res.log.len(), out.join("model.ckpt").display());
            Ok(())
        }
        Err(TrainError::Diverged { step, model, log }) => {
            write_log(&log)?;
            save_checkpoint(&out.join("diverged.ckpt"), &model, step, t.seed, config)?;
            Err(TrainError::Diverged { step, model, log }.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn load_model_ckpt(path: &Path) -> Result<Model> {
    let (model, manifest) = load_checkpoint(path)?;
    info!("loaded {} (step {}, {})", path.display(), manifest.step, manifest.tool_version);
    Ok(model)
}

/// Per-lead masks, normalized as in training.
fn predict_leads(pred: &dyn Predictor, rec: &EcgRecord, ev: &EvaluationConfig) -> Result<Vec<delineate_core::DelineationMask>> {
    rec.leads()
        .iter()
        .map(|l| pred.predict(&normalize_input(l, ev.normalization_window)).map_err(Into::into))
        .collect()
}

pub fn predict_cmd(cfg: &RunConfig, checkpoint: &Path, records: Option<PathBuf>, out: &Path) -> Result<()> {
    let records = required(records, &cfg.paths.records, "records")?;
    let model = load_model_ckpt(checkpoint)?;
    let pred = ModelPredictor { model: &model, threshold: cfg.evaluation.threshold };
    files::ensure_dir(out)?;
    let list = files::signals(&records)?;
    for (id, path) in &list {
        let rec = load_record(path)?;
        let masks = predict_leads(&pred, &rec, &cfg.evaluation)?;
        save_annotations(&fiducials_from_mask(&majority_vote(&masks)?), annotation_path(out, id))?;
    }
    write_echo(out, cfg, &format!("predict --checkpoint {}", checkpoint.display()))?;
    println!("predicted {} records into {}", list.len(), out.display());
    Ok(())
}

pub enum EvalSource {
    Checkpoint(PathBuf),
    Predictions(PathBuf),
}

pub fn eval_cmd(
    cfg: &RunConfig,
    source: EvalSource,
    records: Option<PathBuf>,
    annotations: Option<PathBuf>,
    mode: EvalMode,
    out: Option<&Path>,
) -> Result<()> {
    let records = required(records, &cfg.paths.records, "records")?;
    let annotations = annotations.or_else(|| cfg.paths.annotations.clone()).unwrap_or_else(|| records.clone());
    let (data, _) = load_annotated(&records, &annotations)?;
    let ev = EvaluationConfig { mode, ..cfg.evaluation.clone() };
    let mut report = MetricsReport::empty(mode);
    match &source {
        EvalSource::Checkpoint(path) => {
            let model = load_model_ckpt(path)?;
            let pred = ModelPredictor { model: &model, threshold: ev.threshold };
            let preds: [&dyn Predictor; 1] = [&pred];
            for (rec, truth) in &data {
                report.merge(&evaluate(rec, truth, &preds, &ev)?);
            }
        }
        EvalSource::Predictions(dir) => {
            for (rec, truth) in &data {
                let path = annotation_path(dir, rec.id());
                let fids = load_annotations(&path)
                    .map_err(|e| DataError(format!("prediction for {}: {e}", rec.id())))?;
                let mask = mask_from_fiducials(&fids, rec.len())?;
                let masks = vec![mask; rec.lead_count()];
                report.merge(&evaluate_masks(truth, &masks, rec.sampling_rate(), mode, ev.error_sign)?);
            }
        }
    }
    let table = report.to_table();
    print!("{table}");
    if let Some(out) = out {
        files::ensure_dir(out)?;
        write(&out.join("report.csv"), &table)?;
        let mut json = report.to_json();
        json["tool_version"] = json!(files::tool_version());
        write(&out.join("report.json"), serde_json::to_string_pretty(&json)?)?;
        write_echo(out, cfg, &format!("eval --mode {mode}"))?;
    }
    Ok(())
}

pub fn plot_cmd(cfg: &RunConfig, records: Option<PathBuf>, annotations: Option<PathBuf>, out: &Path) -> Result<()> {
    let records = required(records, &cfg.paths.records, "records")?;
    let annotations = annotations.or_else(|| cfg.paths.annotations.clone());
    files::ensure_dir(out)?;
    let list = files::signals(&records)?;
    for (id, path) in &list {
        let rec = load_record(path)?;
        let fids = match &annotations {
            Some(dir) => {
                let p = annotation_path(dir, id);
                match load_annotations(&p) {
                    Ok(f) => Some(f),
                    Err(e) => {
                        warn!("{id}: no annotations drawn ({e})");
                        None
                    }
                }
            }
            None => None,
        };
        write(&out.join(format!("{id}.svg")), render_svg(&rec, fids.as_ref()))?;
    }
    write_echo(out, cfg, "plot")?;
    println!("plotted {} records into {}", list.len(), out.display());
    Ok(())
}
