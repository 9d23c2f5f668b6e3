use std::sync::mpsc::sync_channel;

use rand::Rng;
use rayon::prelude::*;

use super::{Adam, DataMix, Model, NetworkConfig, TrainerConfig};
use crate::augment::{augment, AugmentationConfig};
use crate::autodiff::{boundary_loss, dice_loss, f1_instance_loss, Graph, Tensor};
use crate::eval::{normalize_input, DEFAULT_WINDOW};
use crate::rng::{stream_rng, GenRng};
use crate::synth::Synthesizer;
use crate::{DelineationMask, Error, Result, WaveKind};

const DROPOUT_STREAM_SALT: u64 = 0x5EED_D80F;

pub const LOG_HEADER: &str = "epoch,step,loss_total,loss_dice,loss_boundary,loss_f1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRow {
    pub epoch: usize,
    pub step: usize,
    pub total: f64,
    pub dice: f64,
    pub boundary: f64,
    pub f1: f64,
}

impl LossRow {
    pub fn to_csv(&self) -> String {
        format!("{},{},{},{},{},{}", self.epoch, self.step, self.total, self.dice, self.boundary, self.f1)
    }
}

/// Batch sources. Real examples are single-lead signals with their masks.
pub struct TrainingData<'a> {
    pub real: Vec<(Vec<f64>, DelineationMask)>,
    pub synthesizer: Option<Synthesizer<'a>>,
    pub augmentation: Option<AugmentationConfig>,
    pub sampling_rate: f64,
}

impl TrainingData<'_> {
    fn check(&self, mix: DataMix) -> Result<()> {
        let need_real = matches!(mix, DataMix::Real | DataMix::Both);
        let need_synth = matches!(mix, DataMix::Synthetic | DataMix::Both);
        if need_real && self.real.is_empty() {
            return Err(Error::Config("data mix needs real examples but none were given".into()));
        }
        if need_synth && self.synthesizer.is_none() {
            return Err(Error::Config("data mix needs a synthesizer but none was given".into()));
        }
        if let Some((x, m)) = self.real.iter().find(|(x, m)| x.len() != m.len()) {
            return Err(Error::Shape(format!("real example has {} samples but {} mask samples", x.len(), m.len())));
        }
        Ok(())
    }
}

/// One (batch, 1, W) input with its (batch, 3, W) target.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub x: Tensor,
    pub y: Tensor,
}

/// Random window of `w` samples; shorter examples are zero-padded.
fn crop(signal: &[f64], mask: &DelineationMask, w: usize, rng: &mut GenRng) -> (Vec<f64>, Vec<[bool; 3]>) {
    let n = signal.len();
    let start = if n > w { rng.random_range(0..=n - w) } else { 0 };
    let mut x = vec![0.0; w];
    let mut y = vec![[false; 3]; w];
    for j in 0..w.min(n) {
        x[j] = signal[start + j];
        for c in WaveKind::ALL {
            y[j][c.index()] = mask.get(c, start + j);
        }
    }
    (x, y)
}

/// Augmentation and input normalization act on the whole example before the
/// window is cut, as at inference time. Normalizing a short crop instead lets
/// a long flat stretch (sinus arrest) drive the median to the floor.
fn example(cfg: &TrainerConfig, data: &TrainingData<'_>, index: u64) -> Result<(Vec<f64>, Vec<[bool; 3]>)> {
    let mut rng = stream_rng(cfg.seed, index);
    let synthetic = match cfg.data_mix {
        DataMix::Real => false,
        DataMix::Synthetic => true,
        DataMix::Both => rng.random::<bool>(),
    };
    let owned;
    let (x, m) = if synthetic {
        let synth = data.synthesizer.as_ref().expect("checked");
        let rec = synth.generate(index)?;
        owned = (rec.record.lead(0).to_vec(), rec.mask);
        (&owned.0, &owned.1)
    } else {
        let (x, m) = &data.real[rng.random_range(0..data.real.len())];
        (x, m)
    };
    let x = match (&data.augmentation, cfg.augment) {
        (Some(a), true) => augment(x, data.sampling_rate, a, &mut rng),
        _ => x.clone(),
    };
    let x = normalize_input(&x, DEFAULT_WINDOW);
    Ok(crop(&x, m, cfg.window, &mut rng))
}

/// The batch seen at `step`: item k comes from RNG stream `step·B + k`, so
/// the content does not depend on how items are scheduled.
pub fn make_batch(cfg: &TrainerConfig, data: &TrainingData<'_>, step: usize) -> Result<Batch> {
    let b = cfg.batch_size;
    let w = cfg.window;
    let items: Vec<_> = (0..b)
        .into_par_iter()
        .map(|k| example(cfg, data, (step * b + k) as u64))
        .collect::<Result<_>>()?;
    let mut x = Tensor::zeros([b, 1, w]);
    let mut y = Tensor::zeros([b, 3, w]);
    for (k, (xs, ys)) in items.into_iter().enumerate() {
        x.row_mut(k, 0).copy_from_slice(&xs);
        for c in 0..3 {
            let row = y.row_mut(k, c);
            for (j, v) in ys.iter().enumerate() {
                row[j] = f64::from(u8::from(v[c]));
            }
        }
    }
    Ok(Batch { x, y })
}

#[derive(Debug)]
pub struct TrainResult {
    pub model: Model,
    pub log: Vec<LossRow>,
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    /// A non-finite loss, gradient or weight; `model` is the state before
    /// the failing step.
    #[error("training diverged at step {step}")]
    Diverged { step: usize, model: Box<Model>, log: Vec<LossRow> },
    #[error(transparent)]
    Failed(#[from] Error),
}

struct StepLosses {
    dice: f64,
    boundary: f64,
    f1: f64,
    total: f64,
}

fn train_step(cfg: &TrainerConfig, model: &mut Model, adam: &mut Adam, batch: Batch, step: usize) -> Result<Option<StepLosses>> {
    let mut g = Graph::new();
    let x = g.constant(batch.x);
    let y = g.constant(batch.y);
    let mut drng = stream_rng(cfg.seed ^ DROPOUT_STREAM_SALT, step as u64);
    let fp = model.forward(&mut g, x, Some(&mut drng))?;
    let dice = dice_loss(&mut g, fp.output, y, cfg.loss_eps)?;
    let bnd = boundary_loss(&mut g, fp.output, y, cfg.boundary_kernel, cfg.loss_eps)?;
    let f1 = f1_instance_loss(&mut g, fp.output, y, cfg.loss_eps)?;
    let wd = g.scale(dice, cfg.dice_weight);
    let wb = g.scale(bnd, cfg.boundary_weight);
    let wf = g.scale(f1, cfg.f1_weight);
    let total = g.add(wd, wb)?;
    let total = g.add(total, wf)?;
    let losses = StepLosses {
        dice: g.value(dice).item(),
        boundary: g.value(bnd).item(),
        f1: g.value(f1).item(),
        total: g.value(total).item(),
    };
    if !losses.total.is_finite() {
        return Ok(None);
    }
    g.backward(total)?;
    let grads: Vec<Tensor> = fp
        .param_ids
        .iter()
        .zip(model.params.tensors())
        .map(|(id, p)| id.and_then(|id| g.grad(id)).unwrap_or_else(|| Tensor::zeros(p.shape)))
        .collect();
    if !grads.iter().all(Tensor::is_finite) {
        return Ok(None);
    }
    adam.step(&mut model.params, &grads)?;
    model.update_running(&fp.batch_stats);
    if !model.params.is_finite() {
        return Ok(None);
    }
    Ok(Some(losses))
}

/// Trains `model` for `cfg.total_steps()` steps. Batches are prepared on a
/// producer thread, at most `cfg.prefetch` ahead. `on_step` sees every log
/// row as it is produced.
pub fn train_model(
    cfg: &TrainerConfig,
    mut model: Model,
    data: &TrainingData<'_>,
    mut on_step: impl FnMut(&LossRow),
) -> std::result::Result<TrainResult, TrainError> {
    cfg.validate()?;
    data.check(cfg.data_mix)?;
    let m = model.config.length_multiple();
    if cfg.window % m != 0 {
        return Err(Error::Shape(format!(
            "training window {} is not a multiple of {m}; pad by {} samples",
            cfg.window,
            m - cfg.window % m
        ))
        .into());
    }
    let total_steps = cfg.total_steps();
    let mut adam = Adam::new(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
    let mut log = Vec::with_capacity(total_steps);
    std::thread::scope(|scope| {
        let (tx, rx) = sync_channel::<Result<Batch>>(cfg.prefetch.max(1));
        scope.spawn(move || {
            for step in 0..total_steps {
                if tx.send(make_batch(cfg, data, step)).is_err() {
                    break;
                }
            }
        });
        for step in 0..total_steps {
            let batch = rx.recv().map_err(|_| Error::Numeric("batch producer stopped".into()))??;
            let before = model.clone();
            match train_step(cfg, &mut model, &mut adam, batch, step)? {
                Some(l) => {
                    let row = LossRow {
                        epoch: step / cfg.steps_per_epoch,
                        step,
                        total: l.total,
                        dice: l.dice,
                        boundary: l.boundary,
                        f1: l.f1,
                    };
                    on_step(&row);
                    log.push(row);
                }
                None => {
                    return Err(TrainError::Diverged { step, model: Box::new(before), log: std::mem::take(&mut log) });
                }
            }
        }
        Ok(())
    })?;
    Ok(TrainResult { model, log })
}

/// Builds a network from `net` seeded with `cfg.seed` and trains it.
pub fn train(
    cfg: &TrainerConfig,
    net: &NetworkConfig,
    data: &TrainingData<'_>,
) -> std::result::Result<TrainResult, TrainError> {
    let model = Model::with_seed(net, cfg.seed)?;
    train_model(cfg, model, data, |_| {})
}
