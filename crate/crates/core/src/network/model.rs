use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use super::NetworkConfig;
use crate::autodiff::{BatchStats, Graph, Tensor, TensorId};
use crate::eval::Predictor;
use crate::rng::{seeded_rng, GenRng};
use crate::{DelineationMask, Error, Result};

/// Odd 1-D kernel size of the channel attention for `channels` channels.
pub fn eca_kernel_size(channels: usize) -> usize {
    let t = (((channels.max(1) as f64).log2() + 1.0) / 2.0).abs() as usize;
    if t % 2 == 1 {
        t
    } else {
        t + 1
    }
}

/// Named trainable tensors in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ModelParams {
    pub fn from_parts(names: Vec<String>, tensors: Vec<Tensor>) -> Result<Self> {
        if names.len() != tensors.len() {
            return Err(Error::Shape("parameter names and tensors differ in number".into()));
        }
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect::<HashMap<_, _>>();
        if index.len() != names.len() {
            return Err(Error::Config("duplicate parameter name".into()));
        }
        Ok(ModelParams { names, tensors, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.tensors[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Total number of scalar weights.
    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Init {
    /// Uniform in ±1/sqrt(fan_in), the PyTorch default for convolutions.
    FanIn { fan_in: usize },
    Zeros,
    Ones,
}

fn conv_entries(out: &mut Vec<(String, [usize; 3], Init)>, prefix: &str, j: usize, cin: usize, cout: usize, k: usize) {
    out.push((format!("{prefix}.conv{j}.w"), [cout, cin, k], Init::FanIn { fan_in: cin * k }));
    out.push((format!("{prefix}.conv{j}.b"), [1, cout, 1], Init::FanIn { fan_in: cin * k }));
    out.push((format!("{prefix}.bn{j}.gamma"), [1, cout, 1], Init::Ones));
    out.push((format!("{prefix}.bn{j}.beta"), [1, cout, 1], Init::Zeros));
}

/// Encoder level `i` of U-Net `net` receives this many channels.
fn encoder_in(cfg: &NetworkConfig, net: usize, i: usize) -> usize {
    match (net, i) {
        (0, 0) => 1,
        (0, _) => cfg.channels(i - 1),
        (_, 0) => cfg.channels(0),
        (_, _) => cfg.channels(i - 1) + cfg.channels(i),
    }
}

/// Every parameter with its shape and initializer, in canonical order.
pub(crate) fn layout(cfg: &NetworkConfig) -> Vec<(String, [usize; 3], Init)> {
    let mut out = Vec::new();
    let k = cfg.kernel_size;
    let nets = if cfg.use_wnet { 2 } else { 1 };
    let level = |out: &mut Vec<_>, prefix: &str, cin: usize, cout: usize| {
        for j in 0..cfg.blocks_per_level {
            conv_entries(out, prefix, j, if j == 0 { cin } else { cout }, cout, k);
        }
        if cfg.use_eca {
            let ke = eca_kernel_size(cout);
            out.push((format!("{prefix}.eca.w"), [1, 1, ke], Init::FanIn { fan_in: ke }));
        }
    };
    for net in 0..nets {
        for i in 0..cfg.depth {
            level(&mut out, &format!("u{net}.enc{i}"), encoder_in(cfg, net, i), cfg.channels(i));
        }
        for i in (0..cfg.depth - 1).rev() {
            conv_entries(&mut out, &format!("u{net}.dec{i}.up"), 0, cfg.channels(i + 1), cfg.channels(i), k);
            level(&mut out, &format!("u{net}.dec{i}"), 2 * cfg.channels(i), cfg.channels(i));
        }
    }
    let c0 = cfg.channels(0);
    out.push(("head.w".into(), [3, c0, 1], Init::FanIn { fan_in: c0 }));
    out.push(("head.b".into(), [1, 3, 1], Init::FanIn { fan_in: c0 }));
    out
}

/// Weights, running normalization statistics and the configuration that
/// shaped them.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: NetworkConfig,
    pub params: ModelParams,
    /// Keyed by normalization-layer prefix (`….bn{j}`).
    pub running: BTreeMap<String, BatchStats>,
}

/// Graph handles produced by one forward pass.
#[derive(Debug)]
pub struct ForwardPass {
    pub output: TensorId,
    /// Graph id of each parameter, by parameter position; `None` if unused.
    pub param_ids: Vec<Option<TensorId>>,
    /// Batch statistics of every normalization layer (training only).
    pub batch_stats: Vec<(String, BatchStats)>,
}

struct Ctx<'a, 'r> {
    g: &'a mut Graph,
    model: &'a Model,
    ids: Vec<Option<TensorId>>,
    dropout_rng: Option<&'r mut GenRng>,
    batch_stats: Vec<(String, BatchStats)>,
}

impl Ctx<'_, '_> {
    fn param(&mut self, name: &str) -> Result<TensorId> {
        let i = self
            .model
            .params
            .position(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing parameter {name}")))?;
        if let Some(id) = self.ids[i] {
            return Ok(id);
        }
        let id = self.g.param(self.model.params.tensors()[i].clone());
        self.ids[i] = Some(id);
        Ok(id)
    }

    fn training(&self) -> bool {
        self.dropout_rng.is_some()
    }

    /// conv → leaky ReLU → batch normalization → channel dropout.
    fn block(&mut self, prefix: &str, j: usize, x: TensorId) -> Result<TensorId> {
        let cfg = &self.model.config;
        let w = self.param(&format!("{prefix}.conv{j}.w"))?;
        let b = self.param(&format!("{prefix}.conv{j}.b"))?;
        let k = self.g.shape(w)[2];
        let y = self.g.conv1d(x, w, Some(b), k / 2)?;
        let y = self.g.leaky_relu(y, cfg.leaky_slope);
        let gamma = self.param(&format!("{prefix}.bn{j}.gamma"))?;
        let beta = self.param(&format!("{prefix}.bn{j}.beta"))?;
        let bn = format!("{prefix}.bn{j}");
        let y = if self.training() {
            let (y, stats) = self.g.batch_norm(y, gamma, beta, cfg.bn_eps)?;
            self.batch_stats.push((bn, stats));
            y
        } else {
            let stats = self
                .model
                .running
                .get(&bn)
                .ok_or_else(|| Error::Checkpoint(format!("missing running statistics {bn}")))?;
            self.g.batch_norm_fixed(y, gamma, beta, stats, cfg.bn_eps)?
        };
        let p = cfg.dropout;
        match self.dropout_rng.as_deref_mut() {
            Some(rng) if p > 0.0 => {
                let [bs, c, _] = self.g.shape(y);
                let keep = 1.0 / (1.0 - p);
                let data = (0..bs * c).map(|_| if rng.random::<f64>() < p { 0.0 } else { keep }).collect();
                let mask = self.g.constant(Tensor::new([bs, c, 1], data)?);
                self.g.mul(y, mask)
            }
            _ => Ok(y),
        }
    }

    fn eca(&mut self, prefix: &str, x: TensorId) -> Result<TensorId> {
        let w = self.param(&format!("{prefix}.eca.w"))?;
        let [b, c, l] = self.g.shape(x);
        let s = self.g.sum_length(x);
        let s = self.g.scale(s, 1.0 / l as f64);
        let s = self.g.reshape(s, [b, 1, c])?;
        let k = self.g.shape(w)[2];
        let a = self.g.conv1d(s, w, None, k / 2)?;
        let a = self.g.sigmoid(a);
        let a = self.g.reshape(a, [b, c, 1])?;
        self.g.mul(x, a)
    }

    fn level(&mut self, prefix: &str, mut x: TensorId) -> Result<TensorId> {
        for j in 0..self.model.config.blocks_per_level {
            x = self.block(prefix, j, x)?;
        }
        if self.model.config.use_eca {
            x = self.eca(prefix, x)?;
        }
        Ok(x)
    }

    /// Returns the decoder output of every level; the deepest entry is the
    /// bottleneck.
    fn unet(&mut self, net: usize, input: TensorId, side: Option<&[TensorId]>) -> Result<Vec<TensorId>> {
        let depth = self.model.config.depth;
        let mut enc: Vec<TensorId> = Vec::with_capacity(depth);
        for i in 0..depth {
            let x = if i == 0 {
                input
            } else {
                let p = self.g.max_pool2(enc[i - 1])?;
                match side {
                    Some(s) => self.g.concat(p, s[i])?,
                    None => p,
                }
            };
            let e = self.level(&format!("u{net}.enc{i}"), x)?;
            enc.push(e);
        }
        let mut dec = enc.clone();
        for i in (0..depth - 1).rev() {
            let u = self.g.upsample2(dec[i + 1]);
            let u = self.block(&format!("u{net}.dec{i}.up"), 0, u)?;
            let x = self.g.concat(u, enc[i])?;
            dec[i] = self.level(&format!("u{net}.dec{i}"), x)?;
        }
        Ok(dec)
    }
}

impl Model {
    /// Fresh weights drawn from `rng`; running statistics start at mean 0,
    /// variance 1.
    pub fn build<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        let mut running = BTreeMap::new();
        for (name, shape, init) in layout(config) {
            let mut t = Tensor::zeros(shape);
            match init {
                Init::FanIn { fan_in } => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    t.data.iter_mut().for_each(|v| *v = rng.random_range(-bound..bound));
                }
                Init::Ones => t.data.iter_mut().for_each(|v| *v = 1.0),
                Init::Zeros => {}
            }
            if let Some(prefix) = name.strip_suffix(".gamma") {
                let c = shape[1];
                running.insert(prefix.to_string(), BatchStats { mean: vec![0.0; c], var: vec![1.0; c] });
            }
            names.push(name);
            tensors.push(t);
        }
        Ok(Model { config: config.clone(), params: ModelParams::from_parts(names, tensors)?, running })
    }

    pub fn with_seed(config: &NetworkConfig, seed: u64) -> Result<Self> {
        Self::build(config, &mut seeded_rng(seed))
    }

    pub fn param_count(&self) -> usize {
        self.params.count()
    }

    /// Records the network on `g` for input `x` of shape (batch, 1, L).
    /// Passing a dropout RNG selects training behaviour: dropout is active
    /// and normalization uses batch statistics.
    pub fn forward(&self, g: &mut Graph, x: TensorId, dropout_rng: Option<&mut GenRng>) -> Result<ForwardPass> {
        let [_, c, l] = g.shape(x);
        if c != 1 {
            return Err(Error::Shape(format!("network input must have 1 channel, got {c}")));
        }
        let m = self.config.length_multiple();
        if l == 0 || l % m != 0 {
            let pad = (m - l % m) % m;
            return Err(Error::Shape(format!(
                "input length {l} is not a multiple of {m}; pad by {} samples",
                if l == 0 { m } else { pad }
            )));
        }
        let mut ctx = Ctx { g, model: self, ids: vec![None; self.params.len()], dropout_rng, batch_stats: Vec::new() };
        let mut dec = ctx.unet(0, x, None)?;
        if self.config.use_wnet {
            let side = dec.clone();
            dec = ctx.unet(1, side[0], Some(&side))?;
        }
        let w = ctx.param("head.w")?;
        let b = ctx.param("head.b")?;
        let y = ctx.g.conv1d(dec[0], w, Some(b), 0)?;
        let output = ctx.g.sigmoid(y);
        Ok(ForwardPass { output, param_ids: ctx.ids, batch_stats: ctx.batch_stats })
    }

    /// Blends batch statistics into the running ones:
    /// `running = momentum · running + (1 − momentum) · batch`.
    pub fn update_running(&mut self, batch: &[(String, BatchStats)]) {
        let m = self.config.bn_momentum;
        for (name, s) in batch {
            if let Some(r) = self.running.get_mut(name) {
                for (a, b) in r.mean.iter_mut().zip(&s.mean) {
                    *a = m * *a + (1.0 - m) * b;
                }
                for (a, b) in r.var.iter_mut().zip(&s.var) {
                    *a = m * *a + (1.0 - m) * b;
                }
            }
        }
    }

    /// Channel-major (3 × len) probabilities for one signal. The signal is
    /// zero-padded at the end to the required multiple and the padding is
    /// cropped from the output.
    pub fn predict_probabilities(&self, signal: &[f64]) -> Result<Vec<f64>> {
        let n = signal.len();
        if n == 0 {
            return Err(Error::Shape("cannot predict on an empty signal".into()));
        }
        let m = self.config.length_multiple();
        let padded = n.div_ceil(m) * m;
        let mut x = signal.to_vec();
        x.resize(padded, 0.0);
        let mut g = Graph::new();
        let xid = g.constant(Tensor::new([1, 1, padded], x)?);
        let fp = self.forward(&mut g, xid, None)?;
        let out = g.value(fp.output);
        let mut probs = Vec::with_capacity(3 * n);
        for c in 0..3 {
            probs.extend_from_slice(&out.row(0, c)[..n]);
        }
        Ok(probs)
    }
}

/// Thresholds a model's probabilities into masks.
#[derive(Debug, Clone, Copy)]
pub struct ModelPredictor<'a> {
    pub model: &'a Model,
    pub threshold: f64,
}

impl Predictor for ModelPredictor<'_> {
    fn predict(&self, signal: &[f64]) -> Result<DelineationMask> {
        let probs = self.model.predict_probabilities(signal)?;
        DelineationMask::from_probabilities(&probs, signal.len(), self.threshold)
    }
}
