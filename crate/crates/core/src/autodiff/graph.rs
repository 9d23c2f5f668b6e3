use super::{EdgeKernel, Tensor};
use crate::{Error, Result};

/// Handle to a value recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorId(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Conv1d { x: TensorId, w: TensorId, b: Option<TensorId>, pad: usize },
    FixedConv { x: TensorId, taps: Vec<f64>, pad: usize },
    Add(TensorId, TensorId),
    Sub(TensorId, TensorId),
    Mul(TensorId, TensorId),
    Div(TensorId, TensorId),
    Abs(TensorId),
    ClampMin(TensorId, f64),
    LeakyRelu(TensorId, f64),
    Sigmoid(TensorId),
    Scale(TensorId, f64),
    AddScalar(TensorId),
    SumLength(TensorId),
    Mean(TensorId),
    MaxPool2 { x: TensorId, argmax: Vec<usize> },
    Upsample2(TensorId),
    Concat(TensorId, TensorId),
    Reshape(TensorId),
    BatchNorm { x: TensorId, gamma: TensorId, beta: TensorId, xhat: Vec<f64>, inv_std: Vec<f64> },
    Affine { x: TensorId, gamma: TensorId, beta: TensorId, mean: Vec<f64>, inv_std: Vec<f64> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Per-channel statistics of a training-mode batch normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Append-only tape. Ops are recorded in evaluation order, so reverse
/// index order is a valid reverse topological order.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

fn broadcast_shape(a: [usize; 3], b: [usize; 3]) -> Result<[usize; 3]> {
    let mut out = [0; 3];
    for d in 0..3 {
        out[d] = match (a[d], b[d]) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return Err(Error::Shape(format!("cannot broadcast {a:?} with {b:?}"))),
        };
    }
    Ok(out)
}

fn strides(shape: [usize; 3], out: [usize; 3]) -> [usize; 3] {
    let full = [shape[1] * shape[2], shape[2], 1];
    std::array::from_fn(|d| if shape[d] == 1 && out[d] != 1 { 0 } else { full[d] })
}

/// Calls `f(out_index, a_index, b_index)` over a broadcast output.
fn for_broadcast(a: [usize; 3], b: [usize; 3], out: [usize; 3], mut f: impl FnMut(usize, usize, usize)) {
    let sa = strides(a, out);
    let sb = strides(b, out);
    let mut o = 0;
    for i in 0..out[0] {
        for j in 0..out[1] {
            let ba = i * sa[0] + j * sa[1];
            let bb = i * sb[0] + j * sb[1];
            for k in 0..out[2] {
                f(o, ba + k * sa[2], bb + k * sb[2]);
                o += 1;
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> TensorId {
        self.nodes.push(Node { value, op, requires_grad });
        self.grads.push(None);
        TensorId(self.nodes.len() - 1)
    }

    fn rg(&self, id: TensorId) -> bool {
        self.nodes[id.0].requires_grad
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> TensorId {
        self.push(value, Op::Leaf, true)
    }

    /// Leaf that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> TensorId {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, id: TensorId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: TensorId) -> [usize; 3] {
        self.nodes[id.0].value.shape
    }

    /// Gradient after [`Graph::backward`]; `None` when nothing flowed in.
    pub fn grad(&self, id: TensorId) -> Option<Tensor> {
        self.grads[id.0]
            .as_ref()
            .map(|g| Tensor { shape: self.shape(id), data: g.clone() })
    }

    /// Correlation with trainable weights `w` of shape (out, in, k), an
    /// optional bias of shape (1, out, 1), `pad` zeros on the left and
    /// `k - 1 - pad` on the right (length preserved).
    pub fn conv1d(&mut self, x: TensorId, w: TensorId, b: Option<TensorId>, pad: usize) -> Result<TensorId> {
        let xs = self.shape(x);
        let ws = self.shape(w);
        let [cout, cin, k] = ws;
        if cin != xs[1] {
            return Err(Error::Shape(format!("conv1d weight {ws:?} incompatible with input {xs:?}")));
        }
        if pad >= k.max(1) && k > 0 {
            return Err(Error::Shape(format!("padding {pad} too large for kernel {k}")));
        }
        if let Some(b) = b {
            if self.shape(b) != [1, cout, 1] {
                return Err(Error::Shape(format!("conv1d bias {:?} should be [1, {cout}, 1]", self.shape(b))));
            }
        }
        let (bs, l) = (xs[0], xs[2]);
        let mut out = Tensor::zeros([bs, cout, l]);
        {
            let xv = &self.nodes[x.0].value;
            let wv = &self.nodes[w.0].value;
            for bi in 0..bs {
                for o in 0..cout {
                    let orow = out.row_mut(bi, o);
                    if let Some(b) = b {
                        let bias = self.nodes[b.0].value.data[o];
                        orow.iter_mut().for_each(|v| *v = bias);
                    }
                    for i in 0..cin {
                        let xrow = xv.row(bi, i);
                        for t in 0..k {
                            let wt = wv.data[(o * cin + i) * k + t];
                            let off = t as isize - pad as isize;
                            let lo = (-off).max(0) as usize;
                            let hi = ((l as isize - off).min(l as isize)).max(0) as usize;
                            if lo >= hi {
                                continue;
                            }
                            let src = &xrow[(lo as isize + off) as usize..(hi as isize + off) as usize];
                            for (ov, xv) in orow[lo..hi].iter_mut().zip(src) {
                                *ov += wt * xv;
                            }
                        }
                    }
                }
            }
        }
        let rg = self.rg(x) || self.rg(w) || b.is_some_and(|b| self.rg(b));
        Ok(self.push(out, Op::Conv1d { x, w, b, pad }, rg))
    }

    /// Applies fixed taps to every channel independently, with `pad` zeros on
    /// both sides. The output length is `len + 2·pad − k + 1`.
    pub fn fixed_conv(&mut self, x: TensorId, kernel: &EdgeKernel, pad: usize) -> Result<TensorId> {
        let xs = self.shape(x);
        let k = kernel.len();
        let lout = (xs[2] + 2 * pad + 1)
            .checked_sub(k)
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Shape(format!("kernel of {k} taps longer than padded input {:?}", xs)))?;
        let taps = kernel.taps().to_vec();
        let mut out = Tensor::zeros([xs[0], xs[1], lout]);
        let xv = &self.nodes[x.0].value;
        let l = xs[2] as isize;
        for b in 0..xs[0] {
            for c in 0..xs[1] {
                let xrow = xv.row(b, c);
                let orow = out.row_mut(b, c);
                for (t, &wt) in taps.iter().enumerate() {
                    if wt == 0.0 {
                        continue;
                    }
                    let off = t as isize - pad as isize;
                    for (j, ov) in orow.iter_mut().enumerate() {
                        let s = j as isize + off;
                        if s >= 0 && s < l {
                            *ov += wt * xrow[s as usize];
                        }
                    }
                }
            }
        }
        let rg = self.rg(x);
        Ok(self.push(out, Op::FixedConv { x, taps, pad }, rg))
    }

    fn binary(&mut self, a: TensorId, b: TensorId, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let sa = self.shape(a);
        let sb = self.shape(b);
        let shape = broadcast_shape(sa, sb)?;
        let mut out = Tensor::zeros(shape);
        let (av, bv) = (&self.nodes[a.0].value.data, &self.nodes[b.0].value.data);
        for_broadcast(sa, sb, shape, |o, i, j| out.data[o] = f(av[i], bv[j]));
        Ok(out)
    }

    /// Elementwise sum with broadcasting over size-1 axes.
    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let out = self.binary(a, b, |x, y| x + y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let out = self.binary(a, b, |x, y| x - y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let out = self.binary(a, b, |x, y| x * y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Mul(a, b), rg))
    }

    pub fn div(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let out = self.binary(a, b, |x, y| x / y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Div(a, b), rg))
    }

    fn unary(&mut self, x: TensorId, op: Op, f: impl Fn(f64) -> f64) -> TensorId {
        let v = &self.nodes[x.0].value;
        let out = Tensor { shape: v.shape, data: v.data.iter().map(|&a| f(a)).collect() };
        let rg = self.rg(x);
        self.push(out, op, rg)
    }

    /// Subgradient 0 at 0.
    pub fn abs(&mut self, x: TensorId) -> TensorId {
        self.unary(x, Op::Abs(x), f64::abs)
    }

    /// `max(x, floor)`; subgradient 0 at the kink.
    pub fn clamp_min(&mut self, x: TensorId, floor: f64) -> TensorId {
        self.unary(x, Op::ClampMin(x, floor), |a| a.max(floor))
    }

    pub fn leaky_relu(&mut self, x: TensorId, slope: f64) -> TensorId {
        self.unary(x, Op::LeakyRelu(x, slope), |a| if a > 0.0 { a } else { slope * a })
    }

    pub fn sigmoid(&mut self, x: TensorId) -> TensorId {
        self.unary(x, Op::Sigmoid(x), sigmoid)
    }

    pub fn scale(&mut self, x: TensorId, s: f64) -> TensorId {
        self.unary(x, Op::Scale(x, s), |a| a * s)
    }

    pub fn add_scalar(&mut self, x: TensorId, s: f64) -> TensorId {
        self.unary(x, Op::AddScalar(x), |a| a + s)
    }

    /// Sum over the length axis, keeping it as size 1.
    pub fn sum_length(&mut self, x: TensorId) -> TensorId {
        let v = &self.nodes[x.0].value;
        let [b, c, _] = v.shape;
        let mut out = Tensor::zeros([b, c, 1]);
        for bi in 0..b {
            for ci in 0..c {
                out.data[bi * c + ci] = v.row(bi, ci).iter().sum();
            }
        }
        let rg = self.rg(x);
        self.push(out, Op::SumLength(x), rg)
    }

    /// Mean of every element, as a (1, 1, 1) tensor.
    pub fn mean(&mut self, x: TensorId) -> TensorId {
        let v = &self.nodes[x.0].value;
        let m = v.data.iter().sum::<f64>() / v.numel() as f64;
        let rg = self.rg(x);
        self.push(Tensor::scalar(m), Op::Mean(x), rg)
    }

    /// Max over non-overlapping pairs along the length axis.
    pub fn max_pool2(&mut self, x: TensorId) -> Result<TensorId> {
        let v = &self.nodes[x.0].value;
        let [b, c, l] = v.shape;
        if l % 2 != 0 {
            return Err(Error::Shape(format!("max_pool2 needs an even length, got {l}")));
        }
        let mut out = Tensor::zeros([b, c, l / 2]);
        let mut argmax = Vec::with_capacity(out.numel());
        for (o, pair) in v.data.chunks_exact(2).enumerate() {
            let pick = if pair[1] > pair[0] { 1 } else { 0 };
            out.data[o] = pair[pick];
            argmax.push(2 * o + pick);
        }
        let rg = self.rg(x);
        Ok(self.push(out, Op::MaxPool2 { x, argmax }, rg))
    }

    /// Nearest-neighbour upsampling by 2 along length.
    pub fn upsample2(&mut self, x: TensorId) -> TensorId {
        let v = &self.nodes[x.0].value;
        let [b, c, l] = v.shape;
        let data = v.data.iter().flat_map(|&a| [a, a]).collect();
        let rg = self.rg(x);
        self.push(Tensor { shape: [b, c, 2 * l], data }, Op::Upsample2(x), rg)
    }

    /// Concatenation along the channel axis.
    pub fn concat(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa[0] != sb[0] || sa[2] != sb[2] {
            return Err(Error::Shape(format!("cannot concatenate {sa:?} and {sb:?} along channels")));
        }
        let mut out = Tensor::zeros([sa[0], sa[1] + sb[1], sa[2]]);
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let (ra, rb) = (sa[1] * sa[2], sb[1] * sb[2]);
        for i in 0..sa[0] {
            let dst = &mut out.data[i * (ra + rb)..(i + 1) * (ra + rb)];
            dst[..ra].copy_from_slice(&av.data[i * ra..(i + 1) * ra]);
            dst[ra..].copy_from_slice(&bv.data[i * rb..(i + 1) * rb]);
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Concat(a, b), rg))
    }

    /// Same data under another shape with the same element count.
    pub fn reshape(&mut self, x: TensorId, shape: [usize; 3]) -> Result<TensorId> {
        let v = &self.nodes[x.0].value;
        if shape.iter().product::<usize>() != v.numel() {
            return Err(Error::Shape(format!("cannot reshape {:?} to {shape:?}", v.shape)));
        }
        let out = Tensor { shape, data: v.data.clone() };
        let rg = self.rg(x);
        Ok(self.push(out, Op::Reshape(x), rg))
    }

    /// Batch normalization with statistics of the current batch, taken per
    /// channel over batch and length (population variance).
    pub fn batch_norm(&mut self, x: TensorId, gamma: TensorId, beta: TensorId, eps: f64) -> Result<(TensorId, BatchStats)> {
        let [b, c, l] = self.shape(x);
        self.check_channel_param(gamma, c)?;
        self.check_channel_param(beta, c)?;
        let v = &self.nodes[x.0].value;
        let n = (b * l) as f64;
        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        for ci in 0..c {
            let s: f64 = (0..b).map(|bi| v.row(bi, ci).iter().sum::<f64>()).sum();
            let m = s / n;
            let q: f64 = (0..b).map(|bi| v.row(bi, ci).iter().map(|a| (a - m) * (a - m)).sum::<f64>()).sum();
            mean[ci] = m;
            var[ci] = q / n;
        }
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let (g, be) = (&self.nodes[gamma.0].value.data, &self.nodes[beta.0].value.data);
        let mut xhat = vec![0.0; v.numel()];
        let mut out = Tensor::zeros([b, c, l]);
        for bi in 0..b {
            for ci in 0..c {
                let o = v.offset(bi, ci, 0);
                for t in 0..l {
                    let h = (v.data[o + t] - mean[ci]) * inv_std[ci];
                    xhat[o + t] = h;
                    out.data[o + t] = g[ci] * h + be[ci];
                }
            }
        }
        let rg = self.rg(x) || self.rg(gamma) || self.rg(beta);
        let id = self.push(out, Op::BatchNorm { x, gamma, beta, xhat, inv_std }, rg);
        Ok((id, BatchStats { mean, var }))
    }

    /// Batch normalization with fixed statistics (inference).
    pub fn batch_norm_fixed(
        &mut self,
        x: TensorId,
        gamma: TensorId,
        beta: TensorId,
        stats: &BatchStats,
        eps: f64,
    ) -> Result<TensorId> {
        let [b, c, l] = self.shape(x);
        self.check_channel_param(gamma, c)?;
        self.check_channel_param(beta, c)?;
        if stats.mean.len() != c || stats.var.len() != c {
            return Err(Error::Shape(format!("running statistics cover {} channels, input has {c}", stats.mean.len())));
        }
        let inv_std: Vec<f64> = stats.var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let v = &self.nodes[x.0].value;
        let (g, be) = (&self.nodes[gamma.0].value.data, &self.nodes[beta.0].value.data);
        let mut out = Tensor::zeros([b, c, l]);
        for bi in 0..b {
            for ci in 0..c {
                let o = v.offset(bi, ci, 0);
                for t in 0..l {
                    out.data[o + t] = g[ci] * (v.data[o + t] - stats.mean[ci]) * inv_std[ci] + be[ci];
                }
            }
        }
        let rg = self.rg(x) || self.rg(gamma) || self.rg(beta);
        let mean = stats.mean.clone();
        Ok(self.push(out, Op::Affine { x, gamma, beta, mean, inv_std }, rg))
    }

    fn check_channel_param(&self, p: TensorId, c: usize) -> Result<()> {
        if self.shape(p) != [1, c, 1] {
            return Err(Error::Shape(format!("per-channel parameter {:?} should be [1, {c}, 1]", self.shape(p))));
        }
        Ok(())
    }

    /// Reverse pass from a one-element `root`. Clears earlier gradients.
    pub fn backward(&mut self, root: TensorId) -> Result<()> {
        if self.nodes[root.0].value.numel() != 1 {
            return Err(Error::Shape(format!("backward needs a scalar root, got {:?}", self.shape(root))));
        }
        self.grads.iter_mut().for_each(|g| *g = None);
        self.grads[root.0] = Some(vec![1.0]);
        for id in (0..=root.0).rev() {
            if !self.nodes[id].requires_grad {
                continue;
            }
            let Some(g) = self.grads[id].take() else { continue };
            self.propagate(id, &g);
            self.grads[id] = Some(g);
        }
        Ok(())
    }

    fn acc(&mut self, id: TensorId) -> Option<&mut Vec<f64>> {
        if !self.nodes[id.0].requires_grad {
            return None;
        }
        let n = self.nodes[id.0].value.numel();
        Some(self.grads[id.0].get_or_insert_with(|| vec![0.0; n]))
    }

    fn propagate(&mut self, id: usize, g: &[f64]) {
        // NOTE: ops are matched by reference; `nodes` is only read here while
        // `grads` is written, so clone the few small vectors we need.
        let out_shape = self.nodes[id].value.shape;
        match &self.nodes[id].op {
            Op::Leaf => {}
            &Op::Conv1d { x, w, b, pad } => self.back_conv(x, w, b, pad, out_shape, g),
            Op::FixedConv { x, taps, pad } => {
                let (x, taps, pad) = (*x, taps.clone(), *pad);
                let xs = self.shape(x);
                if let Some(dx) = self.acc(x) {
                    let l = xs[2] as isize;
                    let lout = out_shape[2];
                    for r in 0..xs[0] * xs[1] {
                        let grow = &g[r * lout..(r + 1) * lout];
                        let drow = &mut dx[r * xs[2]..(r + 1) * xs[2]];
                        for (t, &wt) in taps.iter().enumerate() {
                            if wt == 0.0 {
                                continue;
                            }
                            let off = t as isize - pad as isize;
                            for (j, gv) in grow.iter().enumerate() {
                                let s = j as isize + off;
                                if s >= 0 && s < l {
                                    drow[s as usize] += wt * gv;
                                }
                            }
                        }
                    }
                }
            }
            &Op::Add(a, b) => {
                self.back_broadcast(a, out_shape, g, |_, _| 1.0);
                self.back_broadcast(b, out_shape, g, |_, _| 1.0);
            }
            &Op::Sub(a, b) => {
                self.back_broadcast(a, out_shape, g, |_, _| 1.0);
                self.back_broadcast(b, out_shape, g, |_, _| -1.0);
            }
            &Op::Mul(a, b) => {
                let (va, vb) = (self.value(a).clone(), self.value(b).clone());
                self.back_pair(a, b, &va, &vb, out_shape, g, |_, y| y, |x, _| x);
            }
            &Op::Div(a, b) => {
                let (va, vb) = (self.value(a).clone(), self.value(b).clone());
                self.back_pair(a, b, &va, &vb, out_shape, g, |_, y| 1.0 / y, |x, y| -x / (y * y));
            }
            &Op::Abs(x) => self.back_unary(x, g, |a, _| if a > 0.0 { 1.0 } else if a < 0.0 { -1.0 } else { 0.0 }),
            &Op::ClampMin(x, floor) => self.back_unary(x, g, move |a, _| if a > floor { 1.0 } else { 0.0 }),
            &Op::LeakyRelu(x, s) => self.back_unary(x, g, move |a, _| if a > 0.0 { 1.0 } else { s }),
            &Op::Sigmoid(x) => {
                let y = self.nodes[id].value.data.clone();
                if let Some(dx) = self.acc(x) {
                    for ((d, gv), yv) in dx.iter_mut().zip(g).zip(&y) {
                        *d += gv * yv * (1.0 - yv);
                    }
                }
            }
            &Op::Scale(x, s) => self.back_unary(x, g, move |_, _| s),
            &Op::AddScalar(x) | &Op::Reshape(x) => self.back_unary(x, g, |_, _| 1.0),
            &Op::SumLength(x) => {
                let l = self.shape(x)[2];
                if let Some(dx) = self.acc(x) {
                    for (r, gv) in g.iter().enumerate() {
                        dx[r * l..(r + 1) * l].iter_mut().for_each(|d| *d += gv);
                    }
                }
            }
            &Op::Mean(x) => {
                if let Some(dx) = self.acc(x) {
                    let k = g[0] / dx.len() as f64;
                    dx.iter_mut().for_each(|d| *d += k);
                }
            }
            Op::MaxPool2 { x, argmax } => {
                let (x, argmax) = (*x, argmax.clone());
                if let Some(dx) = self.acc(x) {
                    for (gv, &i) in g.iter().zip(&argmax) {
                        dx[i] += gv;
                    }
                }
            }
            &Op::Upsample2(x) => {
                if let Some(dx) = self.acc(x) {
                    for (i, d) in dx.iter_mut().enumerate() {
                        *d += g[2 * i] + g[2 * i + 1];
                    }
                }
            }
            &Op::Concat(a, b) => {
                let (sa, sb) = (self.shape(a), self.shape(b));
                let (ra, rb) = (sa[1] * sa[2], sb[1] * sb[2]);
                if let Some(da) = self.acc(a) {
                    for i in 0..sa[0] {
                        for (d, gv) in da[i * ra..(i + 1) * ra].iter_mut().zip(&g[i * (ra + rb)..]) {
                            *d += gv;
                        }
                    }
                }
                if let Some(db) = self.acc(b) {
                    for i in 0..sb[0] {
                        for (d, gv) in db[i * rb..(i + 1) * rb].iter_mut().zip(&g[i * (ra + rb) + ra..]) {
                            *d += gv;
                        }
                    }
                }
            }
            Op::BatchNorm { x, gamma, beta, xhat, inv_std } => {
                let (x, gamma, beta, xhat, inv_std) = (*x, *gamma, *beta, xhat.clone(), inv_std.clone());
                self.back_batch_norm(x, gamma, beta, &xhat, &inv_std, out_shape, g);
            }
            Op::Affine { x, gamma, beta, mean, inv_std } => {
                let (x, gamma, beta, mean, inv_std) = (*x, *gamma, *beta, mean.clone(), inv_std.clone());
                let [b, c, l] = out_shape;
                let xv = self.value(x).clone();
                let gv = self.value(gamma).data.clone();
                let mut dgamma = vec![0.0; c];
                let mut dbeta = vec![0.0; c];
                let mut dxv = vec![0.0; xv.numel()];
                for bi in 0..b {
                    for ci in 0..c {
                        let o = xv.offset(bi, ci, 0);
                        for t in 0..l {
                            let h = (xv.data[o + t] - mean[ci]) * inv_std[ci];
                            dgamma[ci] += g[o + t] * h;
                            dbeta[ci] += g[o + t];
                            dxv[o + t] = g[o + t] * gv[ci] * inv_std[ci];
                        }
                    }
                }
                add_into(self.acc(x), &dxv);
                add_into(self.acc(gamma), &dgamma);
                add_into(self.acc(beta), &dbeta);
            }
        }
    }

    fn back_unary(&mut self, x: TensorId, g: &[f64], d: impl Fn(f64, f64) -> f64) {
        if !self.rg(x) {
            return;
        }
        let xv = self.value(x).data.clone();
        if let Some(dx) = self.acc(x) {
            for ((acc, gv), a) in dx.iter_mut().zip(g).zip(&xv) {
                *acc += gv * d(*a, *gv);
            }
        }
    }

    fn back_broadcast(&mut self, a: TensorId, out: [usize; 3], g: &[f64], d: impl Fn(usize, usize) -> f64) {
        let sa = self.shape(a);
        if let Some(da) = self.acc(a) {
            for_broadcast(sa, sa, out, |o, i, _| da[i] += g[o] * d(o, i));
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn back_pair(
        &mut self,
        a: TensorId,
        b: TensorId,
        va: &Tensor,
        vb: &Tensor,
        out: [usize; 3],
        g: &[f64],
        da_fn: impl Fn(f64, f64) -> f64,
        db_fn: impl Fn(f64, f64) -> f64,
    ) {
        let (sa, sb) = (va.shape, vb.shape);
        if let Some(da) = self.acc(a) {
            for_broadcast(sa, sb, out, |o, i, j| da[i] += g[o] * da_fn(va.data[i], vb.data[j]));
        }
        if let Some(db) = self.acc(b) {
            for_broadcast(sa, sb, out, |o, i, j| db[j] += g[o] * db_fn(va.data[i], vb.data[j]));
        }
    }

    fn back_conv(&mut self, x: TensorId, w: TensorId, b: Option<TensorId>, pad: usize, out: [usize; 3], g: &[f64]) {
        let xv = self.value(x).clone();
        let wv = self.value(w).clone();
        let [bs, cin, l] = xv.shape;
        let [cout, _, k] = wv.shape;
        let row = |bi: usize, c: usize| (bi * out[1] + c) * out[2];
        if let Some(Some(db)) = b.map(|b| self.acc(b)) {
            for bi in 0..bs {
                for (o, d) in db.iter_mut().enumerate() {
                    *d += g[row(bi, o)..row(bi, o) + l].iter().sum::<f64>();
                }
            }
        }
        let range = |t: usize| {
            let off = t as isize - pad as isize;
            let lo = (-off).max(0) as usize;
            let hi = ((l as isize - off).min(l as isize)).max(0) as usize;
            (off, lo, hi)
        };
        if let Some(dw) = self.acc(w) {
            for bi in 0..bs {
                for o in 0..cout {
                    let grow = &g[row(bi, o)..row(bi, o) + l];
                    for i in 0..cin {
                        let xrow = xv.row(bi, i);
                        for t in 0..k {
                            let (off, lo, hi) = range(t);
                            if lo >= hi {
                                continue;
                            }
                            let src = &xrow[(lo as isize + off) as usize..(hi as isize + off) as usize];
                            let s: f64 = grow[lo..hi].iter().zip(src).map(|(a, b)| a * b).sum();
                            dw[(o * cin + i) * k + t] += s;
                        }
                    }
                }
            }
        }
        if let Some(dx) = self.acc(x) {
            for bi in 0..bs {
                for o in 0..cout {
                    let grow = &g[row(bi, o)..row(bi, o) + l];
                    for i in 0..cin {
                        let base = (bi * cin + i) * l;
                        for t in 0..k {
                            let wt = wv.data[(o * cin + i) * k + t];
                            let (off, lo, hi) = range(t);
                            if lo >= hi {
                                continue;
                            }
                            let dst = &mut dx[(base as isize + lo as isize + off) as usize..(base as isize + hi as isize + off) as usize];
                            for (d, gv) in dst.iter_mut().zip(&grow[lo..hi]) {
                                *d += wt * gv;
                            }
                        }
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn back_batch_norm(
        &mut self,
        x: TensorId,
        gamma: TensorId,
        beta: TensorId,
        xhat: &[f64],
        inv_std: &[f64],
        shape: [usize; 3],
        g: &[f64],
    ) {
        let [b, c, l] = shape;
        let n = (b * l) as f64;
        let gv = self.value(gamma).data.clone();
        let mut dgamma = vec![0.0; c];
        let mut dbeta = vec![0.0; c];
        for bi in 0..b {
            for ci in 0..c {
                let o = (bi * c + ci) * l;
                for t in 0..l {
                    dgamma[ci] += g[o + t] * xhat[o + t];
                    dbeta[ci] += g[o + t];
                }
            }
        }
        if self.rg(x) {
            let mut dxv = vec![0.0; g.len()];
            for ci in 0..c {
                // dxhat = g·γ; dx = inv_std/n · (n·dxhat − Σdxhat − xhat·Σ(dxhat·xhat))
                let sum_d = dbeta[ci] * gv[ci];
                let sum_dx = dgamma[ci] * gv[ci];
                for bi in 0..b {
                    let o = (bi * c + ci) * l;
                    for t in 0..l {
                        let d = g[o + t] * gv[ci];
                        dxv[o + t] = inv_std[ci] / n * (n * d - sum_d - xhat[o + t] * sum_dx);
                    }
                }
            }
            add_into(self.acc(x), &dxv);
        }
        add_into(self.acc(gamma), &dgamma);
        add_into(self.acc(beta), &dbeta);
    }
}

fn add_into(dst: Option<&mut Vec<f64>>, src: &[f64]) {
    if let Some(d) = dst {
        for (a, b) in d.iter_mut().zip(src) {
            *a += b;
        }
    }
}
