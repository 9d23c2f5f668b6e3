use super::{EdgeKernel, Graph, TensorId};
use crate::{Error, Result};

fn check_same(g: &Graph, a: TensorId, b: TensorId) -> Result<()> {
    if g.shape(a) != g.shape(b) {
        return Err(Error::Shape(format!("prediction {:?} and target {:?} differ", g.shape(a), g.shape(b))));
    }
    Ok(())
}

/// Per (batch, channel): `1 − (2·Σpg + ε)/(Σp + Σg + ε)`, averaged.
pub fn dice_loss(g: &mut Graph, pred: TensorId, gt: TensorId, eps: f64) -> Result<TensorId> {
    check_same(g, pred, gt)?;
    let pg = g.mul(pred, gt)?;
    let inter = g.sum_length(pg);
    let num = g.scale(inter, 2.0);
    let num = g.add_scalar(num, eps);
    let sp = g.sum_length(pred);
    let sg = g.sum_length(gt);
    let den = g.add(sp, sg)?;
    let den = g.add_scalar(den, eps);
    let ratio = g.div(num, den)?;
    let m = g.mean(ratio);
    let neg = g.scale(m, -1.0);
    Ok(g.add_scalar(neg, 1.0))
}

/// Dice between the absolute edge maps of prediction and target, with the
/// `(-1, 0, …, 0, +1)` kernel of size `n` (length-preserving padding).
pub fn boundary_loss(g: &mut Graph, pred: TensorId, gt: TensorId, n: usize, eps: f64) -> Result<TensorId> {
    check_same(g, pred, gt)?;
    let k = EdgeKernel::boundary(n)?;
    let ep = g.fixed_conv(pred, &k, k.half())?;
    let ep = g.abs(ep);
    let eg = g.fixed_conv(gt, &k, k.half())?;
    let eg = g.abs(eg);
    dice_loss(g, ep, eg, eps)
}

/// Soft instance counts per (batch, channel): `Σ|x ⋆ (−1, 0, 1)| / 4` with
/// two zeros of padding on either side, so runs touching an edge count fully.
pub fn instance_counts(g: &mut Graph, x: TensorId) -> Result<TensorId> {
    let k = EdgeKernel::prewitt();
    let e = g.fixed_conv(x, &k, k.len() - 1)?;
    let e = g.abs(e);
    let s = g.sum_length(e);
    Ok(g.scale(s, 0.25))
}

/// Smoothed F1 of instance counts. With `P` predicted and `G` true counts:
/// `TP = |G − max(G − P, 0)|`, `FP = max(P − G, 0)`, `FN = max(G − P, 0)`,
/// loss `1 − (2TP + ε)/(2TP + FP + FN + ε)` averaged over batch and channel.
pub fn f1_instance_loss(g: &mut Graph, pred: TensorId, gt: TensorId, eps: f64) -> Result<TensorId> {
    check_same(g, pred, gt)?;
    let p = instance_counts(g, pred)?;
    let t = instance_counts(g, gt)?;
    let gp = g.sub(t, p)?;
    let fn_ = g.clamp_min(gp, 0.0);
    let pg = g.sub(p, t)?;
    let fp = g.clamp_min(pg, 0.0);
    let tp = g.sub(t, fn_)?;
    let tp = g.abs(tp);
    let tp2 = g.scale(tp, 2.0);
    let num = g.add_scalar(tp2, eps);
    let errs = g.add(fp, fn_)?;
    let den = g.add(tp2, errs)?;
    let den = g.add_scalar(den, eps);
    let ratio = g.div(num, den)?;
    let m = g.mean(ratio);
    let neg = g.scale(m, -1.0);
    Ok(g.add_scalar(neg, 1.0))
}

/// Closed form of [`f1_instance_loss`] for one pair of counts.
pub fn f1_from_counts(gt: f64, pred: f64, eps: f64) -> (f64, f64, f64, f64) {
    let fn_ = (gt - pred).max(0.0);
    let fp = (pred - gt).max(0.0);
    let tp = (gt - fn_).abs();
    (tp, fp, fn_, 1.0 - (2.0 * tp + eps) / (2.0 * tp + fp + fn_ + eps))
}
