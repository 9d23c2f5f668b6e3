use crate::stats::median;

pub const DEFAULT_WINDOW: usize = 256;
const FLOOR: f64 = 1e-6;

/// Divisor used by [`normalize_input`]: the median over all positions of the
/// centred moving mean of |x| (window clipped at the edges), floored at 1e-6.
pub fn normalization_scale(signal: &[f64], window: usize) -> f64 {
    let n = signal.len();
    if n == 0 {
        return 1.0;
    }
    let w = window.max(1);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for x in signal {
        prefix.push(prefix.last().unwrap() + x.abs());
    }
    let means: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(w / 2);
            let hi = (i + w - w / 2).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect();
    median(&means).unwrap_or(1.0).max(FLOOR)
}

pub fn normalize_input(signal: &[f64], window: usize) -> Vec<f64> {
    let s = normalization_scale(signal, window);
    signal.iter().map(|x| x / s).collect()
}
