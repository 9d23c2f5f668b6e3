//! 1-D resampling with endpoint-aligned sample grids.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Linear,
    Cubic,
}

pub fn resample(xs: &[f64], len: usize, method: Interpolation) -> Vec<f64> {
    match method {
        Interpolation::Linear => resample_linear(xs, len),
        Interpolation::Cubic => resample_cubic(xs, len),
    }
}

/// Linear interpolation of `xs` onto `len` points; first and last samples map
/// onto each other.
pub fn resample_linear(xs: &[f64], len: usize) -> Vec<f64> {
    let n = xs.len();
    if len == 0 || n == 0 {
        return Vec::new();
    }
    if n == 1 || len == 1 {
        return vec![xs[if len == 1 { n / 2 } else { 0 }]; len];
    }
    if n == len {
        return xs.to_vec();
    }
    let step = (n - 1) as f64 / (len - 1) as f64;
    (0..len)
        .map(|j| {
            let t = j as f64 * step;
            let i = (t.floor() as usize).min(n - 2);
            let frac = t - i as f64;
            xs[i] + (xs[i + 1] - xs[i]) * frac
        })
        .collect()
}

/// Catmull-Rom cubic interpolation; ghost points beyond the ends are
/// extrapolated linearly.
pub fn resample_cubic(xs: &[f64], len: usize) -> Vec<f64> {
    let n = xs.len();
    if n < 4 || len < 2 || n == len {
        return resample_linear(xs, len);
    }
    let at = |i: isize| {
        if i < 0 {
            2.0 * xs[0] - xs[1]
        } else if i as usize >= n {
            2.0 * xs[n - 1] - xs[n - 2]
        } else {
            xs[i as usize]
        }
    };
    let step = (n - 1) as f64 / (len - 1) as f64;
    (0..len)
        .map(|j| {
            let t = j as f64 * step;
            let i = (t.floor() as isize).min(n as isize - 2);
            let u = t - i as f64;
            let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
            0.5 * (2.0 * p1
                + (p2 - p0) * u
                + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u
                + (3.0 * p1 - p0 - 3.0 * p2 + p3) * u * u * u)
        })
        .collect()
}
