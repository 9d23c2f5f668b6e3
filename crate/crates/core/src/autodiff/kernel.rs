use crate::{Error, Result};

/// Fixed, non-trainable edge-detection taps (correlation order).
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeKernel {
    taps: Vec<f64>,
}

impl EdgeKernel {
    /// `(-1, 0, +1)`.
    pub fn prewitt() -> Self {
        EdgeKernel { taps: vec![-1.0, 0.0, 1.0] }
    }

    /// `(-1, 0, …, 0, +1)` of odd length `n ≥ 3`.
    pub fn boundary(n: usize) -> Result<Self> {
        if n < 3 || n % 2 == 0 {
            return Err(Error::Config(format!("boundary kernel size must be odd and ≥ 3, got {n}")));
        }
        let mut taps = vec![0.0; n];
        taps[0] = -1.0;
        taps[n - 1] = 1.0;
        Ok(EdgeKernel { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn half(&self) -> usize {
        self.taps.len() / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        assert_eq!(EdgeKernel::prewitt().taps(), [-1.0, 0.0, 1.0]);
        assert_eq!(EdgeKernel::boundary(5).unwrap().taps(), [-1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(EdgeKernel::boundary(4).is_err());
        assert!(EdgeKernel::boundary(1).is_err());
    }
}
