use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense (batch, channel, length) array, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: [usize; 3],
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: [usize; 3]) -> Self {
        Tensor { shape, data: vec![0.0; shape.iter().product()] }
    }

    pub fn filled(shape: [usize; 3], value: f64) -> Self {
        Tensor { shape, data: vec![value; shape.iter().product()] }
    }

    pub fn new(shape: [usize; 3], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(Error::Shape(format!("shape {shape:?} needs {n} values, got {}", data.len())));
        }
        Ok(Tensor { shape, data })
    }

    pub fn scalar(value: f64) -> Self {
        Tensor { shape: [1, 1, 1], data: vec![value] }
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    pub fn channels(&self) -> usize {
        self.shape[1]
    }

    pub fn length(&self) -> usize {
        self.shape[2]
    }

    #[inline]
    pub fn offset(&self, b: usize, c: usize, l: usize) -> usize {
        (b * self.shape[1] + c) * self.shape[2] + l
    }

    pub fn get(&self, b: usize, c: usize, l: usize) -> f64 {
        self.data[self.offset(b, c, l)]
    }

    /// Samples of one (batch, channel) row.
    pub fn row(&self, b: usize, c: usize) -> &[f64] {
        let o = self.offset(b, c, 0);
        &self.data[o..o + self.shape[2]]
    }

    pub fn row_mut(&mut self, b: usize, c: usize) -> &mut [f64] {
        let o = self.offset(b, c, 0);
        let l = self.shape[2];
        &mut self.data[o..o + l]
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
