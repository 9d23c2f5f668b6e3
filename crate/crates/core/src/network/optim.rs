use super::ModelParams;
use crate::autodiff::Tensor;
use crate::{Error, Result};

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam { lr, beta1, beta2, eps, t: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &[Tensor]) -> Result<()> {
        if grads.len() != params.len() {
            return Err(Error::Shape(format!("{} gradients for {} parameters", grads.len(), params.len())));
        }
        if self.m.is_empty() {
            self.m = params.tensors().iter().map(|t| vec![0.0; t.numel()]).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (k, (p, g)) in params.tensors_mut().iter_mut().zip(grads).enumerate() {
            if p.shape != g.shape {
                return Err(Error::Shape(format!("gradient {:?} for parameter {:?}", g.shape, p.shape)));
            }
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p.data[i] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        // with bias correction the first update is lr · sign(g)
        let mut p = ModelParams::from_parts(vec!["a".into()], vec![Tensor::new([1, 1, 3], vec![1.0, 1.0, 1.0]).unwrap()]).unwrap();
        let g = Tensor::new([1, 1, 3], vec![0.5, -2.0, 0.0]).unwrap();
        let mut adam = Adam::new(0.1, 0.9, 0.999, 1e-8);
        adam.step(&mut p, &[g]).unwrap();
        let d = &p.tensors()[0].data;
        assert!((d[0] - 0.9).abs() < 1e-6 && (d[1] - 1.1).abs() < 1e-6 && d[2] == 1.0);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut p = ModelParams::from_parts(vec!["a".into()], vec![Tensor::new([1, 1, 2], vec![3.0, -4.0]).unwrap()]).unwrap();
        let mut adam = Adam::new(0.05, 0.9, 0.999, 1e-8);
        for _ in 0..2000 {
            let x = p.tensors()[0].data.clone();
            let g = Tensor::new([1, 1, 2], x.iter().map(|v| 2.0 * v).collect()).unwrap();
            adam.step(&mut p, &[g]).unwrap();
        }
        assert!(p.tensors()[0].data.iter().all(|v| v.abs() < 1e-3));
    }
}
