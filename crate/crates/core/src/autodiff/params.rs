use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Tape, Tensor, Var};
use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub value: Tensor,
    #[serde(skip)]
    pub grad: Option<Tensor>,
    #[serde(skip)]
    m: Option<Tensor>,
    #[serde(skip)]
    v: Option<Tensor>,
}

/// Named trainable tensors plus Adam moments.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    params: BTreeMap<String, Param>,
    #[serde(skip)]
    step: u64,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        self.params.insert(name.into(), Param { value, grad: None, m: None, v: None });
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.params
            .get(name)
            .map(|p| &p.value)
            .ok_or_else(|| Error::ShapeMismatch(format!("no parameter named {name:?}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.params
            .get_mut(name)
            .map(|p| &mut p.value)
            .ok_or_else(|| Error::ShapeMismatch(format!("no parameter named {name:?}")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.params.iter().map(|(k, p)| (k.as_str(), &p.value))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total scalar count.
    pub fn num_scalars(&self) -> usize {
        self.params.values().map(|p| p.value.len()).sum()
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Binds a parameter onto a tape.
    pub fn bind(&self, tape: &mut Tape, name: &str) -> Result<Var> {
        Ok(tape.param(name, self.get(name)?))
    }

    pub fn set_grads(&mut self, grads: BTreeMap<String, Tensor>) -> Result<()> {
        for (name, g) in grads {
            let Some(p) = self.params.get_mut(&name) else { continue };
            if g.shape != p.value.shape {
                return shape_err(format!("gradient {:?} for parameter {name} of {:?}", g.shape, p.value.shape));
            }
            p.grad = Some(g);
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        self.params.values_mut().for_each(|p| p.grad = None);
    }

    pub fn grad(&self, name: &str) -> Option<&Tensor> {
        self.params.get(name).and_then(|p| p.grad.as_ref())
    }

    /// One bias-corrected Adam update; parameters without a gradient are left alone.
    pub fn adam_step(&mut self, cfg: &AdamConfig) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for p in self.params.values_mut() {
            let Some(g) = &p.grad else { continue };
            let m = p.m.get_or_insert_with(|| Tensor::zeros(&p.value.shape));
            let v = p.v.get_or_insert_with(|| Tensor::zeros(&p.value.shape));
            for i in 0..g.len() {
                let gi = g.data[i];
                m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * gi;
                v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * gi * gi;
                let mh = m.data[i] / c1;
                let vh = v.data[i] / c2;
                p.value.data[i] -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
            }
        }
    }
}

/// Glorot-uniform `rows x cols` weight.
pub fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.random_range(-a..a)).collect();
    Tensor { shape: vec![rows, cols], data }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(x: f64, g: f64) -> ParamSet {
        let mut ps = ParamSet::new();
        ps.insert("w", Tensor::scalar(x));
        ps.set_grads([("w".to_string(), Tensor::scalar(g))].into()).unwrap();
        ps
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut ps = single(1.5, 0.0);
        ps.adam_step(&AdamConfig::default());
        assert_eq!(ps.get("w").unwrap().data, vec![1.5]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        for g in [3.0, -0.2] {
            let mut ps = single(0.0, g);
            let cfg = AdamConfig { lr: 0.01, ..Default::default() };
            ps.adam_step(&cfg);
            let moved = ps.get("w").unwrap().data[0].abs();
            assert!((moved - 0.01).abs() <= 0.01 * 0.01, "{moved}");
        }
    }

    #[test]
    fn grad_shape_checked() {
        let mut ps = ParamSet::new();
        ps.insert("w", Tensor::zeros(&[2, 2]));
        assert!(ps.set_grads([("w".to_string(), Tensor::zeros(&[4]))].into()).is_err());
    }
}
