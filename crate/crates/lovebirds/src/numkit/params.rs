//! Named parameter store with Adam state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::dense::DenseArray;
use crate::numkit::rng::RngState;

/// One trainable array: value, gradient accumulator and Adam moments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamEntry {
    pub value: DenseArray,
    pub grad: DenseArray,
    pub m: DenseArray,
    pub v: DenseArray,
    pub step: u64,
    /// Set when any backward pass touched this entry since the last update.
    pub grad_seen: bool,
}

/// Map from canonical parameter name to its entry. Iteration order is the
/// sorted name order, which fixes the RNG consumption order at init time.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ParamStore {
    entries: BTreeMap<String, ParamEntry>,
}

/// Adam hyperparameters. The L2 term is added to the gradient as `l2 * theta`
/// before the moment update.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub l2: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            l2: 0.0,
        }
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a parameter initialized from `N(0, std)`.
    pub fn insert_gaussian(&mut self, name: &str, shape: &[usize], std: f64, rng: &mut RngState) {
        let len: usize = shape.iter().product();
        let data: Vec<f64> = (0..len).map(|_| rng.gaussian(0.0, std)).collect();
        self.insert_value(name, DenseArray::from_vec(shape, data));
    }

    pub fn insert_value(&mut self, name: &str, value: DenseArray) {
        assert!(
            !self.entries.contains_key(name),
            "duplicate parameter name {name}"
        );
        let shape = value.shape.clone();
        self.entries.insert(
            name.to_string(),
            ParamEntry {
                value,
                grad: DenseArray::zeros(&shape),
                m: DenseArray::zeros(&shape),
                v: DenseArray::zeros(&shape),
                step: 0,
                grad_seen: false,
            },
        );
    }

    pub fn get(&self, name: &str) -> &ParamEntry {
        self.entries
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn get_mut(&mut self, name: &str) -> &mut ParamEntry {
        self.entries
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn value(&self, name: &str) -> &DenseArray {
        &self.get(name).value
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParamEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(|e| e.value.len()).sum()
    }

    /// Adds `grad` into the accumulator for `name` and marks it seen.
    pub fn accumulate_grad(&mut self, name: &str, grad: &DenseArray) {
        let entry = self.get_mut(name);
        debug_assert_eq!(entry.grad.shape, grad.shape);
        for (g, d) in entry.grad.data.iter_mut().zip(&grad.data) {
            *g += d;
        }
        entry.grad_seen = true;
    }

    pub fn zero_grads(&mut self) {
        for entry in self.entries.values_mut() {
            entry.grad.data.iter_mut().for_each(|g| *g = 0.0);
            entry.grad_seen = false;
        }
    }

    pub fn scale_grads(&mut self, c: f64) {
        for entry in self.entries.values_mut() {
            entry.grad.data.iter_mut().for_each(|g| *g *= c);
        }
    }

    pub fn grad_norm(&self) -> f64 {
        self.entries
            .values()
            .flat_map(|e| e.grad.data.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales gradients so the global norm is at most `max_norm`.
    pub fn clip_grad_norm(&mut self, max_norm: f64) {
        let norm = self.grad_norm();
        if norm > max_norm {
            self.scale_grads(max_norm / norm);
        }
    }

    /// One Adam update with bias correction over every entry. Gradients are
    /// zeroed afterwards and each entry's step counter is incremented.
    pub fn adam_step(&mut self, cfg: &AdamConfig) -> Result<()> {
        for (name, entry) in self.entries.iter() {
            if !entry.grad_seen {
                return Err(Error::MissingGradient { name: name.clone() });
            }
        }
        for entry in self.entries.values_mut() {
            entry.step += 1;
            let bc1 = 1.0 - cfg.beta1.powi(entry.step as i32);
            let bc2 = 1.0 - cfg.beta2.powi(entry.step as i32);
            for i in 0..entry.value.data.len() {
                let g = entry.grad.data[i] + cfg.l2 * entry.value.data[i];
                entry.m.data[i] = cfg.beta1 * entry.m.data[i] + (1.0 - cfg.beta1) * g;
                entry.v.data[i] = cfg.beta2 * entry.v.data[i] + (1.0 - cfg.beta2) * g * g;
                let m_hat = entry.m.data[i] / bc1;
                let v_hat = entry.v.data[i] / bc2;
                entry.value.data[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
            entry.grad.data.iter_mut().for_each(|g| *g = 0.0);
            entry.grad_seen = false;
        }
        Ok(())
    }

    pub fn validate_finite(&self) -> Result<()> {
        for (name, entry) in self.entries.iter() {
            entry.value.validate_finite(name)?;
        }
        Ok(())
    }
}
