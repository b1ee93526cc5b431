//! Named parameter tensors with deterministic ordering.
//!
//! Every trainable matrix lives here under a stable string name (e.g.
//! `qa.audio.h0.wq`). Deterministic iteration order makes optimizer
//! updates, checkpoints, and rerun byte-identity trivially reproducible.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All trainable tensors of one model instance.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ParamStore {
    params: BTreeMap<String, Array2<f64>>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a new tensor; the name must be unused.
    pub fn insert(&mut self, name: impl Into<String>, value: Array2<f64>) {
        let name = name.into();
        let prev = self.params.insert(name.clone(), value);
        assert!(prev.is_none(), "duplicate parameter {name}");
    }

    pub fn get(&self, name: &str) -> Option<&Array2<f64>> {
        self.params.get(name)
    }

    /// Overwrite an existing tensor, keeping its shape (used by tests
    /// and optimizer steps).
    pub fn set(&mut self, name: &str, value: Array2<f64>) -> Result<()> {
        let slot = self
            .params
            .get_mut(name)
            .ok_or_else(|| Error::validation(format!("unknown parameter {name}")))?;
        if slot.dim() != value.dim() {
            return Err(Error::Shape {
                context: format!("parameter {name}"),
                expected: format!("{:?}", slot.dim()),
                actual: format!("{:?}", value.dim()),
            });
        }
        *slot = value;
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    /// Deterministic (sorted) iteration.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &Array2<f64>)> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Array2<f64>)> {
        self.params.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.params.keys()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total scalar count across all tensors.
    pub fn scalar_count(&self) -> usize {
        self.params.values().map(|m| m.len()).sum()
    }

    /// All values finite?
    pub fn all_finite(&self) -> bool {
        self.params
            .values()
            .all(|m| m.iter().all(|v| v.is_finite()))
    }

    /// Weight matrix drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    pub fn init_weight(&mut self, name: impl Into<String>, rows: usize, cols: usize, rng: &mut ChaCha8Rng) {
        let bound = 1.0 / (rows as f64).sqrt();
        let value = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound));
        self.insert(name, value);
    }

    /// Zero-initialized bias row (1, cols).
    pub fn init_bias(&mut self, name: impl Into<String>, cols: usize) {
        self.insert(name, Array2::zeros((1, cols)));
    }

    /// Layer-norm scale (ones) and shift (zeros) rows.
    pub fn init_layer_norm(&mut self, prefix: &str, cols: usize) {
        self.insert(format!("{prefix}.gamma"), Array2::ones((1, cols)));
        self.insert(format!("{prefix}.beta"), Array2::zeros((1, cols)));
    }
}
