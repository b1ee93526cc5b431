//! Adaptive-moment gradient descent over a named parameter store.

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{Gradients, ParamStore};

/// First-moment decay.
pub const BETA1: f64 = 0.9;
/// Second-moment decay.
pub const BETA2: f64 = 0.999;
/// Denominator fudge term.
pub const EPSILON: f64 = 1e-8;

/// Adaptive-moment optimizer with per-parameter running moments,
/// keyed by parameter name so the update order is deterministic.
#[derive(Debug, Clone)]
pub struct AdamOptimizer {
    learning_rate: f64,
    step_count: u64,
    first_moment: BTreeMap<String, Array2<f64>>,
    second_moment: BTreeMap<String, Array2<f64>>,
}

impl AdamOptimizer {
    pub fn new(learning_rate: f64) -> Self {
        AdamOptimizer {
            learning_rate,
            step_count: 0,
            first_moment: BTreeMap::new(),
            second_moment: BTreeMap::new(),
        }
    }

    /// Apply one update. Parameters without a gradient entry are left
    /// untouched; gradient entries without a matching parameter are an
    /// error.
    pub fn step(&mut self, params: &mut ParamStore, grads: &Gradients) -> Result<()> {
        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - BETA1.powi(t);
        let bias2 = 1.0 - BETA2.powi(t);
        for (name, grad) in &grads.0 {
            let current = params
                .get(name)
                .ok_or_else(|| {
                    Error::validation(format!("gradient for unknown parameter `{name}`"))
                })?
                .clone();
            if current.dim() != grad.dim() {
                return Err(Error::validation(format!(
                    "gradient shape {:?} does not match parameter `{name}` shape {:?}",
                    grad.dim(),
                    current.dim()
                )));
            }
            let m = self
                .first_moment
                .entry(name.clone())
                .or_insert_with(|| Array2::zeros(grad.dim()));
            let v = self
                .second_moment
                .entry(name.clone())
                .or_insert_with(|| Array2::zeros(grad.dim()));
            *m = &*m * BETA1 + grad * (1.0 - BETA1);
            *v = &*v * BETA2 + &(grad * grad) * (1.0 - BETA2);
            let m_hat = &*m / bias1;
            let v_hat = &*v / bias2;
            let step = m_hat / (v_hat.mapv(f64::sqrt) + EPSILON) * self.learning_rate;
            params.set(name, current - step)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(name: &str, value: Array2<f64>) -> ParamStore {
        let mut store = ParamStore::new();
        store.insert(name, value);
        store
    }

    fn grads_with(name: &str, value: Array2<f64>) -> Gradients {
        let mut map = BTreeMap::new();
        map.insert(name.to_string(), value);
        Gradients(map)
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // With fresh moments, the bias-corrected update is
        // lr * g / (|g| + eps), i.e. almost exactly lr in magnitude.
        let mut params = store_with("w", ndarray::array![[1.0, -2.0]]);
        let grads = grads_with("w", ndarray::array![[0.5, -0.25]]);
        let mut opt = AdamOptimizer::new(0.1);
        opt.step(&mut params, &grads).unwrap();
        let w = params.get("w").unwrap();
        assert!((w[[0, 0]] - (1.0 - 0.1)).abs() < 1e-6);
        assert!((w[[0, 1]] - (-2.0 + 0.1)).abs() < 1e-6);
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let before = ndarray::array![[3.0, 4.0], [5.0, 6.0]];
        let mut params = store_with("w", before.clone());
        let grads = grads_with("w", ndarray::array![[1.0, 1.0], [1.0, 1.0]]);
        let mut opt = AdamOptimizer::new(0.0);
        opt.step(&mut params, &grads).unwrap();
        opt.step(&mut params, &grads).unwrap();
        assert_eq!(params.get("w").unwrap(), &before);
    }

    #[test]
    fn descends_a_quadratic() {
        // Minimize (w - 3)^2 by feeding its gradient 2(w - 3).
        let mut params = store_with("w", ndarray::array![[0.0]]);
        let mut opt = AdamOptimizer::new(0.05);
        for _ in 0..2000 {
            let w = params.get("w").unwrap()[[0, 0]];
            let grads = grads_with("w", ndarray::array![[2.0 * (w - 3.0)]]);
            opt.step(&mut params, &grads).unwrap();
        }
        let w = params.get("w").unwrap()[[0, 0]];
        assert!((w - 3.0).abs() < 1e-2, "converged to {w}");
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        let mut params = store_with("w", ndarray::array![[1.0]]);
        let grads = grads_with("other", ndarray::array![[1.0]]);
        let mut opt = AdamOptimizer::new(0.1);
        assert!(opt.step(&mut params, &grads).is_err());
    }
}
