//! Binary classification metrics for imbalanced screening data.
//!
//! Macro scores average the two classes equally; weighted scores are
//! support-weighted (so weighted recall coincides with accuracy); the
//! G-mean is the geometric mean of the two class recalls, which
//! collapses to zero as soon as either class is missed entirely.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Label;

/// Per-class precision/recall/F1 with its support.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Full metric set over one prediction list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    /// `confusion[truth][predicted]`, indexed normal = 0, depression = 1.
    pub confusion: [[usize; 2]; 2],
    /// Indexed by class: `[normal, depression]`.
    pub per_class: [ClassMetrics; 2],
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub g_mean: f64,
}

/// Fraction with a zero-denominator convention of 0.
fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Compute all metrics from (truth, predicted) pairs.
pub fn compute_metrics(pairs: &[(Label, Label)]) -> Result<Metrics> {
    if pairs.is_empty() {
        return Err(Error::validation("metrics over an empty prediction list"));
    }
    let mut confusion = [[0usize; 2]; 2];
    for &(truth, pred) in pairs {
        confusion[truth.index()][pred.index()] += 1;
    }
    Ok(metrics_from_confusion(confusion))
}

/// Metrics from a `confusion[truth][predicted]` matrix.
pub fn metrics_from_confusion(confusion: [[usize; 2]; 2]) -> Metrics {
    let total: usize = confusion.iter().flatten().sum();
    let mut per_class = [ClassMetrics {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        support: 0,
    }; 2];
    for c in 0..2 {
        let tp = confusion[c][c];
        let support = confusion[c][0] + confusion[c][1];
        let predicted = confusion[0][c] + confusion[1][c];
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        per_class[c] = ClassMetrics {
            precision,
            recall,
            f1: f1(precision, recall),
            support,
        };
    }
    let correct = confusion[0][0] + confusion[1][1];
    let accuracy = ratio(correct, total);
    let weighted = |f: fn(&ClassMetrics) -> f64| -> f64 {
        per_class
            .iter()
            .map(|c| f(c) * c.support as f64)
            .sum::<f64>()
            / total as f64
    };
    Metrics {
        confusion,
        per_class,
        accuracy,
        macro_precision: (per_class[0].precision + per_class[1].precision) / 2.0,
        macro_recall: (per_class[0].recall + per_class[1].recall) / 2.0,
        macro_f1: (per_class[0].f1 + per_class[1].f1) / 2.0,
        weighted_precision: weighted(|c| c.precision),
        weighted_recall: weighted(|c| c.recall),
        weighted_f1: weighted(|c| c.f1),
        g_mean: (per_class[0].recall * per_class[1].recall).sqrt(),
    }
}
