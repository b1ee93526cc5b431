//! Reverse-mode automatic differentiation over 2-D `f64` arrays.
//!
//! Training needs exact gradients of a scalar loss with respect to every
//! parameter matrix. A tape records each forward operation eagerly;
//! [`Tape::backward`] walks it once in reverse, accumulating gradients
//! into the leaves marked as parameters. Values are materialized during
//! the forward pass, so intermediates (attention maps in particular) can
//! be read back afterwards.
//!
//! The op set is exactly what the network needs: dense products, row
//! broadcasts, rectifier, row softmax, per-row layer norm, pooling,
//! concatenation, sliding windows (the im2col half of a 1-D
//! convolution), and binary cross-entropy on class probabilities.

use std::collections::BTreeMap;

use ndarray::{concatenate, Array2, Axis};

use crate::error::{Error, Result};

/// Index of a node on the tape.
pub type NodeId = usize;

/// Named parameter gradients produced by [`Tape::backward`], keyed in
/// deterministic order.
#[derive(Debug, Clone, Default)]
pub struct Gradients(pub BTreeMap<String, Array2<f64>>);

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&Array2<f64>> {
        self.0.get(name)
    }
}

enum Op {
    Leaf {
        param: Option<String>,
    },
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    /// (n, d) plus a (1, d) row broadcast over every row.
    AddRow(NodeId, NodeId),
    Scale(NodeId, f64),
    /// Elementwise product with a constant matrix (slot masks, dropout).
    MulConst(NodeId, Array2<f64>),
    Relu(NodeId),
    RowSoftmax(NodeId),
    LayerNorm {
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        eps: f64,
    },
    /// (n, d) -> (1, d) column means (global average pooling).
    MeanRows(NodeId),
    ConcatCols(NodeId, NodeId),
    StackRows(Vec<NodeId>),
    Transpose(NodeId),
    /// im2col over the row axis: (n, c) -> (n, kernel*c) with zero
    /// padding, window t of row i reading row i + t - kernel/2.
    Windows {
        x: NodeId,
        kernel: usize,
    },
    /// Mean binary cross-entropy against the second column of an (n, 2)
    /// probability matrix; probabilities clamped to [clamp, 1-clamp].
    Bce {
        probs: NodeId,
        labels: Vec<f64>,
        clamp: f64,
    },
}

struct Node {
    op: Op,
    value: Array2<f64>,
}

/// Forward graph with recorded values.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Recorded value of a node.
    pub fn value(&self, id: NodeId) -> &Array2<f64> {
        &self.nodes[id].value
    }

    fn push(&mut self, op: Op, value: Array2<f64>) -> NodeId {
        self.nodes.push(Node { op, value });
        self.nodes.len() - 1
    }

    /// Non-trainable input.
    pub fn constant(&mut self, value: Array2<f64>) -> NodeId {
        self.push(Op::Leaf { param: None }, value)
    }

    /// Trainable leaf; gradients are exported under `name`.
    pub fn param(&mut self, name: &str, value: Array2<f64>) -> NodeId {
        self.push(
            Op::Leaf {
                param: Some(name.to_string()),
            },
            value,
        )
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ar, ac) = self.nodes[a].value.dim();
        let (br, bc) = self.nodes[b].value.dim();
        assert_eq!(ac, br, "matmul inner dims {ar}x{ac} . {br}x{bc}");
        let value = self.nodes[a].value.dot(&self.nodes[b].value);
        self.push(Op::MatMul(a, b), value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(
            self.nodes[a].value.dim(),
            self.nodes[b].value.dim(),
            "add shape mismatch"
        );
        let value = &self.nodes[a].value + &self.nodes[b].value;
        self.push(Op::Add(a, b), value)
    }

    /// `a + row` where `row` is (1, d), broadcast over the rows of `a`.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        let (_, ac) = self.nodes[a].value.dim();
        let (rr, rc) = self.nodes[row].value.dim();
        assert_eq!((rr, rc), (1, ac), "add_row expects (1, {ac})");
        let value = &self.nodes[a].value + &self.nodes[row].value;
        self.push(Op::AddRow(a, row), value)
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let value = &self.nodes[a].value * c;
        self.push(Op::Scale(a, c), value)
    }

    /// Elementwise product with a constant matrix of identical shape.
    pub fn mul_const(&mut self, a: NodeId, m: Array2<f64>) -> NodeId {
        assert_eq!(self.nodes[a].value.dim(), m.dim(), "mul_const shape");
        let value = &self.nodes[a].value * &m;
        self.push(Op::MulConst(a, m), value)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let value = self.nodes[a].value.mapv(|v| v.max(0.0));
        self.push(Op::Relu(a), value)
    }

    /// Numerically stable softmax along each row.
    pub fn row_softmax(&mut self, a: NodeId) -> NodeId {
        let x = &self.nodes[a].value;
        let mut value = x.clone();
        for mut row in value.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|v| (v - max).exp());
            let sum: f64 = row.sum();
            row.mapv_inplace(|v| v / sum);
        }
        self.push(Op::RowSoftmax(a), value)
    }

    /// Per-row layer norm with learnable (1, d) scale and shift.
    pub fn layer_norm(&mut self, x: NodeId, gamma: NodeId, beta: NodeId, eps: f64) -> NodeId {
        let (_, d) = self.nodes[x].value.dim();
        assert_eq!(self.nodes[gamma].value.dim(), (1, d), "layer_norm gamma");
        assert_eq!(self.nodes[beta].value.dim(), (1, d), "layer_norm beta");
        let xv = &self.nodes[x].value;
        let mut value = xv.clone();
        for mut row in value.rows_mut() {
            let (mu, inv) = row_norm_stats(row.as_slice().unwrap(), eps);
            row.mapv_inplace(|v| (v - mu) * inv);
        }
        value = &value * &self.nodes[gamma].value + &self.nodes[beta].value;
        self.push(Op::LayerNorm { x, gamma, beta, eps }, value)
    }

    /// Column means: (n, d) -> (1, d).
    pub fn mean_rows(&mut self, a: NodeId) -> NodeId {
        let (n, d) = self.nodes[a].value.dim();
        assert!(n > 0, "mean_rows on empty matrix");
        let mean = self.nodes[a].value.mean_axis(Axis(0)).unwrap();
        let value = mean.into_shape_with_order((1, d)).unwrap();
        self.push(Op::MeanRows(a), value)
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(
            self.nodes[a].value.nrows(),
            self.nodes[b].value.nrows(),
            "concat_cols row count"
        );
        let value = concatenate(
            Axis(1),
            &[self.nodes[a].value.view(), self.nodes[b].value.view()],
        )
        .unwrap();
        self.push(Op::ConcatCols(a, b), value)
    }

    pub fn stack_rows(&mut self, ids: &[NodeId]) -> NodeId {
        assert!(!ids.is_empty(), "stack_rows needs inputs");
        let views: Vec<_> = ids.iter().map(|&id| self.nodes[id].value.view()).collect();
        let value = concatenate(Axis(0), &views).unwrap();
        self.push(Op::StackRows(ids.to_vec()), value)
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let value = self.nodes[a].value.t().to_owned();
        self.push(Op::Transpose(a), value)
    }

    /// Sliding windows along the row axis with zero padding; kernel must
    /// be odd so output rows align with input rows.
    pub fn windows(&mut self, x: NodeId, kernel: usize) -> NodeId {
        assert!(kernel % 2 == 1 && kernel >= 1, "kernel must be odd");
        let (n, c) = self.nodes[x].value.dim();
        let pad = kernel / 2;
        let mut value = Array2::zeros((n, kernel * c));
        for i in 0..n {
            for t in 0..kernel {
                let src = i as isize + t as isize - pad as isize;
                if src < 0 || src >= n as isize {
                    continue;
                }
                for j in 0..c {
                    value[(i, t * c + j)] = self.nodes[x].value[(src as usize, j)];
                }
            }
        }
        self.push(Op::Windows { x, kernel }, value)
    }

    /// Mean binary cross-entropy; `labels[i]` in {0, 1} scores row `i`'s
    /// second-column probability. Output is (1, 1).
    pub fn binary_cross_entropy(
        &mut self,
        probs: NodeId,
        labels: Vec<f64>,
        clamp: f64,
    ) -> Result<NodeId> {
        let (n, c) = self.nodes[probs].value.dim();
        if n == 0 || labels.is_empty() {
            return Err(Error::validation("cross-entropy over an empty batch"));
        }
        if c != 2 || labels.len() != n {
            return Err(Error::Shape {
                context: "binary cross-entropy".into(),
                expected: format!("({n}, 2) probabilities and {n} labels"),
                actual: format!("({n}, {c}) and {} labels", labels.len()),
            });
        }
        let mut total = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            let p = self.nodes[probs].value[(i, 1)].clamp(clamp, 1.0 - clamp);
            total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        }
        let value = Array2::from_elem((1, 1), total / n as f64);
        Ok(self.push(Op::Bce { probs, labels, clamp }, value))
    }

    /// Gradients of the scalar at `root` with respect to every parameter
    /// leaf that feeds it.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        if self.nodes[root].value.dim() != (1, 1) {
            return Err(Error::validation(
                "backward root must be a (1, 1) scalar node",
            ));
        }
        let mut grads: Vec<Option<Array2<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root] = Some(Array2::ones((1, 1)));

        for id in (0..=root).rev() {
            let Some(g) = grads[id].clone() else { continue };
            match &self.nodes[id].op {
                Op::Leaf { .. } => {}
                Op::MatMul(a, b) => {
                    let da = g.dot(&self.nodes[*b].value.t());
                    let db = self.nodes[*a].value.t().dot(&g);
                    accumulate(&mut grads[*a], da);
                    accumulate(&mut grads[*b], db);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads[*a], g.clone());
                    accumulate(&mut grads[*b], g);
                }
                Op::AddRow(a, row) => {
                    let d = g.ncols();
                    let col_sum = g
                        .sum_axis(Axis(0))
                        .into_shape_with_order((1, d))
                        .unwrap();
                    accumulate(&mut grads[*a], g);
                    accumulate(&mut grads[*row], col_sum);
                }
                Op::Scale(a, c) => accumulate(&mut grads[*a], &g * *c),
                Op::MulConst(a, m) => accumulate(&mut grads[*a], &g * m),
                Op::Relu(a) => {
                    let mask = self.nodes[*a].value.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                    accumulate(&mut grads[*a], &g * &mask);
                }
                Op::RowSoftmax(a) => {
                    let y = &self.nodes[id].value;
                    let mut dx = g.clone();
                    for (mut drow, yrow) in dx.rows_mut().into_iter().zip(y.rows()) {
                        let dot: f64 = drow.iter().zip(yrow.iter()).map(|(d, y)| d * y).sum();
                        for (d, y) in drow.iter_mut().zip(yrow.iter()) {
                            *d = y * (*d - dot);
                        }
                    }
                    accumulate(&mut grads[*a], dx);
                }
                Op::LayerNorm { x, gamma, beta, eps } => {
                    let xv = &self.nodes[*x].value;
                    let gv = &self.nodes[*gamma].value;
                    let (n, d) = xv.dim();
                    let mut dx = Array2::zeros((n, d));
                    let mut dgamma = Array2::zeros((1, d));
                    let mut dbeta = Array2::zeros((1, d));
                    for i in 0..n {
                        let row: Vec<f64> = xv.row(i).to_vec();
                        let (mu, inv) = row_norm_stats(&row, *eps);
                        let xhat: Vec<f64> = row.iter().map(|&v| (v - mu) * inv).collect();
                        let mut m1 = 0.0; // mean of d_xhat
                        let mut m2 = 0.0; // mean of d_xhat * xhat
                        for j in 0..d {
                            let dxh = g[(i, j)] * gv[(0, j)];
                            dgamma[(0, j)] += g[(i, j)] * xhat[j];
                            dbeta[(0, j)] += g[(i, j)];
                            m1 += dxh;
                            m2 += dxh * xhat[j];
                        }
                        m1 /= d as f64;
                        m2 /= d as f64;
                        for j in 0..d {
                            let dxh = g[(i, j)] * gv[(0, j)];
                            dx[(i, j)] = inv * (dxh - m1 - xhat[j] * m2);
                        }
                    }
                    accumulate(&mut grads[*x], dx);
                    accumulate(&mut grads[*gamma], dgamma);
                    accumulate(&mut grads[*beta], dbeta);
                }
                Op::MeanRows(a) => {
                    let (n, d) = self.nodes[*a].value.dim();
                    let mut dx = Array2::zeros((n, d));
                    for i in 0..n {
                        for j in 0..d {
                            dx[(i, j)] = g[(0, j)] / n as f64;
                        }
                    }
                    accumulate(&mut grads[*a], dx);
                }
                Op::ConcatCols(a, b) => {
                    let ac = self.nodes[*a].value.ncols();
                    let da = g.slice(ndarray::s![.., 0..ac]).to_owned();
                    let db = g.slice(ndarray::s![.., ac..]).to_owned();
                    accumulate(&mut grads[*a], da);
                    accumulate(&mut grads[*b], db);
                }
                Op::StackRows(ids) => {
                    let mut offset = 0;
                    for &src in ids {
                        let rows = self.nodes[src].value.nrows();
                        let dsrc = g.slice(ndarray::s![offset..offset + rows, ..]).to_owned();
                        accumulate(&mut grads[src], dsrc);
                        offset += rows;
                    }
                }
                Op::Transpose(a) => accumulate(&mut grads[*a], g.t().to_owned()),
                Op::Windows { x, kernel } => {
                    let (n, c) = self.nodes[*x].value.dim();
                    let pad = kernel / 2;
                    let mut dx = Array2::zeros((n, c));
                    for i in 0..n {
                        for t in 0..*kernel {
                            let src = i as isize + t as isize - pad as isize;
                            if src < 0 || src >= n as isize {
                                continue;
                            }
                            for j in 0..c {
                                dx[(src as usize, j)] += g[(i, t * c + j)];
                            }
                        }
                    }
                    accumulate(&mut grads[*x], dx);
                }
                Op::Bce { probs, labels, clamp } => {
                    let pv = &self.nodes[*probs].value;
                    let (n, _) = pv.dim();
                    let gs = g[(0, 0)];
                    let mut dp = Array2::zeros(pv.dim());
                    for (i, &y) in labels.iter().enumerate() {
                        let p = pv[(i, 1)].clamp(*clamp, 1.0 - *clamp);
                        dp[(i, 1)] = gs * (p - y) / (p * (1.0 - p)) / n as f64;
                    }
                    accumulate(&mut grads[*probs], dp);
                }
            }
        }

        let mut out = BTreeMap::new();
        for (id, node) in self.nodes.iter().enumerate() {
            if let Op::Leaf { param: Some(name) } = &node.op {
                if let Some(g) = grads[id].take() {
                    out.entry(name.clone())
                        .and_modify(|acc: &mut Array2<f64>| *acc += &g)
                        .or_insert(g);
                }
            }
        }
        Ok(Gradients(out))
    }
}

fn row_norm_stats(row: &[f64], eps: f64) -> (f64, f64) {
    let d = row.len() as f64;
    let mu = row.iter().sum::<f64>() / d;
    let var = row.iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / d;
    (mu, 1.0 / (var + eps).sqrt())
}

fn accumulate(slot: &mut Option<Array2<f64>>, delta: Array2<f64>) {
    match slot {
        Some(g) => *g += &delta,
        None => *slot = Some(delta),
    }
}
