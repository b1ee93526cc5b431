//! Forward-graph construction for the attention classifier.
//!
//! A [`GraphBuilder`] wires one or more interviews onto a [`Tape`]
//! against a shared [`ParamStore`], returning node ids for the class
//! probabilities and references to every attention map so they can be
//! read back for reports. Parameter naming is stable:
//!
//! * `proj.{modality}.c{i}.w` / `.b` — conv projector layers
//! * `qa.{modality}.h{h}.wq|wk|wv|bq|bk|bv`, `qa.{modality}.wo|bo`
//! * `cross.{query}_{key}.…` — one block per ordered direction
//! * `fuse.{query}_{key}.gamma|beta` — layer norms before fusion
//!   (`fuse.{modality}.…` when cross-attention is off)
//! * `head.w` / `head.b` — classifier head

use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{EmbeddedInterview, Modality};

use super::params::ParamStore;
use super::tape::{Gradients, NodeId, Tape};
use super::{ModelConfig, NetworkTopology, LAYER_NORM_EPS, LOSS_CLAMP, N_CLASSES};

/// Additive score suppressing attention to an absent key slot.
const KEY_MASK_SCORE: f64 = -1e30;

/// One modality's network-ready input: (seq_len × input_dim) matrix and
/// per-slot presence mask.
#[derive(Debug, Clone)]
pub struct ModalityInput {
    pub matrix: Array2<f64>,
    pub mask: Vec<bool>,
}

/// All inputs for one interview, keyed by modality.
#[derive(Debug, Clone, Default)]
pub struct NetworkInput {
    pub per_modality: BTreeMap<Modality, ModalityInput>,
}

impl NetworkInput {
    /// Extract the modalities a topology needs from an embedded
    /// interview.
    pub fn from_interview(interview: &EmbeddedInterview, topology: &NetworkTopology) -> Self {
        let mut per_modality = BTreeMap::new();
        for &m in &topology.modalities {
            let f = interview.modality(m);
            per_modality.insert(
                m,
                ModalityInput {
                    matrix: f.matrix.clone(),
                    mask: f.mask.clone(),
                },
            );
        }
        NetworkInput { per_modality }
    }
}

/// What an attention map describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    SelfAttention(Modality),
    Cross { query: Modality, key: Modality },
}

/// Handle to one recorded attention map on the tape.
#[derive(Debug, Clone, Copy)]
pub struct MapRef {
    pub kind: MapKind,
    pub head: usize,
    pub node: NodeId,
}

/// Extracted attention maps for one interview, per head in order.
#[derive(Debug, Clone, Default)]
pub struct AttentionMaps {
    pub self_maps: BTreeMap<Modality, Vec<Array2<f64>>>,
    pub cross_maps: BTreeMap<(Modality, Modality), Vec<Array2<f64>>>,
}

/// Node handles produced by one interview's forward pass.
#[derive(Debug, Clone)]
pub struct InterviewForward {
    /// (1, 2) class probabilities.
    pub probs: NodeId,
    /// Fused representation entering the head.
    pub fused: NodeId,
    pub maps: Vec<MapRef>,
}

/// Create and seed every parameter the (config, topology) pair uses.
/// Weights are symmetric-uniform fan-in scaled; biases zero; layer-norm
/// scales one, shifts zero. Creation order is fixed, so a seed fully
/// determines the result.
pub fn init_params(
    config: &ModelConfig,
    topology: &NetworkTopology,
    seed: u64,
) -> Result<ParamStore> {
    config.validate()?;
    topology.validate()?;
    for &m in &topology.modalities {
        if !config.input_dims.contains_key(&m) {
            return Err(Error::validation(format!("no input width configured for {m}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    for &m in &topology.modalities {
        let mut c_in = config.input_dims[&m];
        for (i, layer) in config.conv_stack.iter().enumerate() {
            store.init_weight(
                format!("proj.{m}.c{i}.w"),
                layer.kernel * c_in,
                layer.channels,
                &mut rng,
            );
            store.init_bias(format!("proj.{m}.c{i}.b"), layer.channels);
            c_in = layer.channels;
        }
    }
    if topology.qa_module {
        for &m in &topology.modalities {
            init_attention_block(&mut store, &format!("qa.{m}"), config, &mut rng);
        }
    }
    if topology.cross_attention_active() {
        for (m1, m2) in topology.pairs() {
            init_attention_block(&mut store, &format!("cross.{m1}_{m2}"), config, &mut rng);
            init_attention_block(&mut store, &format!("cross.{m2}_{m1}"), config, &mut rng);
        }
        for (m1, m2) in topology.pairs() {
            store.init_layer_norm(&format!("fuse.{m1}_{m2}"), config.d_model);
            store.init_layer_norm(&format!("fuse.{m2}_{m1}"), config.d_model);
        }
    } else {
        for &m in &topology.modalities {
            store.init_layer_norm(&format!("fuse.{m}"), config.d_model);
        }
    }
    store.init_weight("head.w", topology.head_input_width(config), N_CLASSES, &mut rng);
    store.init_bias("head.b", N_CLASSES);
    Ok(store)
}

fn init_attention_block(
    store: &mut ParamStore,
    prefix: &str,
    config: &ModelConfig,
    rng: &mut ChaCha8Rng,
) {
    let d = config.d_model;
    let dh = config.d_head();
    for h in 0..config.n_heads {
        store.init_weight(format!("{prefix}.h{h}.wq"), d, dh, rng);
        store.init_bias(format!("{prefix}.h{h}.bq"), dh);
        store.init_weight(format!("{prefix}.h{h}.wk"), d, dh, rng);
        store.init_bias(format!("{prefix}.h{h}.bk"), dh);
        store.init_weight(format!("{prefix}.h{h}.wv"), d, dh, rng);
        store.init_bias(format!("{prefix}.h{h}.bv"), dh);
    }
    store.init_weight(format!("{prefix}.wo"), d, d, rng);
    store.init_bias(format!("{prefix}.bo"), d);
}

/// Builds forward graphs for one batch on a shared tape.
pub struct GraphBuilder<'a> {
    config: &'a ModelConfig,
    topology: &'a NetworkTopology,
    params: &'a ParamStore,
    tape: Tape,
    param_nodes: HashMap<String, NodeId>,
}

impl<'a> GraphBuilder<'a> {
    pub fn new(
        config: &'a ModelConfig,
        topology: &'a NetworkTopology,
        params: &'a ParamStore,
    ) -> Result<Self> {
        config.validate()?;
        topology.validate()?;
        Ok(GraphBuilder {
            config,
            topology,
            params,
            tape: Tape::new(),
            param_nodes: HashMap::new(),
        })
    }

    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    pub fn tape_mut(&mut self) -> &mut Tape {
        &mut self.tape
    }

    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        self.tape.backward(root)
    }

    /// Leaf node for a named parameter (created once, then shared).
    fn param_node(&mut self, name: &str) -> Result<NodeId> {
        if let Some(&id) = self.param_nodes.get(name) {
            return Ok(id);
        }
        let value = self.params.get(name).ok_or_else(|| {
            Error::validation(format!(
                "parameter {name} missing from store (topology mismatch?)"
            ))
        })?;
        let id = self.tape.param(name, value.clone());
        self.param_nodes.insert(name.to_string(), id);
        Ok(id)
    }

    /// Conv projection of one modality to (seq_len × d_model); absent
    /// slots are re-zeroed after the stack.
    pub fn project(&mut self, modality: Modality, input: &ModalityInput) -> Result<NodeId> {
        let expected = *self.config.input_dims.get(&modality).ok_or_else(|| {
            Error::validation(format!("no input width configured for {modality}"))
        })?;
        let (n, d) = input.matrix.dim();
        if n != self.config.seq_len || d != expected {
            return Err(Error::Shape {
                context: format!("{modality} projection input"),
                expected: format!("({}, {})", self.config.seq_len, expected),
                actual: format!("({n}, {d})"),
            });
        }
        if input.mask.len() != n {
            return Err(Error::Shape {
                context: format!("{modality} presence mask"),
                expected: format!("{n}"),
                actual: format!("{}", input.mask.len()),
            });
        }
        if !input.matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("{modality} projection input"),
            });
        }
        let mut x = self.tape.constant(input.matrix.clone());
        for (i, layer) in self.config.conv_stack.iter().enumerate() {
            let w = self.param_node(&format!("proj.{modality}.c{i}.w"))?;
            let b = self.param_node(&format!("proj.{modality}.c{i}.b"))?;
            let win = self.tape.windows(x, layer.kernel);
            let t = self.tape.matmul(win, w);
            let t = self.tape.add_row(t, b);
            x = self.tape.relu(t);
        }
        let mask_matrix = Array2::from_shape_fn((n, self.config.d_model), |(i, _)| {
            if input.mask[i] {
                1.0
            } else {
                0.0
            }
        });
        Ok(self.tape.mul_const(x, mask_matrix))
    }

    /// Scaled multi-head attention with a residual-free output; returns
    /// the output projection and one map per head.
    fn attention_block(
        &mut self,
        prefix: &str,
        q_in: NodeId,
        k_in: NodeId,
        v_in: NodeId,
        key_mask: Option<&[bool]>,
        kind: MapKind,
    ) -> Result<(NodeId, Vec<MapRef>)> {
        let scale = 1.0 / (self.config.d_head() as f64).sqrt();
        let q_rows = self.tape.value(q_in).nrows();
        let score_bias = key_mask.map(|mask| {
            Array2::from_shape_fn((q_rows, mask.len()), |(_, j)| {
                if mask[j] {
                    0.0
                } else {
                    KEY_MASK_SCORE
                }
            })
        });
        let mut heads = Vec::with_capacity(self.config.n_heads);
        let mut maps = Vec::with_capacity(self.config.n_heads);
        for h in 0..self.config.n_heads {
            let wq = self.param_node(&format!("{prefix}.h{h}.wq"))?;
            let bq = self.param_node(&format!("{prefix}.h{h}.bq"))?;
            let wk = self.param_node(&format!("{prefix}.h{h}.wk"))?;
            let bk = self.param_node(&format!("{prefix}.h{h}.bk"))?;
            let wv = self.param_node(&format!("{prefix}.h{h}.wv"))?;
            let bv = self.param_node(&format!("{prefix}.h{h}.bv"))?;
            let q = self.tape.matmul(q_in, wq);
            let q = self.tape.add_row(q, bq);
            let k = self.tape.matmul(k_in, wk);
            let k = self.tape.add_row(k, bk);
            let v = self.tape.matmul(v_in, wv);
            let v = self.tape.add_row(v, bv);
            let kt = self.tape.transpose(k);
            let scores = self.tape.matmul(q, kt);
            let mut scores = self.tape.scale(scores, scale);
            if let Some(bias) = &score_bias {
                let b = self.tape.constant(bias.clone());
                scores = self.tape.add(scores, b);
            }
            let map = self.tape.row_softmax(scores);
            maps.push(MapRef { kind, head: h, node: map });
            heads.push(self.tape.matmul(map, v));
        }
        let mut concat = heads[0];
        for &head in &heads[1..] {
            concat = self.tape.concat_cols(concat, head);
        }
        let wo = self.param_node(&format!("{prefix}.wo"))?;
        let bo = self.param_node(&format!("{prefix}.bo"))?;
        let t = self.tape.matmul(concat, wo);
        let out = self.tape.add_row(t, bo);
        Ok((out, maps))
    }

    /// Question-aware self-attention with residual:
    /// `MultiHead(U, U, U) + U`.
    pub fn question_aware_encode(
        &mut self,
        modality: Modality,
        u: NodeId,
        key_mask: Option<&[bool]>,
    ) -> Result<(NodeId, Vec<MapRef>)> {
        let (out, maps) = self.attention_block(
            &format!("qa.{modality}"),
            u,
            u,
            u,
            key_mask,
            MapKind::SelfAttention(modality),
        )?;
        Ok((self.tape.add(out, u), maps))
    }

    /// Bidirectional cross-modal attention:
    /// `MultiHead(U1, U2, U2) + U1` and `MultiHead(U2, U1, U1) + U2`.
    pub fn cross_modal_attend(
        &mut self,
        m1: Modality,
        m2: Modality,
        u1: NodeId,
        u2: NodeId,
        mask1: Option<&[bool]>,
        mask2: Option<&[bool]>,
    ) -> Result<(NodeId, NodeId, Vec<MapRef>)> {
        let (o12, mut maps12) = self.attention_block(
            &format!("cross.{m1}_{m2}"),
            u1,
            u2,
            u2,
            mask2,
            MapKind::Cross { query: m1, key: m2 },
        )?;
        let out12 = self.tape.add(o12, u1);
        let (o21, mut maps21) = self.attention_block(
            &format!("cross.{m2}_{m1}"),
            u2,
            u1,
            u1,
            mask1,
            MapKind::Cross { query: m2, key: m1 },
        )?;
        let out21 = self.tape.add(o21, u2);
        maps12.append(&mut maps21);
        Ok((out12, out21, maps12))
    }

    /// Fusion over cross-attended pairs: per pair, layer-norm both
    /// directions, concatenate channels, pool over slots; then sum the
    /// pair vectors. Directions are keyed (query, key).
    pub fn fuse_pairs(
        &mut self,
        outputs: &BTreeMap<(Modality, Modality), NodeId>,
    ) -> Result<NodeId> {
        let pairs = self.topology.pairs();
        if pairs.is_empty() {
            return Err(Error::validation("fusion over pairs needs >= 2 modalities"));
        }
        let mut total: Option<NodeId> = None;
        for (m1, m2) in pairs {
            let &fwd = outputs
                .get(&(m1, m2))
                .ok_or_else(|| Error::validation(format!("missing pair output {m1}->{m2}")))?;
            let &bwd = outputs
                .get(&(m2, m1))
                .ok_or_else(|| Error::validation(format!("missing pair output {m2}->{m1}")))?;
            let ln_fwd = self.layer_norm_named(&format!("fuse.{m1}_{m2}"), fwd)?;
            let ln_bwd = self.layer_norm_named(&format!("fuse.{m2}_{m1}"), bwd)?;
            let cat = self.tape.concat_cols(ln_fwd, ln_bwd);
            let pooled = self.tape.mean_rows(cat);
            total = Some(match total {
                Some(t) => self.tape.add(t, pooled),
                None => pooled,
            });
        }
        Ok(total.unwrap())
    }

    /// Fusion without cross-attention: layer-norm and pool each
    /// modality, concatenate the pooled vectors.
    pub fn fuse_modalities(&mut self, reps: &BTreeMap<Modality, NodeId>) -> Result<NodeId> {
        let mut out: Option<NodeId> = None;
        for &m in &self.topology.modalities {
            let &rep = reps
                .get(&m)
                .ok_or_else(|| Error::validation(format!("missing representation for {m}")))?;
            let ln = self.layer_norm_named(&format!("fuse.{m}"), rep)?;
            let pooled = self.tape.mean_rows(ln);
            out = Some(match out {
                Some(prev) => self.tape.concat_cols(prev, pooled),
                None => pooled,
            });
        }
        out.ok_or_else(|| Error::validation("no modalities to fuse"))
    }

    fn layer_norm_named(&mut self, prefix: &str, x: NodeId) -> Result<NodeId> {
        let gamma = self.param_node(&format!("{prefix}.gamma"))?;
        let beta = self.param_node(&format!("{prefix}.beta"))?;
        Ok(self.tape.layer_norm(x, gamma, beta, LAYER_NORM_EPS))
    }

    /// Dropout + fully-connected head + softmax. Dropout runs only in
    /// training mode and draws its mask from `rng`.
    pub fn predict(
        &mut self,
        fused: NodeId,
        training: bool,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<NodeId> {
        let width = self.topology.head_input_width(self.config);
        let dim = self.tape.value(fused).dim();
        if dim != (1, width) {
            return Err(Error::Shape {
                context: "head input".into(),
                expected: format!("(1, {width})"),
                actual: format!("{dim:?}"),
            });
        }
        let mut x = fused;
        if training && self.config.dropout_rate > 0.0 {
            let rng = rng.ok_or_else(|| {
                Error::validation("training-mode dropout needs a random source")
            })?;
            let keep = 1.0 - self.config.dropout_rate;
            let mask = Array2::from_shape_fn((1, width), |_| {
                if rng.gen_bool(keep) {
                    1.0 / keep
                } else {
                    0.0
                }
            });
            x = self.tape.mul_const(x, mask);
        }
        let w = self.param_node("head.w")?;
        let b = self.param_node("head.b")?;
        let t = self.tape.matmul(x, w);
        let logits = self.tape.add_row(t, b);
        Ok(self.tape.row_softmax(logits))
    }

    /// Full forward pass for one interview.
    pub fn forward(
        &mut self,
        input: &NetworkInput,
        training: bool,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<InterviewForward> {
        let mut projected = BTreeMap::new();
        for &m in &self.topology.modalities {
            let mi = input
                .per_modality
                .get(&m)
                .ok_or_else(|| Error::validation(format!("input missing modality {m}")))?;
            projected.insert(m, self.project(m, mi)?);
        }

        let mut maps = Vec::new();
        let mut encoded = BTreeMap::new();
        let modalities: Vec<Modality> = self.topology.modalities.iter().copied().collect();
        for m in modalities {
            let u = projected[&m];
            if self.topology.qa_module {
                let mask = self
                    .config
                    .key_mask
                    .then(|| input.per_modality[&m].mask.clone());
                let (qa, mut ms) = self.question_aware_encode(m, u, mask.as_deref())?;
                maps.append(&mut ms);
                encoded.insert(m, qa);
            } else {
                encoded.insert(m, u);
            }
        }

        let fused = if self.topology.cross_attention_active() {
            let mut outputs = BTreeMap::new();
            for (m1, m2) in self.topology.pairs() {
                let mask1 = self
                    .config
                    .key_mask
                    .then(|| input.per_modality[&m1].mask.clone());
                let mask2 = self
                    .config
                    .key_mask
                    .then(|| input.per_modality[&m2].mask.clone());
                let (o12, o21, mut ms) = self.cross_modal_attend(
                    m1,
                    m2,
                    encoded[&m1],
                    encoded[&m2],
                    mask1.as_deref(),
                    mask2.as_deref(),
                )?;
                maps.append(&mut ms);
                outputs.insert((m1, m2), o12);
                outputs.insert((m2, m1), o21);
            }
            self.fuse_pairs(&outputs)?
        } else {
            self.fuse_modalities(&encoded)?
        };

        let probs = self.predict(fused, training, rng.as_deref_mut())?;
        Ok(InterviewForward { probs, fused, maps })
    }

    /// Stack per-interview probability rows and score them with mean
    /// binary cross-entropy; `labels[i]` is 1.0 for the depression
    /// class.
    pub fn loss(&mut self, probs: &[NodeId], labels: &[f64]) -> Result<NodeId> {
        if probs.is_empty() {
            return Err(Error::validation("loss over an empty batch"));
        }
        let stacked = self.tape.stack_rows(probs);
        self.tape
            .binary_cross_entropy(stacked, labels.to_vec(), LOSS_CLAMP)
    }

    /// Read recorded attention maps back off the tape.
    pub fn extract_maps(&self, refs: &[MapRef]) -> AttentionMaps {
        let mut out = AttentionMaps::default();
        for r in refs {
            let value = self.tape.value(r.node).clone();
            match r.kind {
                MapKind::SelfAttention(m) => out.self_maps.entry(m).or_default().push(value),
                MapKind::Cross { query, key } => {
                    out.cross_maps.entry((query, key)).or_default().push(value)
                }
            }
        }
        out
    }
}
