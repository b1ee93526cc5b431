//! The attention classifier.
//!
//! Data flow per interview: each modality's slot-aligned feature matrix
//! is projected by a stack of 1-D convolutions over the slot axis to a
//! common width (`d_model`), passed through question-aware
//! self-attention with a residual connection, exchanged pairwise through
//! bidirectional cross-modal attention, fused by layer-norm +
//! concatenation + global average pooling, and classified by a dropout +
//! fully-connected softmax head. Gradients come from the reverse-mode
//! tape in [`tape`].

pub mod network;
pub mod params;
pub mod tape;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Modality;

pub use network::{
    init_params, AttentionMaps, GraphBuilder, InterviewForward, MapKind, ModalityInput,
    NetworkInput,
};
pub use params::ParamStore;
pub use tape::{Gradients, NodeId, Tape};

/// Probability clamp used inside the cross-entropy loss.
pub const LOSS_CLAMP: f64 = 1e-7;
/// Layer-norm variance epsilon.
pub const LAYER_NORM_EPS: f64 = 1e-5;
/// Number of output classes (normal, depression).
pub const N_CLASSES: usize = 2;

/// One 1-D convolution layer over the slot axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayerSpec {
    /// Odd window width over adjacent slots.
    pub kernel: usize,
    /// Output channel count.
    pub channels: usize,
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Common projected channel width.
    pub d_model: usize,
    /// Attention heads; must divide `d_model`.
    pub n_heads: usize,
    /// Convolutional projector; the last layer must emit `d_model`
    /// channels.
    pub conv_stack: Vec<ConvLayerSpec>,
    /// Dropout probability on the fused vector (training only).
    pub dropout_rate: f64,
    /// Slot-sequence length (85 for real interviews; smaller in tests).
    pub seq_len: usize,
    /// Input feature width per modality.
    pub input_dims: BTreeMap<Modality, usize>,
    /// When set, attention scores to absent key slots are suppressed.
    /// Off by default: absent slots participate as zero vectors.
    pub key_mask: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::with_d_model(4, 2)
    }
}

impl ModelConfig {
    /// Defaults with a chosen width: conv stack (16, d) kernels 3,
    /// dropout 0.5, full 85-slot sequences, real modality widths.
    pub fn with_d_model(d_model: usize, n_heads: usize) -> Self {
        ModelConfig {
            d_model,
            n_heads,
            conv_stack: vec![
                ConvLayerSpec { kernel: 3, channels: 16 },
                ConvLayerSpec { kernel: 3, channels: d_model },
            ],
            dropout_rate: 0.5,
            seq_len: crate::features::SLOT_COUNT,
            input_dims: Modality::ALL
                .iter()
                .map(|&m| (m, m.dim()))
                .collect(),
            key_mask: false,
        }
    }

    /// Per-head key width.
    pub fn d_head(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.n_heads == 0 {
            return Err(Error::validation("d_model and n_heads must be positive"));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::validation(format!(
                "n_heads {} must divide d_model {}",
                self.n_heads, self.d_model
            )));
        }
        if self.conv_stack.is_empty() {
            return Err(Error::validation("conv_stack must have at least one layer"));
        }
        for layer in &self.conv_stack {
            if layer.kernel % 2 == 0 || layer.kernel == 0 {
                return Err(Error::validation(format!(
                    "conv kernel {} must be odd",
                    layer.kernel
                )));
            }
            if layer.channels == 0 {
                return Err(Error::validation("conv channels must be positive"));
            }
        }
        let last = self.conv_stack.last().unwrap();
        if last.channels != self.d_model {
            return Err(Error::validation(format!(
                "last conv layer emits {} channels but d_model is {}",
                last.channels, self.d_model
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::validation("dropout_rate must be in [0, 1)"));
        }
        if self.seq_len == 0 {
            return Err(Error::validation("seq_len must be positive"));
        }
        for (&m, &dim) in &self.input_dims {
            if dim == 0 {
                return Err(Error::validation(format!("{m} input width must be positive")));
            }
        }
        Ok(())
    }
}

/// Which architectural pieces are active (the ablation axes that change
/// the parameter set).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkTopology {
    /// Modalities the network consumes; non-empty.
    pub modalities: BTreeSet<Modality>,
    /// Question-aware self-attention stage.
    pub qa_module: bool,
    /// Bidirectional cross-modal attention stage; with it off, each
    /// modality is layer-normed, pooled, and concatenated for the head.
    pub cross_attention: bool,
}

impl Default for NetworkTopology {
    fn default() -> Self {
        NetworkTopology {
            modalities: Modality::ALL.iter().copied().collect(),
            qa_module: true,
            cross_attention: true,
        }
    }
}

/// Canonical pair order for cross-modal attention and fusion.
pub const PAIR_ORDER: [(Modality, Modality); 3] = [
    (Modality::Audio, Modality::Visual),
    (Modality::Visual, Modality::Text),
    (Modality::Text, Modality::Audio),
];

impl NetworkTopology {
    pub fn unimodal(modality: Modality) -> Self {
        NetworkTopology {
            modalities: [modality].into_iter().collect(),
            qa_module: true,
            cross_attention: true,
        }
    }

    pub fn with_modalities(modalities: impl IntoIterator<Item = Modality>) -> Self {
        NetworkTopology {
            modalities: modalities.into_iter().collect(),
            ..NetworkTopology::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modalities.is_empty() {
            return Err(Error::validation("at least one modality must be selected"));
        }
        Ok(())
    }

    /// Cross-attention pairs active under this topology, in canonical
    /// order.
    pub fn pairs(&self) -> Vec<(Modality, Modality)> {
        PAIR_ORDER
            .iter()
            .copied()
            .filter(|(a, b)| self.modalities.contains(a) && self.modalities.contains(b))
            .collect()
    }

    /// Does the cross-modal stage actually run? Needs the flag plus at
    /// least two modalities.
    pub fn cross_attention_active(&self) -> bool {
        self.cross_attention && self.modalities.len() >= 2
    }

    /// Width of the fused vector entering the classifier head.
    pub fn head_input_width(&self, config: &ModelConfig) -> usize {
        if self.cross_attention_active() {
            2 * config.d_model
        } else {
            config.d_model * self.modalities.len()
        }
    }
}
