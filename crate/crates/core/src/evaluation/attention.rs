//! Per-question attention reporting.
//!
//! "How much attention does question k receive" is measured as the
//! column mass of the row-stochastic attention maps: for one map, sum
//! each column, average over heads, and divide by the slot count so
//! the 85 values of one interview sum to 1 (and so average 1/85).
//! Masses are then averaged over the dataset, per modality for the
//! question-attention maps and per ordered pair for the cross-modal
//! maps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::prep::prepare_interview;
use crate::features::{EmbeddedInterview, Label, SLOT_COUNT};
use crate::taxonomy::QuestionTaxonomy;
use crate::training::Checkpoint;

use super::evaluate::forward_interview;

/// One occupied slot of one interview in the drill-down.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlotDetail {
    /// 1-based question slot.
    pub slot: usize,
    /// Canonical question text for that slot.
    pub question: String,
    /// "primary" or "follow_up".
    pub role: String,
    /// Topic slot this segment elaborates (itself for primaries).
    pub topic_slot: usize,
    /// 0 for primaries, parent depth + 1 for follow-ups.
    pub depth: usize,
    /// Received attention mass per modality, from this interview's
    /// question-attention maps.
    pub received: BTreeMap<String, f64>,
}

/// Drill-down for one interview.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterviewAttention {
    pub participant_id: String,
    pub label: Option<Label>,
    pub slots: Vec<SlotDetail>,
}

/// Dataset-level attention masses plus per-interview drill-downs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttentionReport {
    pub interview_count: usize,
    /// Modality name → 85 mean received masses (question attention).
    pub self_received: BTreeMap<String, Vec<f64>>,
    /// "query->key" pair name → 85 mean received masses (cross-modal).
    pub cross_received: BTreeMap<String, Vec<f64>>,
    pub interviews: Vec<InterviewAttention>,
}

/// Column masses of one attention map stack: average the heads,
/// sum each column, normalize by the slot count.
fn received_mass(heads: &[Array2<f64>]) -> Vec<f64> {
    let n = SLOT_COUNT;
    let mut mass = vec![0.0; n];
    for map in heads {
        for i in 0..n {
            for j in 0..n {
                mass[j] += map[[i, j]];
            }
        }
    }
    let scale = 1.0 / (heads.len() as f64 * n as f64);
    for v in &mut mass {
        *v *= scale;
    }
    mass
}

fn add_into(total: &mut BTreeMap<String, Vec<f64>>, key: &str, mass: &[f64]) {
    let slot = total
        .entry(key.to_string())
        .or_insert_with(|| vec![0.0; SLOT_COUNT]);
    for (t, m) in slot.iter_mut().zip(mass) {
        *t += m;
    }
}

/// Run inference over `data` and aggregate attention masses.
pub fn attention_report(
    checkpoint: &Checkpoint,
    data: &[EmbeddedInterview],
) -> Result<AttentionReport> {
    if data.is_empty() {
        return Err(Error::validation("attention report over an empty dataset"));
    }
    let taxonomy = QuestionTaxonomy::builtin();
    let mut self_totals: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut cross_totals: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut interviews = Vec::with_capacity(data.len());

    for interview in data {
        let prepared = prepare_interview(interview, checkpoint.question_embedding)?;
        let (builder, forward) = forward_interview(checkpoint, &prepared)?;
        let maps = builder.extract_maps(&forward.maps);

        let mut per_modality: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (modality, heads) in &maps.self_maps {
            let mass = received_mass(heads);
            add_into(&mut self_totals, modality.name(), &mass);
            per_modality.insert(modality.name().to_string(), mass);
        }
        for ((query, key), heads) in &maps.cross_maps {
            let mass = received_mass(heads);
            add_into(
                &mut cross_totals,
                &format!("{}->{}", query.name(), key.name()),
                &mass,
            );
        }

        let mut slots = Vec::with_capacity(prepared.hierarchy.len());
        let mut positions = prepared.hierarchy.clone();
        positions.sort_by_key(|p| p.slot_index);
        for position in &positions {
            let question = taxonomy
                .by_index(position.slot_index)
                .map(|entry| entry.text.clone())
                .unwrap_or_default();
            let received = per_modality
                .iter()
                .map(|(name, mass)| (name.clone(), mass[position.slot_index - 1]))
                .collect();
            slots.push(SlotDetail {
                slot: position.slot_index,
                question,
                role: position.role.to_string(),
                topic_slot: position.effective_topic_slot,
                depth: position.chain_depth,
                received,
            });
        }
        interviews.push(InterviewAttention {
            participant_id: prepared.participant_id.clone(),
            label: prepared.label,
            slots,
        });
    }

    let n = data.len() as f64;
    for mass in self_totals.values_mut().chain(cross_totals.values_mut()) {
        for v in mass.iter_mut() {
            *v /= n;
        }
    }
    Ok(AttentionReport {
        interview_count: data.len(),
        self_received: self_totals,
        cross_received: cross_totals,
        interviews,
    })
}

/// Render one mass vector as a standalone SVG bar chart.
pub fn render_bar_chart_svg(title: &str, values: &[f64]) -> String {
    let width = 940.0;
    let height = 320.0;
    let margin_left = 50.0;
    let margin_bottom = 40.0;
    let margin_top = 34.0;
    let plot_w = width - margin_left - 10.0;
    let plot_h = height - margin_top - margin_bottom;
    let peak = values.iter().cloned().fold(0.0_f64, f64::max).max(1e-12);
    let bar_w = plot_w / values.len() as f64;

    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = write!(
        svg,
        r#"<rect width="{width}" height="{height}" fill="white"/><text x="{}" y="20" font-family="sans-serif" font-size="14">{}</text>"#,
        margin_left,
        xml_escape(title)
    );
    for (k, &v) in values.iter().enumerate() {
        let h = (v.max(0.0) / peak) * plot_h;
        let x = margin_left + k as f64 * bar_w;
        let y = margin_top + (plot_h - h);
        let _ = write!(
            svg,
            r##"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="#4a7ab5"/>"##,
            w = (bar_w * 0.85).max(0.5),
        );
        if (k + 1) % 10 == 0 || k == 0 {
            let _ = write!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
                x + bar_w / 2.0,
                height - margin_bottom + 14.0,
                k + 1
            );
        }
    }
    // Axis lines and the peak label.
    let _ = write!(
        svg,
        r#"<line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black"/><line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><text x="{lt:.2}" y="{t2:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{peak:.4}</text>"#,
        l = margin_left,
        t = margin_top,
        b = margin_top + plot_h,
        r = margin_left + plot_w,
        lt = margin_left - 4.0,
        t2 = margin_top + 4.0,
    );
    svg.push_str("</svg>");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::prep::QuestionEmbedding;
    use crate::features::synthetic::{generate_synthetic_corpus, SyntheticConfig};
    use crate::features::Modality;
    use crate::model::{init_params, ConvLayerSpec, ModelConfig, NetworkTopology};
    use crate::training::{CheckpointMeta, CHECKPOINT_VERSION};
    use ndarray::Array2;

    fn tiny_checkpoint(qa: bool, cross: bool) -> Checkpoint {
        let mut config = ModelConfig::with_d_model(2, 1);
        config.conv_stack = vec![ConvLayerSpec {
            kernel: 1,
            channels: 2,
        }];
        let topology = NetworkTopology {
            qa_module: qa,
            cross_attention: cross,
            ..NetworkTopology::default()
        };
        let params = init_params(&config, &topology, 2).unwrap();
        Checkpoint {
            version: CHECKPOINT_VERSION,
            model_config: config,
            topology,
            question_embedding: QuestionEmbedding::Flat,
            params,
            meta: CheckpointMeta {
                seed: 2,
                best_epoch: 0,
                best_val_macro_f1: 0.0,
                history: vec![],
                split: Default::default(),
            },
        }
    }

    fn corpus(n: usize) -> Vec<EmbeddedInterview> {
        generate_synthetic_corpus(&SyntheticConfig {
            n_depressed: n / 2,
            n_normal: n - n / 2,
            seed: 6,
            ..SyntheticConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn masses_sum_to_one_per_modality_and_pair() {
        let checkpoint = tiny_checkpoint(true, true);
        let report = attention_report(&checkpoint, &corpus(4)).unwrap();
        assert_eq!(report.interview_count, 4);
        assert_eq!(report.self_received.len(), 3);
        assert_eq!(report.cross_received.len(), 6);
        for (name, mass) in report.self_received.iter().chain(&report.cross_received) {
            assert_eq!(mass.len(), SLOT_COUNT);
            let sum: f64 = mass.iter().sum();
            assert!(
                (sum - 1.0).abs() < 1e-9,
                "{name} masses sum to {sum}, expected 1"
            );
        }
    }

    #[test]
    fn zeroed_query_weights_give_uniform_masses() {
        let mut checkpoint = tiny_checkpoint(true, true);
        let names: Vec<String> = checkpoint.params.names().cloned().collect();
        for name in names {
            if name.ends_with(".wq") {
                let dim = checkpoint.params.get(&name).unwrap().dim();
                checkpoint.params.set(&name, Array2::zeros(dim)).unwrap();
            }
            if name.ends_with(".bq") {
                let dim = checkpoint.params.get(&name).unwrap().dim();
                checkpoint.params.set(&name, Array2::zeros(dim)).unwrap();
            }
        }
        let report = attention_report(&checkpoint, &corpus(2)).unwrap();
        let uniform = 1.0 / SLOT_COUNT as f64;
        for mass in report.self_received.values() {
            for &v in mass {
                assert!((v - uniform).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn drill_down_carries_question_text_and_hierarchy() {
        let checkpoint = tiny_checkpoint(true, true);
        let data = corpus(2);
        let report = attention_report(&checkpoint, &data).unwrap();
        let taxonomy = QuestionTaxonomy::builtin();
        let first = &report.interviews[0];
        assert_eq!(first.participant_id, data[0].participant_id);
        assert!(!first.slots.is_empty());
        for detail in &first.slots {
            let entry = taxonomy.by_index(detail.slot).unwrap();
            assert_eq!(detail.question, entry.text);
            assert!(detail.role == "primary" || detail.role == "follow_up");
            if detail.role == "primary" {
                assert_eq!(detail.topic_slot, detail.slot);
                assert_eq!(detail.depth, 0);
            }
            assert_eq!(detail.received.len(), 3);
        }
    }

    #[test]
    fn topology_prunes_report_sections() {
        let no_qa = attention_report(&tiny_checkpoint(false, true), &corpus(2)).unwrap();
        assert!(no_qa.self_received.is_empty());
        assert_eq!(no_qa.cross_received.len(), 6);
        let no_cross = attention_report(&tiny_checkpoint(true, false), &corpus(2)).unwrap();
        assert_eq!(no_cross.self_received.len(), 3);
        assert!(no_cross.cross_received.is_empty());
    }

    #[test]
    fn report_serializes_to_json_with_stable_keys() {
        let checkpoint = tiny_checkpoint(true, true);
        let report = attention_report(&checkpoint, &corpus(2)).unwrap();
        let a = serde_json::to_string(&report).unwrap();
        let report2 = attention_report(&checkpoint, &corpus(2)).unwrap();
        let b = serde_json::to_string(&report2).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"audio->visual\""));
    }

    #[test]
    fn svg_chart_renders_one_bar_per_slot() {
        let values = vec![1.0 / SLOT_COUNT as f64; SLOT_COUNT];
        let svg = render_bar_chart_svg("audio received attention", &values);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>"));
        // One background rect plus one bar per slot.
        assert_eq!(svg.matches("<rect").count(), 1 + SLOT_COUNT);
        assert!(svg.contains("audio received attention"));
    }

    #[test]
    fn trained_audio_attention_ranks_signal_slots_in_top_decile() {
        // Two signal-bearing slots out of 85; after training, the
        // audio question-attention map should send those columns more
        // mass than almost all others. (Deterministic: fixed seeds.)
        use crate::training::{split_corpus, train, TrainConfig};
        let corpus = generate_synthetic_corpus(&SyntheticConfig {
            n_depressed: 10,
            n_normal: 20,
            seed: 7,
            signal_strength: 6.0,
            signal_slots: vec![10, 20],
            ..SyntheticConfig::default()
        })
        .unwrap();
        let split = split_corpus(&corpus, 7).unwrap();
        let checkpoint = train(
            &ModelConfig::default(),
            &NetworkTopology::default(),
            QuestionEmbedding::Flat,
            &TrainConfig {
                seed: 7,
                epochs: 12,
                ..TrainConfig::default()
            },
            &split,
        )
        .unwrap();
        let report = attention_report(&checkpoint, &split.test).unwrap();
        let mass = &report.self_received["audio"];
        let mut ranked: Vec<usize> = (1..=SLOT_COUNT).collect();
        ranked.sort_by(|&a, &b| mass[b - 1].partial_cmp(&mass[a - 1]).unwrap());
        let decile = SLOT_COUNT / 10 + 1;
        for slot in [10, 20] {
            let rank = ranked.iter().position(|&s| s == slot).unwrap() + 1;
            assert!(
                rank <= decile,
                "slot {slot} ranked {rank}, outside the top {decile}"
            );
        }
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let checkpoint = tiny_checkpoint(true, true);
        assert!(attention_report(&checkpoint, &[]).is_err());
    }

    #[test]
    fn modality_names_key_the_sections() {
        let checkpoint = tiny_checkpoint(true, true);
        let report = attention_report(&checkpoint, &corpus(2)).unwrap();
        for m in Modality::ALL {
            assert!(report.self_received.contains_key(m.name()));
        }
        for (q, k) in crate::model::PAIR_ORDER {
            assert!(report
                .cross_received
                .contains_key(&format!("{}->{}", q.name(), k.name())));
            assert!(report
                .cross_received
                .contains_key(&format!("{}->{}", k.name(), q.name())));
        }
    }
}
