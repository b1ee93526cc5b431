//! Component-ablation sweeps: retrain the model with pieces switched
//! off and tabulate how each variant scores on the shared test split.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::prep::QuestionEmbedding;
use crate::features::{EmbeddedInterview, Modality};
use crate::model::{ModelConfig, NetworkTopology};
use crate::training::{split_corpus, train, TrainConfig};

use super::evaluate::evaluate_checkpoint;
use super::metrics::Metrics;

/// One sweep row: which components are active.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationSetting {
    /// Row label used in reports.
    pub name: String,
    pub question_embedding: QuestionEmbedding,
    pub qa_module: bool,
    pub cm_attention: bool,
    pub augmentation: bool,
    pub modalities: BTreeSet<Modality>,
}

impl AblationSetting {
    /// Everything switched on, all three modalities.
    pub fn full() -> Self {
        AblationSetting {
            name: "full".into(),
            question_embedding: QuestionEmbedding::Hierarchical,
            qa_module: true,
            cm_attention: true,
            augmentation: true,
            modalities: Modality::ALL.into_iter().collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::validation("ablation setting needs a name"));
        }
        if self.modalities.is_empty() {
            return Err(Error::validation(format!(
                "ablation setting `{}` selects no modalities",
                self.name
            )));
        }
        Ok(())
    }

    /// Compact modality code, e.g. "A+V+T".
    pub fn modality_code(&self) -> String {
        self.modalities
            .iter()
            .map(|m| match m {
                Modality::Audio => "A",
                Modality::Visual => "V",
                Modality::Text => "T",
            })
            .collect::<Vec<_>>()
            .join("+")
    }

    fn topology(&self) -> NetworkTopology {
        NetworkTopology {
            modalities: self.modalities.clone(),
            qa_module: self.qa_module,
            cross_attention: self.cm_attention,
        }
    }
}

/// The component sweep: the full model and six degraded variants that
/// each remove one structural ingredient (or two, for the bare row).
pub fn component_plan() -> Vec<AblationSetting> {
    let full = AblationSetting::full();
    let row = |name: &str, f: &dyn Fn(&mut AblationSetting)| {
        let mut s = AblationSetting {
            name: name.into(),
            ..full.clone()
        };
        f(&mut s);
        s
    };
    vec![
        row("whole-interview-embedding", &|s| {
            s.question_embedding = QuestionEmbedding::WholeInterview;
        }),
        row("flat-question-embedding", &|s| {
            s.question_embedding = QuestionEmbedding::Flat;
        }),
        full.clone(),
        row("no-question-attention", &|s| s.qa_module = false),
        row("no-cross-attention", &|s| s.cm_attention = false),
        row("no-attention-blocks", &|s| {
            s.qa_module = false;
            s.cm_attention = false;
        }),
        row("no-augmentation", &|s| s.augmentation = false),
    ]
}

/// The modality sweep: every non-empty subset of {audio, visual, text}.
pub fn modality_plan() -> Vec<AblationSetting> {
    use Modality::{Audio as A, Text as T, Visual as V};
    let subsets: [(&str, &[Modality]); 7] = [
        ("audio-only", &[A]),
        ("visual-only", &[V]),
        ("text-only", &[T]),
        ("audio+visual", &[A, V]),
        ("visual+text", &[V, T]),
        ("audio+text", &[A, T]),
        ("all-modalities", &[A, V, T]),
    ];
    subsets
        .into_iter()
        .map(|(name, mods)| AblationSetting {
            name: name.into(),
            modalities: mods.iter().copied().collect(),
            ..AblationSetting::full()
        })
        .collect()
}

/// One sweep result: metrics on success, the error text otherwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRow {
    pub setting: AblationSetting,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

/// Train and score one model per setting against a shared split.
///
/// The split is derived from `train_config.seed`, and every setting
/// trains with that same seed, so rows differ only in the components
/// they toggle. A failed run is recorded in its row rather than
/// aborting the sweep.
pub fn run_ablation(
    plan: &[AblationSetting],
    corpus: &[EmbeddedInterview],
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<Vec<AblationRow>> {
    if plan.is_empty() {
        return Err(Error::validation("ablation plan is empty"));
    }
    for setting in plan {
        setting.validate()?;
    }
    let split = split_corpus(corpus, train_config.seed)?;
    let mut rows = Vec::with_capacity(plan.len());
    for setting in plan {
        let mut config = train_config.clone();
        config.augment = setting.augmentation;
        let outcome = train(
            model_config,
            &setting.topology(),
            setting.question_embedding,
            &config,
            &split,
        )
        .and_then(|checkpoint| evaluate_checkpoint(&checkpoint, &split.test));
        let (metrics, error) = match outcome {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e.to_string())),
        };
        rows.push(AblationRow {
            setting: setting.clone(),
            metrics,
            error,
        });
    }
    Ok(rows)
}

/// Render sweep rows as CSV. Score columns report the macro averages
/// plus the weighted F1.
pub fn ablation_table_csv(rows: &[AblationRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "Setting",
            "Modalities",
            "QE",
            "HQE",
            "QA-Module",
            "CM-Attention",
            "Aug",
            "Precision",
            "Recall",
            "F1",
            "WA-F1",
            "Error",
        ])
        .map_err(|e| Error::validation(format!("csv write failed: {e}")))?;
    for row in rows {
        let s = &row.setting;
        let yes_no = |b: bool| if b { "yes" } else { "no" };
        let qe = s.question_embedding != QuestionEmbedding::WholeInterview;
        let hqe = s.question_embedding == QuestionEmbedding::Hierarchical;
        let (precision, recall, f1, wa_f1) = match &row.metrics {
            Some(m) => (
                format!("{:.4}", m.macro_precision),
                format!("{:.4}", m.macro_recall),
                format!("{:.4}", m.macro_f1),
                format!("{:.4}", m.weighted_f1),
            ),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        writer
            .write_record([
                s.name.as_str(),
                &s.modality_code(),
                yes_no(qe),
                yes_no(hqe),
                yes_no(s.qa_module),
                yes_no(s.cm_attention),
                yes_no(s.augmentation),
                &precision,
                &recall,
                &f1,
                &wa_f1,
                row.error.as_deref().unwrap_or(""),
            ])
            .map_err(|e| Error::validation(format!("csv write failed: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::validation(format!("csv write failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::validation(format!("csv not utf-8: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::synthetic::{generate_synthetic_corpus, SyntheticConfig};
    use crate::model::ConvLayerSpec;

    fn tiny_corpus() -> Vec<EmbeddedInterview> {
        generate_synthetic_corpus(&SyntheticConfig {
            n_depressed: 4,
            n_normal: 6,
            seed: 8,
            signal_strength: 5.0,
            ..SyntheticConfig::default()
        })
        .unwrap()
    }

    fn tiny_configs() -> (ModelConfig, TrainConfig) {
        let mut model = ModelConfig::with_d_model(2, 1);
        model.conv_stack = vec![ConvLayerSpec {
            kernel: 1,
            channels: 2,
        }];
        let train = TrainConfig {
            epochs: 2,
            batch_size: 4,
            seed: 8,
            dropout_rate: 0.0,
            ..TrainConfig::default()
        };
        (model, train)
    }

    #[test]
    fn plans_have_seven_rows_each_and_validate() {
        let component = component_plan();
        let modality = modality_plan();
        assert_eq!(component.len(), 7);
        assert_eq!(modality.len(), 7);
        for s in component.iter().chain(&modality) {
            s.validate().unwrap();
        }
        assert_eq!(component[2], AblationSetting::full());
        let codes: Vec<String> = modality.iter().map(|s| s.modality_code()).collect();
        assert_eq!(codes, ["A", "V", "T", "A+V", "V+T", "A+T", "A+V+T"]);
    }

    #[test]
    fn sweep_emits_one_row_per_setting_and_is_deterministic() {
        let corpus = tiny_corpus();
        let (model, train) = tiny_configs();
        let plan = vec![
            AblationSetting::full(),
            AblationSetting {
                name: "text-only".into(),
                modalities: [Modality::Text].into_iter().collect(),
                ..AblationSetting::full()
            },
        ];
        let a = run_ablation(&plan, &corpus, &model, &train).unwrap();
        let b = run_ablation(&plan, &corpus, &model, &train).unwrap();
        assert_eq!(a.len(), 2);
        assert!(a.iter().all(|r| r.metrics.is_some() && r.error.is_none()));
        assert_eq!(
            ablation_table_csv(&a).unwrap(),
            ablation_table_csv(&b).unwrap()
        );
    }

    #[test]
    fn failed_runs_are_recorded_not_fatal() {
        let corpus = tiny_corpus();
        let (model, mut train) = tiny_configs();
        // An absurd learning rate diverges; the sweep must keep going.
        train.learning_rate = 1e300;
        let plan = vec![AblationSetting::full()];
        let rows = run_ablation(&plan, &corpus, &model, &train).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].metrics.is_none());
        assert!(rows[0].error.as_deref().unwrap().contains("diverged"));
        // The failure still renders as a CSV row.
        let csv = ablation_table_csv(&rows).unwrap();
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn csv_layout_matches_the_component_table() {
        let rows: Vec<AblationRow> = component_plan()
            .into_iter()
            .map(|setting| AblationRow {
                setting,
                metrics: None,
                error: None,
            })
            .collect();
        let csv = ablation_table_csv(&rows).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "Setting,Modalities,QE,HQE,QA-Module,CM-Attention,Aug,Precision,Recall,F1,WA-F1,Error"
        );
        let body: Vec<&str> = lines.collect();
        assert_eq!(body.len(), 7);
        // Whole-interview row: no question embedding at all.
        assert!(body[0].starts_with("whole-interview-embedding,A+V+T,no,no,yes,yes,yes"));
        // Flat row: embedding yes, hierarchy no.
        assert!(body[1].starts_with("flat-question-embedding,A+V+T,yes,no"));
        // Full row: everything yes.
        assert!(body[2].starts_with("full,A+V+T,yes,yes,yes,yes,yes"));
        assert!(body[6].starts_with("no-augmentation,A+V+T,yes,yes,yes,yes,no"));
    }

    #[test]
    fn settings_round_trip_through_json() {
        let plan = component_plan();
        let text = serde_json::to_string_pretty(&plan).unwrap();
        let back: Vec<AblationSetting> = serde_json::from_str(&text).unwrap();
        assert_eq!(plan, back);
    }

    #[test]
    fn empty_plans_and_empty_modalities_are_rejected() {
        let corpus = tiny_corpus();
        let (model, train) = tiny_configs();
        assert!(run_ablation(&[], &corpus, &model, &train).is_err());
        let bad = AblationSetting {
            modalities: BTreeSet::new(),
            ..AblationSetting::full()
        };
        assert!(run_ablation(&[bad], &corpus, &model, &train).is_err());
    }
}
