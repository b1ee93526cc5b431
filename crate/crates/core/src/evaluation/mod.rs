//! Scoring, ablation sweeps, and attention reporting.

pub mod ablation;
pub mod attention;
pub mod evaluate;
pub mod metrics;

pub use ablation::{
    ablation_table_csv, component_plan, modality_plan, run_ablation, AblationRow, AblationSetting,
};
pub use attention::{
    attention_report, render_bar_chart_svg, AttentionReport, InterviewAttention, SlotDetail,
};
pub use evaluate::{evaluate_checkpoint, predict, predicted_label};
pub use metrics::{compute_metrics, metrics_from_confusion, ClassMetrics, Metrics};
