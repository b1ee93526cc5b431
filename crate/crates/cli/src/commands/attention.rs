//! `interq report-attention` — where the trained model looks.

use std::path::PathBuf;

use clap::Args;
use interq_core::evaluation::{attention_report, render_bar_chart_svg};
use interq_core::features::cache::load_corpus;
use interq_core::training::Checkpoint;
use interq_core::Result;

use crate::config::Settings;
use crate::manifest::{write_manifest, RunManifest, Stopwatch};
use crate::util::{
    ensure_output_dir, path_str, select_scope, write_bytes_atomic, write_json_atomic,
    EvalScope,
};

#[derive(Debug, Args)]
pub struct ReportAttentionArgs {
    /// Trained checkpoint file.
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    /// Directory of feature files to run the model over.
    #[arg(long, value_name = "DIR")]
    pub features_dir: PathBuf,
    /// Report output file (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also render per-slot received-mass bar charts (SVG) into this
    /// directory.
    #[arg(long, value_name = "DIR")]
    pub plots: Option<PathBuf>,
    /// Which interviews to include.
    #[arg(long, value_enum, default_value_t = EvalScope::Auto)]
    pub scope: EvalScope,
    /// Overwrite a non-empty plots directory.
    #[arg(long)]
    pub force: bool,
}

pub fn run(settings: &Settings, args: &ReportAttentionArgs) -> Result<()> {
    let mut watch = Stopwatch::start();
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let corpus = load_corpus(&args.features_dir)?;
    let (data, scope_name) = select_scope(&corpus, &checkpoint, args.scope)?;
    watch.lap("load");
    let report = attention_report(&checkpoint, &data)?;
    watch.lap("report");
    write_json_atomic(&args.out, &report)?;

    let mut plot_count = 0usize;
    if let Some(plots) = &args.plots {
        ensure_output_dir(plots, args.force)?;
        for (modality, values) in &report.self_received {
            let svg = render_bar_chart_svg(
                &format!("Received question-attention mass per slot ({modality})"),
                values,
            );
            write_bytes_atomic(
                &plots.join(format!("self_{modality}.svg")),
                svg.as_bytes(),
            )?;
            plot_count += 1;
        }
        for (pair, values) in &report.cross_received {
            let svg = render_bar_chart_svg(
                &format!("Received cross-modal attention mass per slot ({pair})"),
                values,
            );
            let name = pair.replace("->", "_to_");
            write_bytes_atomic(&plots.join(format!("cross_{name}.svg")), svg.as_bytes())?;
            plot_count += 1;
        }
        if settings.verbose {
            eprintln!("[report-attention] {plot_count} charts in {}", plots.display());
        }
    }
    watch.lap("write");

    let mut manifest = RunManifest::new(
        "report-attention",
        settings.seed,
        serde_json::json!({ "scope": scope_name }),
    )
    .input("checkpoint", path_str(&args.checkpoint))
    .input("features_dir", path_str(&args.features_dir))
    .output("report", path_str(&args.out))
    .output("interviews", data.len().to_string());
    if let Some(plots) = &args.plots {
        manifest = manifest
            .output("plots_dir", path_str(plots))
            .output("plots", plot_count.to_string());
    }
    write_manifest(&args.out, false, manifest, watch)?;
    println!(
        "attention report over {} interviews ({scope_name} scope) written to {}",
        data.len(),
        args.out.display()
    );
    Ok(())
}
