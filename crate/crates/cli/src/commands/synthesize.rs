//! `interq synthesize` — generate a deterministic synthetic corpus.

use std::path::PathBuf;

use clap::Args;
use interq_core::features::cache::save_corpus;
use interq_core::features::synthetic::generate_synthetic_corpus;
use interq_core::Result;

use crate::config::Settings;
use crate::manifest::{write_manifest, RunManifest, Stopwatch};
use crate::util::{ensure_output_dir, path_str, to_json};

/// Unset flags fall back to the `[synthesis]` config section, then to
/// the built-in defaults.
#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Depression-class interviews to generate.
    #[arg(long, value_name = "N")]
    pub n_depressed: Option<usize>,
    /// Normal-class interviews to generate.
    #[arg(long, value_name = "N")]
    pub n_normal: Option<usize>,
    /// Distance between the class means on signal rows.
    #[arg(long, value_name = "F")]
    pub signal_strength: Option<f64>,
    /// Comma-separated 1-based slots carrying a plain class-mean shift.
    #[arg(long, value_name = "SLOTS", value_delimiter = ',')]
    pub signal_slots: Option<Vec<usize>>,
    /// Comma-separated follow-up slots whose shift sign depends on the
    /// interview's drawn parent topic slot.
    #[arg(long, value_name = "SLOTS", value_delimiter = ',')]
    pub coupled_follow_up_slots: Option<Vec<usize>>,
    /// Directory the feature files are written to.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    pub force: bool,
}

impl SynthesizeArgs {
    /// Config-only invocation, used by the pipeline command.
    pub fn from_config(out: PathBuf, force: bool) -> Self {
        SynthesizeArgs {
            n_depressed: None,
            n_normal: None,
            signal_strength: None,
            signal_slots: None,
            coupled_follow_up_slots: None,
            out,
            force,
        }
    }
}

pub fn run(settings: &Settings, args: &SynthesizeArgs) -> Result<()> {
    let mut cfg = settings.synthetic_config();
    if let Some(n) = args.n_depressed {
        cfg.n_depressed = n;
    }
    if let Some(n) = args.n_normal {
        cfg.n_normal = n;
    }
    if let Some(s) = args.signal_strength {
        cfg.signal_strength = s;
    }
    if let Some(slots) = &args.signal_slots {
        cfg.signal_slots = slots.clone();
    }
    if let Some(slots) = &args.coupled_follow_up_slots {
        cfg.coupled_follow_up_slots = slots.clone();
    }
    ensure_output_dir(&args.out, args.force)?;

    let mut watch = Stopwatch::start();
    let corpus = generate_synthetic_corpus(&cfg)?;
    watch.lap("generate");
    save_corpus(&args.out, &corpus)?;
    watch.lap("write");
    if settings.verbose {
        eprintln!(
            "[synthesize] {} depression + {} normal interviews, seed {}",
            cfg.n_depressed, cfg.n_normal, cfg.seed
        );
    }

    let manifest = RunManifest::new("synthesize", cfg.seed, to_json(&cfg)?)
        .output("features_dir", path_str(&args.out))
        .output("interviews", corpus.len().to_string());
    write_manifest(&args.out, true, manifest, watch)?;
    println!(
        "wrote {} interviews to {}",
        corpus.len(),
        args.out.display()
    );
    Ok(())
}
