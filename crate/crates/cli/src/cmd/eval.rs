use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use phasefuse_core::dataset::Scenario;
use phasefuse_core::dsp::feature_extractor;
use phasefuse_core::featmap::{synth_feature_corpus, ControlledSplitSpec};
use phasefuse_core::models::load_checkpoint;
use phasefuse_core::train::{evaluate_dataset, SegmentDataset};

use crate::cmd::{config_error, load_manifests};
use crate::runmeta::write_run_manifest;

#[derive(Args, serde::Serialize)]
pub struct EvalArgs {
    /// Trained checkpoint.
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Manifest(s) to score.
    #[arg(long = "manifest")]
    pub manifests: Vec<PathBuf>,
    /// Controlled corpus spec JSON: scores its eval split instead.
    #[arg(long)]
    pub controlled: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Force single-threaded math for bit-reproducible runs.
    #[arg(long)]
    pub deterministic: bool,
    /// Output score file.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: EvalArgs) -> anyhow::Result<()> {
    phasefuse_core::nn::set_single_threaded(args.deterministic);
    let loaded =
        load_checkpoint(&args.ckpt).with_context(|| format!("loading {:?}", args.ckpt))?;
    let mut model = loaded.model;
    let pairing = model.config().pairing.clone();

    let ds = if let Some(controlled_path) = &args.controlled {
        if pairing.name != "controlled" {
            return Err(config_error(format!(
                "checkpoint was trained on pairing {:?}, not the controlled corpus",
                pairing.name
            )));
        }
        let text = std::fs::read_to_string(controlled_path)
            .with_context(|| format!("reading controlled spec {controlled_path:?}"))?;
        let spec: ControlledSplitSpec = serde_json::from_str(&text)?;
        if spec.d != pairing.mag_dim {
            return Err(config_error(format!(
                "checkpoint expects dimension {}, controlled spec has {}",
                pairing.mag_dim, spec.d
            )));
        }
        let items = synth_feature_corpus(&spec.eval_spec())?;
        SegmentDataset::from_feature_corpus(&items, model.uses_phase())?
    } else {
        if pairing.name == "controlled" {
            return Err(config_error(
                "checkpoint was trained on the controlled corpus; pass --controlled",
            ));
        }
        let manifest = load_manifests(&args.manifests, Scenario::UnknownKind)?;
        let extractor = feature_extractor(&pairing.name)?;
        SegmentDataset::from_manifest(&manifest, extractor, model.uses_phase())?
    };

    let scores = evaluate_dataset(&mut model, &ds, args.batch_size)?;
    scores.save(&args.out)?;
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            write_run_manifest(dir, "eval", &args)?;
        }
    }
    println!("scored {} utterances into {:?}", scores.rows.len(), args.out);
    Ok(())
}
