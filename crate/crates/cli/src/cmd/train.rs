use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use phasefuse_core::dataset::Scenario;
use phasefuse_core::dsp::feature_extractor;
use phasefuse_core::featmap::{synth_feature_corpus, ControlledSplitSpec};
use phasefuse_core::models::{
    framework, save_checkpoint, BackendPreset, ModelConfig, PairingConfig,
};
use phasefuse_core::nn::AdamConfig;
use phasefuse_core::train::{fit, SegmentDataset, TrainConfig};

use crate::cmd::{config_error, load_manifests};
use crate::runmeta::write_run_manifest;

#[derive(Args, serde::Serialize)]
pub struct TrainArgs {
    /// Fusion framework: a (magnitude only), b (raw concat) or c (phase network).
    #[arg(long)]
    pub framework: String,
    /// Feature pairing: lps, cqt or lfcc (audio runs).
    #[arg(long)]
    pub pairing: Option<String>,
    /// Scenario: known (single subset) or unknown (PA and LA together).
    #[arg(long, default_value = "known")]
    pub scenario: String,
    /// Training manifest(s); repeat the flag for unknown-kind training.
    #[arg(long = "manifest")]
    pub manifests: Vec<PathBuf>,
    /// Development manifest(s) for model selection.
    #[arg(long = "dev-manifest")]
    pub dev_manifests: Vec<PathBuf>,
    /// Feature-domain controlled corpus spec JSON (replaces manifests).
    #[arg(long)]
    pub controlled: Option<PathBuf>,
    /// Read features from this cache directory (written by `extract`)
    /// instead of extracting on the fly; missing files are an error.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Backend preset: lite or paper_scale.
    #[arg(long, default_value = "lite")]
    pub backend: String,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Force single-threaded math for bit-reproducible runs.
    #[arg(long)]
    pub deterministic: bool,
    /// Output checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn backend_preset(name: &str) -> anyhow::Result<BackendPreset> {
    match name {
        "lite" => Ok(BackendPreset::Lite),
        "paper_scale" => Ok(BackendPreset::PaperScale),
        other => anyhow::bail!("unknown backend preset {other:?} (lite, paper_scale)"),
    }
}

pub fn scenario_of(name: &str) -> anyhow::Result<Scenario> {
    match name {
        "known" => Ok(Scenario::KnownKind),
        "unknown" => Ok(Scenario::UnknownKind),
        other => anyhow::bail!("unknown scenario {other:?} (known, unknown)"),
    }
}

pub fn run(args: TrainArgs) -> anyhow::Result<()> {
    let strat = framework(&args.framework)?;
    let backend = backend_preset(&args.backend)?;
    let scenario = scenario_of(&args.scenario)?;

    let (pairing, train_set, dev_set) = if let Some(controlled_path) = &args.controlled {
        let text = std::fs::read_to_string(controlled_path)
            .with_context(|| format!("reading controlled spec {controlled_path:?}"))?;
        let spec: ControlledSplitSpec =
            serde_json::from_str(&text).with_context(|| "parsing controlled corpus spec")?;
        let train_items = synth_feature_corpus(&spec.train_spec())?;
        let dev_items = synth_feature_corpus(&spec.dev_spec())?;
        let with_phase = strat.uses_phase();
        (
            PairingConfig::controlled(spec.d),
            SegmentDataset::from_feature_corpus(&train_items, with_phase)?,
            SegmentDataset::from_feature_corpus(&dev_items, with_phase)?,
        )
    } else {
        let pairing_name = args
            .pairing
            .as_deref()
            .ok_or_else(|| config_error("--pairing is required for audio training"))?;
        let pairing = PairingConfig::by_name(pairing_name)?;
        let extractor = feature_extractor(pairing_name)?;
        let train_manifest = load_manifests(&args.manifests, scenario)?;
        let dev_manifest = load_manifests(&args.dev_manifests, scenario)?;
        let with_phase = strat.uses_phase();
        let load = |manifest: &phasefuse_core::dataset::Manifest| match &args.cache {
            Some(dir) => {
                SegmentDataset::from_manifest_cached(manifest, dir, pairing_name, with_phase)
            }
            None => SegmentDataset::from_manifest(manifest, extractor, with_phase),
        };
        (pairing, load(&train_manifest)?, load(&dev_manifest)?)
    };

    let model_config = ModelConfig::new(strat.kind(), pairing, backend, args.seed);
    let train_config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        adam: AdamConfig {
            lr: args.lr,
            ..AdamConfig::default()
        },
        seed: args.seed,
        deterministic: args.deterministic,
    };

    println!(
        "training framework {} ({} train / {} dev segments, {} epochs)",
        strat.name(),
        train_set.len(),
        dev_set.len(),
        args.epochs
    );
    let result = fit(&model_config, &train_set, &dev_set, &train_config)?;
    for h in &result.history {
        println!(
            "epoch {:>3}: train loss {:.4}, dev EER {:.2}%",
            h.epoch,
            h.train_loss,
            h.dev_eer * 100.0
        );
    }
    println!(
        "best dev EER {:.2}% at epoch {}",
        result.meta.best_dev_eer * 100.0,
        result.meta.epoch_of_best
    );

    save_checkpoint(&args.out, &result.model, &result.meta, Some(&result.adam))?;
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            write_run_manifest(dir, "train", &args)?;
        }
    }
    println!("checkpoint written to {:?}", args.out);
    Ok(())
}
