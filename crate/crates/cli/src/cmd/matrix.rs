use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use phasefuse_core::dsp::feature_extractor;
use phasefuse_core::featmap::{synth_feature_corpus, ControlledSplitSpec};
use phasefuse_core::metrics::AsvOperatingPoint;
use phasefuse_core::models::{framework, FrameworkKind, PairingConfig};
use phasefuse_core::nn::AdamConfig;
use phasefuse_core::train::{run_matrix, SegmentDataset, TrainConfig};

use crate::cmd::{config_error, load_manifests};
use crate::cmd::train::{backend_preset, scenario_of};
use crate::runmeta::write_run_manifest;

#[derive(Args, serde::Serialize)]
pub struct MatrixArgs {
    /// Comma-separated frameworks, e.g. a,b,c.
    #[arg(long, value_delimiter = ',')]
    pub frameworks: Vec<String>,
    /// Comma-separated pairings, e.g. cqt or lps,cqt,lfcc.
    #[arg(long, value_delimiter = ',', default_value = "cqt")]
    pub pairings: Vec<String>,
    /// Comma-separated seeds, e.g. 1,2,3.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long, default_value = "known")]
    pub scenario: String,
    #[arg(long = "train-manifest")]
    pub train_manifests: Vec<PathBuf>,
    #[arg(long = "dev-manifest")]
    pub dev_manifests: Vec<PathBuf>,
    #[arg(long = "eval-manifest")]
    pub eval_manifests: Vec<PathBuf>,
    /// Controlled corpus spec JSON (replaces the audio manifests).
    #[arg(long)]
    pub controlled: Option<PathBuf>,
    #[arg(long, default_value = "lite")]
    pub backend: String,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long)]
    pub asv_op: Option<PathBuf>,
    #[arg(long)]
    pub deterministic: bool,
    /// Output directory for the report table and CSV.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: MatrixArgs) -> anyhow::Result<()> {
    let frameworks: Vec<FrameworkKind> = args
        .frameworks
        .iter()
        .map(|n| framework(n).map(|f| f.kind()))
        .collect::<Result<_, _>>()?;
    if frameworks.is_empty() {
        return Err(config_error("no frameworks given"));
    }
    let backend = backend_preset(&args.backend)?;
    let scenario = scenario_of(&args.scenario)?;
    let op = match &args.asv_op {
        Some(path) => AsvOperatingPoint::load(path)?,
        None => AsvOperatingPoint::default(),
    };
    let train_cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        adam: AdamConfig {
            lr: args.lr,
            ..AdamConfig::default()
        },
        seed: 0,
        deterministic: args.deterministic,
    };

    let controlled: Option<ControlledSplitSpec> = match &args.controlled {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading controlled spec {path:?}"))?;
            Some(serde_json::from_str(&text)?)
        }
        None => None,
    };

    let pairings: Vec<PairingConfig> = if let Some(spec) = &controlled {
        vec![PairingConfig::controlled(spec.d)]
    } else {
        args.pairings
            .iter()
            .map(|n| PairingConfig::by_name(n))
            .collect::<Result<_, _>>()?
    };

    let needs_phase = frameworks
        .iter()
        .any(|k| *k != FrameworkKind::AMagnitudeOnly);

    let mut datasets = |pairing: &PairingConfig| {
        if let Some(spec) = &controlled {
            let train = synth_feature_corpus(&spec.train_spec())?;
            let dev = synth_feature_corpus(&spec.dev_spec())?;
            let eval = synth_feature_corpus(&spec.eval_spec())?;
            Ok((
                SegmentDataset::from_feature_corpus(&train, needs_phase)?,
                SegmentDataset::from_feature_corpus(&dev, needs_phase)?,
                SegmentDataset::from_feature_corpus(&eval, needs_phase)?,
            ))
        } else {
            let extractor = feature_extractor(&pairing.name)?;
            let train = load_manifests(&args.train_manifests, scenario)
                .map_err(|e| phasefuse_core::Error::Manifest(e.to_string()))?;
            let dev = load_manifests(&args.dev_manifests, scenario)
                .map_err(|e| phasefuse_core::Error::Manifest(e.to_string()))?;
            let eval = load_manifests(&args.eval_manifests, scenario)
                .map_err(|e| phasefuse_core::Error::Manifest(e.to_string()))?;
            Ok((
                SegmentDataset::from_manifest(&train, extractor, needs_phase)?,
                SegmentDataset::from_manifest(&dev, extractor, needs_phase)?,
                SegmentDataset::from_manifest(&eval, extractor, needs_phase)?,
            ))
        }
    };

    let mut progress = |line: &str| println!("{line}");
    let report = run_matrix(
        &frameworks,
        &pairings,
        &args.seeds,
        backend,
        &mut datasets,
        &train_cfg,
        &op,
        Some(&mut progress),
    )?;

    let table = report.to_table();
    print!("{table}");
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("matrix.txt"), &table)?;
    std::fs::write(args.out.join("matrix.csv"), report.to_csv())?;
    write_run_manifest(&args.out, "matrix", &args)?;
    println!("report written under {:?}", args.out);
    Ok(())
}
