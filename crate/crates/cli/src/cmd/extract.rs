use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use phasefuse_core::dataset::{load_wav, Manifest};
use phasefuse_core::dsp::{feature_extractor, write_feature_cache};

use crate::runmeta::write_run_manifest;

#[derive(Args, serde::Serialize)]
pub struct ExtractArgs {
    /// Feature type: lps, cqt or lfcc.
    #[arg(long)]
    pub feature: String,
    /// Also extract the paired phase spectrum.
    #[arg(long)]
    pub with_phase: bool,
    /// Manifest of utterances to process.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Cache directory for the .pffc files.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: ExtractArgs) -> anyhow::Result<()> {
    let extractor = feature_extractor(&args.feature)?;
    let manifest = Manifest::load(&args.manifest)
        .with_context(|| format!("loading manifest {:?}", args.manifest))?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating cache directory {:?}", args.out))?;

    let mut n_files = 0usize;
    for entry in manifest.entries() {
        let wave = load_wav(&manifest.audio_path(entry))?;
        let pair = extractor.extract(&wave, args.with_phase)?;
        let utt = &entry.record.utterance_id;
        let mag_path = args.out.join(format!("{utt}.{}.mag.pffc", args.feature));
        write_feature_cache(&mag_path, utt, &pair.magnitude)?;
        n_files += 1;
        if let Some(phase) = &pair.phase {
            let ph_path = args.out.join(format!("{utt}.{}.phase.pffc", args.feature));
            write_feature_cache(&ph_path, utt, phase)?;
            n_files += 1;
        }
    }
    write_run_manifest(&args.out, "extract", &args)?;
    println!(
        "extracted {} cache files for {} utterances into {:?}",
        n_files,
        manifest.len(),
        args.out
    );
    Ok(())
}
