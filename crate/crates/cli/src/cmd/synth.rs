use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use phasefuse_core::dataset::{synth_corpus, SynthSpec};

use crate::runmeta::write_run_manifest;

#[derive(Args, serde::Serialize)]
pub struct SynthArgs {
    /// Synthesis spec JSON (n_bonafide, n_spoof, spoof_mode, duration_s, seed).
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory for WAV files and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: SynthArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("reading synth spec {:?}", args.spec))?;
    let spec: SynthSpec =
        serde_json::from_str(&text).with_context(|| "parsing synth spec JSON")?;
    let manifest = synth_corpus(&spec, &args.out)?;
    write_run_manifest(&args.out, "synth", &spec)?;
    println!(
        "wrote {} utterances and manifest.json under {:?}",
        manifest.len(),
        args.out
    );
    Ok(())
}
