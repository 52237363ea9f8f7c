use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use phasefuse_core::metrics::{
    compute_eer, compute_min_tdcf, per_attack_breakdown, AsvOperatingPoint, ScoreFile,
};

#[derive(Args, serde::Serialize)]
pub struct ScoreArgs {
    /// Score file (one `utt_id attack_id label score` row per line).
    #[arg(long)]
    pub scores: PathBuf,
    /// ASV operating point JSON; omitted: the shipped default.
    #[arg(long)]
    pub asv_op: Option<PathBuf>,
    /// Also print the per-attack breakdown table.
    #[arg(long)]
    pub breakdown: bool,
    /// Write the breakdown as CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn run(args: ScoreArgs) -> anyhow::Result<()> {
    let scores = ScoreFile::load(&args.scores)
        .with_context(|| format!("loading scores {:?}", args.scores))?;
    let op = match &args.asv_op {
        Some(path) => AsvOperatingPoint::load(path)?,
        None => AsvOperatingPoint::default(),
    };

    let (eer, eer_tau) = compute_eer(&scores)?;
    let (tdcf, tdcf_tau) = compute_min_tdcf(&scores, &op)?;
    println!("EER        {:.3}% (threshold {:.6})", eer * 100.0, eer_tau);
    println!("min t-DCF  {tdcf:.5} (threshold {tdcf_tau:.6})");
    if eer > 0.5 {
        println!("warning: EER above 50%; score direction looks inverted");
    }

    if args.breakdown || args.csv.is_some() {
        let report = per_attack_breakdown(&scores, &op)?;
        if args.breakdown {
            print!("{}", report.to_table());
        }
        if let Some(csv_path) = &args.csv {
            std::fs::write(csv_path, report.to_csv())
                .with_context(|| format!("writing {csv_path:?}"))?;
            println!("breakdown CSV written to {csv_path:?}");
        }
    }
    Ok(())
}
