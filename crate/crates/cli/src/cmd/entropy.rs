use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use phasefuse_core::dataset::{load_wav, render_harmonic, HarmonicParams, Waveform};
use phasefuse_core::dsp::{feature_extractor, ChannelKind, FeatureSource};
use phasefuse_core::entropy::{
    entropy_report, frame_entropy, global_minmax_normalize, random_noise_map, EntropyConfig,
    EntropyCurve,
};
use phasefuse_core::featmap::{extend_to_multiple, segment_starts, SEGMENT_FRAMES};
use phasefuse_core::models::{load_checkpoint, tensor_to_feature_map};
use phasefuse_core::nn::{Mode, Tensor4};
use phasefuse_core::PIPELINE_SAMPLE_RATE;
use rand::SeedableRng;

use crate::cmd::config_error;
use crate::runmeta::write_run_manifest;

#[derive(Args, serde::Serialize)]
pub struct EntropyArgs {
    /// Feature type: lps, cqt or lfcc.
    #[arg(long, default_value = "cqt")]
    pub feature: String,
    /// Utterance to analyze (omit to use the built-in reference voice).
    #[arg(long)]
    pub utt: Option<PathBuf>,
    /// Histogram bin count.
    #[arg(long, default_value_t = 32)]
    pub bins: usize,
    /// Seed for the noise map (and the reference voice, when used).
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Checkpoint with a phase network: adds the processed-phase curve.
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: EntropyArgs) -> anyhow::Result<()> {
    let wave = match &args.utt {
        Some(path) => load_wav(path)?,
        None => {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(args.seed);
            let samples = render_harmonic(&HarmonicParams::reference_voice(), &mut rng);
            Waveform::new(samples, PIPELINE_SAMPLE_RATE, "reference_voice")?
        }
    };

    let extractor = feature_extractor(&args.feature)?;
    let pair = extractor.extract(&wave, true)?;
    let phase = pair.phase.as_ref().expect("phase requested");
    let cfg = EntropyConfig { n_bins: args.bins };

    let mag_norm = global_minmax_normalize(&pair.magnitude);
    let phase_norm = global_minmax_normalize(phase);
    let mut curves = vec![
        frame_entropy(&mag_norm, &cfg, "magnitude")?,
        frame_entropy(&phase_norm, &cfg, "phase")?,
    ];
    let noise = random_noise_map(phase.n_frames(), phase.dim(), args.seed)?;
    curves.push(frame_entropy(&noise, &cfg, "noise")?);

    if let Some(ckpt_path) = &args.ckpt {
        let loaded = load_checkpoint(ckpt_path)
            .with_context(|| format!("loading checkpoint {ckpt_path:?}"))?;
        let mut model = loaded.model;
        if !model.uses_phase() {
            return Err(config_error("checkpoint's framework has no phase path"));
        }
        let expect = model.config().pairing.phase_dim;
        if phase.dim() != expect {
            return Err(config_error(format!(
                "checkpoint expects phase dimension {expect}, feature {} gives {}",
                args.feature,
                phase.dim()
            )));
        }
        // stitch processed phase from non-overlapping segments
        let extended = extend_to_multiple(phase, SEGMENT_FRAMES)?;
        let starts = segment_starts(extended.n_frames(), SEGMENT_FRAMES, SEGMENT_FRAMES)?;
        let d = extended.dim();
        let mut stitched: Vec<Vec<f64>> = Vec::with_capacity(extended.n_frames());
        for s in starts {
            let mut seg = Tensor4::<f32>::zeros([1, 1, d, SEGMENT_FRAMES]);
            for t in 0..SEGMENT_FRAMES {
                for j in 0..d {
                    *seg.at_mut(0, 0, j, t) = extended.values[(s + t, j)] as f32;
                }
            }
            let out = model.process_phase(&seg, Mode::Eval)?;
            let map = tensor_to_feature_map(&out, ChannelKind::ProcessedPhase, FeatureSource::Cqt)?;
            for t in 0..map.n_frames() {
                stitched.push(map.values.row(t).to_vec());
            }
        }
        stitched.truncate(phase.n_frames());
        let d_out = stitched[0].len();
        let mut values = ndarray::Array2::zeros((stitched.len(), d_out));
        for (t, row) in stitched.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                values[(t, j)] = v;
            }
        }
        let processed = phasefuse_core::dsp::FeatureMap {
            values,
            channel_kind: ChannelKind::ProcessedPhase,
            source: pair.magnitude.source,
        };
        let processed_norm = global_minmax_normalize(&processed);
        curves.push(frame_entropy(&processed_norm, &cfg, "processed_phase")?);
    }

    // magnitude frames can outnumber phase frames (cepstral pairing); trim
    let t_min = curves.iter().map(|c| c.values.len()).min().unwrap_or(0);
    let curves: Vec<EntropyCurve> = curves
        .into_iter()
        .map(|mut c| {
            c.values.truncate(t_min);
            c.frame_times.truncate(t_min);
            c
        })
        .collect();

    let report = entropy_report(&curves)?;
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).ok();
        }
    }
    std::fs::write(&args.out, &report)
        .with_context(|| format!("writing entropy CSV {:?}", args.out))?;
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            write_run_manifest(dir, "entropy", &args)?;
        }
    }
    for c in &curves {
        println!("{}: mean {:.3} bits over {} frames", c.source_label, c.mean(), t_min);
    }
    Ok(())
}
