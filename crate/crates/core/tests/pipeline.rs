//! Audio-path integration: synthetic corpus -> features -> training ->
//! utterance scores, for each pairing.

use phasefuse_core::dataset::{synth_corpus, SpoofMode, SynthSpec};
use phasefuse_core::dsp::feature_extractor;
use phasefuse_core::metrics::compute_eer;
use phasefuse_core::models::{BackendPreset, FrameworkKind, ModelConfig, PairingConfig};
use phasefuse_core::train::{evaluate_dataset, fit, SegmentDataset, TrainConfig};

fn tiny_corpus(dir: &std::path::Path, seed: u64) -> phasefuse_core::dataset::Manifest {
    synth_corpus(
        &SynthSpec {
            n_bonafide: 3,
            n_spoof: 3,
            spoof_mode: SpoofMode::MagnitudePerturbed,
            duration_s: 1.2,
            seed,
        },
        dir,
    )
    .unwrap()
}

#[test]
fn lfcc_audio_pipeline_trains_and_scores() {
    let dir = tempfile::tempdir().unwrap();
    let train_manifest = tiny_corpus(&dir.path().join("train"), 100);
    let dev_manifest = tiny_corpus(&dir.path().join("dev"), 200);

    let extractor = feature_extractor("lfcc").unwrap();
    let train_set = SegmentDataset::from_manifest(&train_manifest, extractor, true).unwrap();
    let dev_set = SegmentDataset::from_manifest(&dev_manifest, extractor, true).unwrap();
    assert_eq!(train_set.mag_dim, 60);
    assert_eq!(train_set.phase_dim, 513);

    let config = ModelConfig::new(
        FrameworkKind::CPhaseNetworkConcat,
        PairingConfig::lfcc(),
        BackendPreset::Lite,
        3,
    );
    let mut result = fit(
        &config,
        &train_set,
        &dev_set,
        &TrainConfig {
            epochs: 1,
            batch_size: 4,
            seed: 3,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    let scores = evaluate_dataset(&mut result.model, &dev_set, 4).unwrap();
    assert_eq!(scores.rows.len(), dev_manifest.len());
    // EER is computable on the scored output, whatever its value
    let (eer, _) = compute_eer(&scores).unwrap();
    assert!((0.0..=1.0).contains(&eer));
}

#[test]
fn lps_pipeline_produces_513_dim_features() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = tiny_corpus(dir.path(), 300);
    let extractor = feature_extractor("lps").unwrap();
    let ds = SegmentDataset::from_manifest(&manifest, extractor, true).unwrap();
    assert_eq!(ds.mag_dim, 513);
    assert_eq!(ds.phase_dim, 513);
    // 1.2 s at 64/32 ms framing -> 35 frames -> extended to 400 -> 1 segment
    assert_eq!(ds.len(), manifest.len());
}

#[test]
fn cached_features_roundtrip_through_training_path() {
    use phasefuse_core::dsp::write_feature_cache;
    use phasefuse_core::dataset::load_wav;

    let dir = tempfile::tempdir().unwrap();
    let manifest = tiny_corpus(&dir.path().join("audio"), 400);
    let cache = dir.path().join("cache");
    std::fs::create_dir_all(&cache).unwrap();
    let extractor = feature_extractor("lfcc").unwrap();
    for entry in manifest.entries() {
        let wave = load_wav(&manifest.audio_path(entry)).unwrap();
        let pair = extractor.extract(&wave, true).unwrap();
        let utt = &entry.record.utterance_id;
        write_feature_cache(&cache.join(format!("{utt}.lfcc.mag.pffc")), utt, &pair.magnitude)
            .unwrap();
        write_feature_cache(
            &cache.join(format!("{utt}.lfcc.phase.pffc")),
            utt,
            pair.phase.as_ref().unwrap(),
        )
        .unwrap();
    }

    let from_cache =
        SegmentDataset::from_manifest_cached(&manifest, &cache, "lfcc", true).unwrap();
    let direct = SegmentDataset::from_manifest(&manifest, extractor, true).unwrap();
    assert_eq!(from_cache.len(), direct.len());
    // cache stores f32, the direct path computes f64 then casts: identical
    let (a, ap, _) = from_cache.make_batch(&[0, 1], true).unwrap();
    let (b, bp, _) = direct.make_batch(&[0, 1], true).unwrap();
    assert_eq!(a, b);
    assert_eq!(ap.unwrap(), bp.unwrap());
}

#[test]
fn cache_miss_is_a_hard_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = tiny_corpus(&dir.path().join("audio"), 500);
    let empty_cache = dir.path().join("empty");
    std::fs::create_dir_all(&empty_cache).unwrap();
    let err = SegmentDataset::from_manifest_cached(&manifest, &empty_cache, "lfcc", true)
        .unwrap_err();
    assert!(err.to_string().contains("cache miss"), "{err}");
}
