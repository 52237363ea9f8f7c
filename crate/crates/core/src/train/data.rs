//! In-memory segment datasets feeding the models.

use ndarray::ArrayView2;

use crate::dataset::{load_wav, Label, Manifest};
use crate::dsp::{FeatureExtractor, FeatureMap};
use crate::error::{Error, Result};
use crate::featmap::{extend_to_multiple, segment_starts, CorpusItem, SEGMENT_FRAMES, SEGMENT_HOP};
use crate::nn::Tensor4;

/// One 400-frame segment with its trial metadata.
///
/// Segment payloads are stored frequency-major (`[d][t]`, the transpose of
/// the feature map) so model tensors get the long time axis as their
/// contiguous innermost dimension.
#[derive(Debug, Clone)]
pub struct SegmentSample {
    pub utterance_id: String,
    pub attack_id: String,
    pub label: Label,
    mag: Vec<f32>,
    phase: Option<Vec<f32>>,
}

/// A flat list of segments (each utterance may own several).
#[derive(Debug, Clone, Default)]
pub struct SegmentDataset {
    pub mag_dim: usize,
    pub phase_dim: usize,
    samples: Vec<SegmentSample>,
}

fn flatten_segment_transposed(view: &ArrayView2<'_, f64>) -> Vec<f32> {
    let (t_len, d) = view.dim();
    let mut out = vec![0.0f32; t_len * d];
    for t in 0..t_len {
        for j in 0..d {
            out[j * t_len + t] = view[(t, j)] as f32;
        }
    }
    out
}

fn segments_of(map: &FeatureMap) -> Result<Vec<Vec<f32>>> {
    let extended = extend_to_multiple(map, SEGMENT_FRAMES)?;
    let starts = segment_starts(extended.n_frames(), SEGMENT_FRAMES, SEGMENT_HOP)?;
    Ok(starts
        .into_iter()
        .map(|s| {
            flatten_segment_transposed(
                &extended
                    .values
                    .slice(ndarray::s![s..s + SEGMENT_FRAMES, ..]),
            )
        })
        .collect())
}

impl SegmentDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[SegmentSample] {
        &self.samples
    }

    pub fn has_phase(&self) -> bool {
        self.samples.first().is_some_and(|s| s.phase.is_some())
    }

    /// Builds from feature-domain corpus items (one segment per item when
    /// T = 400).
    pub fn from_feature_corpus(items: &[CorpusItem], with_phase: bool) -> Result<Self> {
        let mut ds = SegmentDataset::default();
        for item in items {
            let mag_segments = segments_of(&item.magnitude)?;
            let phase_segments = if with_phase {
                Some(segments_of(&item.phase)?)
            } else {
                None
            };
            ds.mag_dim = item.magnitude.dim();
            ds.phase_dim = item.phase.dim();
            let n = match &phase_segments {
                Some(p) => mag_segments.len().min(p.len()),
                None => mag_segments.len(),
            };
            let attack_id = if item.label == Label::Bonafide { "-" } else { "CTRL" };
            for i in 0..n {
                ds.samples.push(SegmentSample {
                    utterance_id: item.id.clone(),
                    attack_id: attack_id.into(),
                    label: item.label,
                    mag: mag_segments[i].clone(),
                    phase: phase_segments.as_ref().map(|p| p[i].clone()),
                });
            }
        }
        if ds.samples.is_empty() {
            return Err(Error::Empty("feature corpus produced no segments".into()));
        }
        Ok(ds)
    }

    /// Extracts features for every manifest entry and segments them.
    ///
    /// For pairings whose magnitude and phase frame rates differ (the
    /// cepstral pairing), segments are paired positionally and the count is
    /// the smaller of the two.
    pub fn from_manifest(
        manifest: &Manifest,
        extractor: &dyn FeatureExtractor,
        with_phase: bool,
    ) -> Result<Self> {
        let mut ds = SegmentDataset::default();
        ds.mag_dim = extractor.magnitude_dim();
        ds.phase_dim = extractor.phase_dim();
        for entry in manifest.entries() {
            let wave = load_wav(&manifest.audio_path(entry))?;
            let pair = extractor.extract(&wave, with_phase)?;
            let mag_segments = segments_of(&pair.magnitude)?;
            let phase_segments = match &pair.phase {
                Some(p) => Some(segments_of(p)?),
                None => None,
            };
            let n = match &phase_segments {
                Some(p) => mag_segments.len().min(p.len()),
                None => mag_segments.len(),
            };
            for i in 0..n {
                ds.samples.push(SegmentSample {
                    utterance_id: entry.record.utterance_id.clone(),
                    attack_id: entry.record.attack_id.clone(),
                    label: entry.record.label,
                    mag: mag_segments[i].clone(),
                    phase: phase_segments.as_ref().map(|p| p[i].clone()),
                });
            }
        }
        if ds.samples.is_empty() {
            return Err(Error::Empty("manifest produced no segments".into()));
        }
        Ok(ds)
    }

    /// Builds from feature cache files written by the extract step
    /// (`<utt>.<feature>.mag.pffc` / `.phase.pffc` under `cache_dir`).
    /// A missing cache file is an error.
    pub fn from_manifest_cached(
        manifest: &Manifest,
        cache_dir: &std::path::Path,
        feature_name: &str,
        with_phase: bool,
    ) -> Result<Self> {
        use crate::dsp::read_feature_cache;
        let mut ds = SegmentDataset::default();
        for entry in manifest.entries() {
            let utt = &entry.record.utterance_id;
            let mag_path = cache_dir.join(format!("{utt}.{feature_name}.mag.pffc"));
            if !mag_path.exists() {
                return Err(Error::Cache {
                    path: mag_path,
                    reason: "feature cache miss".into(),
                });
            }
            let (_, mag_map) = read_feature_cache(&mag_path)?;
            let mag_segments = segments_of(&mag_map)?;
            ds.mag_dim = mag_map.dim();
            let phase_segments = if with_phase {
                let ph_path = cache_dir.join(format!("{utt}.{feature_name}.phase.pffc"));
                if !ph_path.exists() {
                    return Err(Error::Cache {
                        path: ph_path,
                        reason: "feature cache miss".into(),
                    });
                }
                let (_, ph_map) = read_feature_cache(&ph_path)?;
                ds.phase_dim = ph_map.dim();
                Some(segments_of(&ph_map)?)
            } else {
                None
            };
            let n = match &phase_segments {
                Some(p) => mag_segments.len().min(p.len()),
                None => mag_segments.len(),
            };
            for i in 0..n {
                ds.samples.push(SegmentSample {
                    utterance_id: utt.clone(),
                    attack_id: entry.record.attack_id.clone(),
                    label: entry.record.label,
                    mag: mag_segments[i].clone(),
                    phase: phase_segments.as_ref().map(|p| p[i].clone()),
                });
            }
        }
        if ds.samples.is_empty() {
            return Err(Error::Empty("manifest produced no segments".into()));
        }
        Ok(ds)
    }

    /// Assembles `B x 1 x D x 400` magnitude (and optional phase) batches
    /// for the given sample indices (frequency-major model layout).
    pub fn make_batch(
        &self,
        indices: &[usize],
        with_phase: bool,
    ) -> Result<(Tensor4<f32>, Option<Tensor4<f32>>, Vec<usize>)> {
        let b = indices.len();
        if b == 0 {
            return Err(Error::Empty("empty batch".into()));
        }
        let mut mag = Tensor4::zeros([b, 1, self.mag_dim, SEGMENT_FRAMES]);
        let mut phase = if with_phase {
            Some(Tensor4::zeros([b, 1, self.phase_dim, SEGMENT_FRAMES]))
        } else {
            None
        };
        let mut labels = Vec::with_capacity(b);
        let mag_plane = SEGMENT_FRAMES * self.mag_dim;
        let phase_plane = SEGMENT_FRAMES * self.phase_dim;
        for (row, &idx) in indices.iter().enumerate() {
            let s = &self.samples[idx];
            mag.data_mut()[row * mag_plane..(row + 1) * mag_plane].copy_from_slice(&s.mag);
            if let Some(ph) = &mut phase {
                let src = s.phase.as_ref().ok_or_else(|| {
                    Error::Config(format!("segment of {} has no phase map", s.utterance_id))
                })?;
                ph.data_mut()[row * phase_plane..(row + 1) * phase_plane].copy_from_slice(src);
            }
            labels.push(match s.label {
                Label::Bonafide => 1,
                Label::Spoof => 0,
            });
        }
        Ok((mag, phase, labels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featmap::{synth_feature_corpus, FeatureCorpusSpec, MagnitudeMode, PhaseMode};

    fn corpus_spec(t: usize) -> FeatureCorpusSpec {
        FeatureCorpusSpec {
            n_per_class: 2,
            t,
            d: 8,
            phase_mode: PhaseMode::Structured,
            magnitude_mode: MagnitudeMode::SharedDistribution,
            seed: 5,
        }
    }

    #[test]
    fn one_segment_per_item_when_t_is_400() {
        let items = synth_feature_corpus(&corpus_spec(400)).unwrap();
        let ds = SegmentDataset::from_feature_corpus(&items, true).unwrap();
        assert_eq!(ds.len(), 4);
        assert!(ds.has_phase());
    }

    #[test]
    fn three_segments_per_item_when_t_is_800() {
        let items = synth_feature_corpus(&corpus_spec(800)).unwrap();
        let ds = SegmentDataset::from_feature_corpus(&items, false).unwrap();
        assert_eq!(ds.len(), 12);
        assert!(!ds.has_phase());
    }

    #[test]
    fn batches_carry_labels_and_values() {
        let items = synth_feature_corpus(&corpus_spec(400)).unwrap();
        let ds = SegmentDataset::from_feature_corpus(&items, true).unwrap();
        let (mag, phase, labels) = ds.make_batch(&[0, 2], true).unwrap();
        assert_eq!(mag.shape(), [2, 1, 8, 400]);
        assert_eq!(phase.unwrap().shape(), [2, 1, 8, 400]);
        assert_eq!(labels, vec![1, 0]); // bona fide items come first
        assert_eq!(mag.at(0, 0, 4, 3) as f64, items[0].magnitude.values[(3, 4)] as f32 as f64);
    }
}
