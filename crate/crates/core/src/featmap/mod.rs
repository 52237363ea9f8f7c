//! Unified feature maps: extension to multiples of 400 frames, overlapped
//! segmentation, channel stacking, and utterance-level score aggregation.

mod corpus;

pub use corpus::{
    synth_feature_corpus, ControlledSplitSpec, CorpusItem, FeatureCorpusSpec, MagnitudeMode,
    PhaseMode,
};

use ndarray::{Array3, ArrayView2, Axis};

use crate::dsp::FeatureMap;
use crate::error::{Error, Result};

/// Fixed segment length in frames.
pub const SEGMENT_FRAMES: usize = 400;
/// Fixed segment hop in frames (200 frames overlap).
pub const SEGMENT_HOP: usize = 200;

/// Cyclically repeats the utterance until the frame count is a multiple of
/// `l`: output frame `t` equals input frame `t % T`.
pub fn extend_to_multiple(feat: &FeatureMap, l: usize) -> Result<FeatureMap> {
    let t = feat.n_frames();
    if t == 0 || l == 0 {
        return Err(Error::Empty("cannot extend an empty feature map".into()));
    }
    let t_out = l * t.div_ceil(l);
    if t_out == t {
        return Ok(feat.clone());
    }
    let mut values = ndarray::Array2::zeros((t_out, feat.dim()));
    for i in 0..t_out {
        values.row_mut(i).assign(&feat.values.row(i % t));
    }
    Ok(FeatureMap {
        values,
        channel_kind: feat.channel_kind,
        source: feat.source,
    })
}

/// Segment start offsets for a map of `t` frames: 0, hop, ..., t - len.
/// Requires `t` to be a multiple of `len` (apply [`extend_to_multiple`]
/// first).
pub fn segment_starts(t: usize, len: usize, hop: usize) -> Result<Vec<usize>> {
    if t % len != 0 {
        return Err(Error::Shape(format!(
            "frame count {t} is not a multiple of the segment length {len}"
        )));
    }
    Ok((0..=(t - len)).step_by(hop).collect())
}

/// Views of the overlapped segments, 400 frames each with 200-frame hop.
pub fn segment<'a>(
    feat: &'a FeatureMap,
    len: usize,
    hop: usize,
) -> Result<Vec<ArrayView2<'a, f64>>> {
    let starts = segment_starts(feat.n_frames(), len, hop)?;
    Ok(starts
        .into_iter()
        .map(|s| feat.values.slice(ndarray::s![s..s + len, ..]))
        .collect())
}

/// Stacks a magnitude segment with an optional phase-like segment along a
/// new leading channel axis; channel 0 is always the magnitude.
pub fn stack_channels(
    mag: &ArrayView2<'_, f64>,
    phase_like: Option<&ArrayView2<'_, f64>>,
) -> Result<Array3<f64>> {
    match phase_like {
        None => {
            let mut out = Array3::zeros((1, mag.nrows(), mag.ncols()));
            out.index_axis_mut(Axis(0), 0).assign(mag);
            Ok(out)
        }
        Some(ph) => {
            if mag.dim() != ph.dim() {
                return Err(Error::Shape(format!(
                    "channel shapes differ: magnitude {:?} vs phase {:?}",
                    mag.dim(),
                    ph.dim()
                )));
            }
            let mut out = Array3::zeros((2, mag.nrows(), mag.ncols()));
            out.index_axis_mut(Axis(0), 0).assign(mag);
            out.index_axis_mut(Axis(0), 1).assign(ph);
            Ok(out)
        }
    }
}

/// Utterance score = arithmetic mean of its segment scores.
pub fn aggregate_scores(segment_scores: &[f64]) -> Result<f64> {
    if segment_scores.is_empty() {
        return Err(Error::Empty("no segment scores to aggregate".into()));
    }
    Ok(segment_scores.iter().sum::<f64>() / segment_scores.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{ChannelKind, FeatureSource};
    use ndarray::Array2;

    fn map_of(t: usize, d: usize) -> FeatureMap {
        FeatureMap {
            values: Array2::from_shape_fn((t, d), |(i, j)| (i * d + j) as f64),
            channel_kind: ChannelKind::Magnitude,
            source: FeatureSource::Cqt,
        }
    }

    #[test]
    fn extend_900_to_1200_with_cyclic_tail() {
        let m = map_of(900, 4);
        let e = extend_to_multiple(&m, 400).unwrap();
        assert_eq!(e.n_frames(), 1200);
        assert_eq!(e.values.row(900), m.values.row(0));
        assert_eq!(e.values.row(1199), m.values.row(299));
    }

    #[test]
    fn extend_exact_multiple_is_identity() {
        let m = map_of(400, 3);
        let e = extend_to_multiple(&m, 400).unwrap();
        assert_eq!(e.values, m.values);
    }

    #[test]
    fn extend_single_frame_replicates_it() {
        let m = map_of(1, 5);
        let e = extend_to_multiple(&m, 400).unwrap();
        assert_eq!(e.n_frames(), 400);
        for t in 0..400 {
            assert_eq!(e.values.row(t), m.values.row(0));
        }
    }

    #[test]
    fn segment_counts_match_frame_count() {
        assert_eq!(
            segment_starts(1200, 400, 200).unwrap(),
            vec![0, 200, 400, 600, 800]
        );
        assert_eq!(segment_starts(400, 400, 200).unwrap(), vec![0]);
        assert_eq!(segment_starts(800, 400, 200).unwrap().len(), 3);
        assert!(segment_starts(900, 400, 200).is_err());
    }

    #[test]
    fn segments_cover_every_frame_and_match_source() {
        let m = extend_to_multiple(&map_of(900, 2), 400).unwrap();
        let segs = segment(&m, 400, 200).unwrap();
        assert_eq!(segs.len(), 5);
        let mut covered = vec![false; 1200];
        for (i, seg) in segs.iter().enumerate() {
            let start = i * 200;
            for r in 0..400 {
                covered[start + r] = true;
                assert_eq!(seg.row(r), m.values.row(start + r));
            }
        }
        assert!(covered.iter().all(|&c| c));
    }

    #[test]
    fn stacking_orders_magnitude_first() {
        let mag = map_of(400, 6);
        let ph = FeatureMap {
            values: mag.values.mapv(|v| -v),
            channel_kind: ChannelKind::Phase,
            source: FeatureSource::Cqt,
        };
        let stacked = stack_channels(&mag.values.view(), Some(&ph.values.view())).unwrap();
        assert_eq!(stacked.dim(), (2, 400, 6));
        assert_eq!(stacked[(0, 3, 2)], mag.values[(3, 2)]);
        assert_eq!(stacked[(1, 3, 2)], -mag.values[(3, 2)]);

        let single = stack_channels(&mag.values.view(), None).unwrap();
        assert_eq!(single.dim(), (1, 400, 6));
    }

    #[test]
    fn stacking_rejects_dimension_mismatch() {
        let mag = map_of(400, 108);
        let ph = map_of(400, 513);
        assert!(stack_channels(&mag.values.view(), Some(&ph.values.view())).is_err());
    }

    #[test]
    fn score_aggregation_is_the_mean() {
        assert_eq!(aggregate_scores(&[0.2, 0.4]).unwrap(), 0.30000000000000004);
        assert_eq!(aggregate_scores(&[0.7]).unwrap(), 0.7);
        assert!(aggregate_scores(&[]).is_err());
        let a = aggregate_scores(&[1.0, 2.0, 5.0]).unwrap();
        let b = aggregate_scores(&[5.0, 1.0, 2.0]).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn aggregate_bounded_by_extremes() {
        let scores = [0.1, -2.0, 3.5, 0.0];
        let m = aggregate_scores(&scores).unwrap();
        assert!(m >= -2.0 && m <= 3.5);
    }
}
