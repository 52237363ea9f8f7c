//! Equal error rate at the interpolated crossing of the FAR and FRR step
//! functions.

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::metrics::ScoreFile;

/// Operating points of the detection staircase: for each candidate
/// threshold (every distinct score, plus -inf), the false-acceptance rate
/// (spoof accepted: `score >= t`) and false-rejection rate (bona fide
/// rejected: `score < t`). FAR is non-increasing and FRR non-decreasing in
/// the threshold.
pub(crate) struct DetCurve {
    pub thresholds: Vec<f64>, // ascending; index 0 stands for -inf
    pub far: Vec<f64>,
    pub frr: Vec<f64>,
}

pub(crate) fn det_curve(scores: &ScoreFile) -> Result<DetCurve> {
    let bona = scores.scores_of(Label::Bonafide);
    let spoof = scores.scores_of(Label::Spoof);
    if bona.is_empty() || spoof.is_empty() {
        return Err(Error::Metric(
            "EER needs at least one bona fide and one spoof score".into(),
        ));
    }

    let mut distinct: Vec<f64> = bona.iter().chain(spoof.iter()).copied().collect();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();

    let n_bona = bona.len() as f64;
    let n_spoof = spoof.len() as f64;
    let mut bona_sorted = bona;
    bona_sorted.sort_by(|a, b| a.total_cmp(b));
    let mut spoof_sorted = spoof;
    spoof_sorted.sort_by(|a, b| a.total_cmp(b));

    // rates at t = -inf, then at each distinct score
    let mut thresholds = vec![f64::NEG_INFINITY];
    thresholds.extend_from_slice(&distinct);
    let mut far = Vec::with_capacity(thresholds.len());
    let mut frr = Vec::with_capacity(thresholds.len());
    for &t in &thresholds {
        let spoof_accepted = n_spoof - partition_point_lt(&spoof_sorted, t) as f64;
        let bona_rejected = partition_point_lt(&bona_sorted, t) as f64;
        far.push(spoof_accepted / n_spoof);
        frr.push(bona_rejected / n_bona);
    }
    Ok(DetCurve {
        thresholds,
        far,
        frr,
    })
}

/// Number of elements strictly below `t` in an ascending slice.
fn partition_point_lt(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&s| s < t)
}

/// EER and its threshold. When no operating point has FAR == FRR exactly,
/// the crossing is interpolated linearly between the two adjacent points.
pub fn compute_eer(scores: &ScoreFile) -> Result<(f64, f64)> {
    let curve = det_curve(scores)?;
    // first index where the (non-increasing) FAR falls to or below the
    // (non-decreasing) FRR; index 0 has far = 1, frr = 0
    let n = curve.thresholds.len();
    let mut cross = n - 1;
    for i in 0..n {
        if curve.far[i] <= curve.frr[i] {
            cross = i;
            break;
        }
    }
    if curve.far[cross] == curve.frr[cross] {
        return Ok((curve.far[cross], finite_threshold(&curve, cross)));
    }
    debug_assert!(cross > 0, "far starts at 1, frr at 0");
    let (f0, r0) = (curve.far[cross - 1], curve.frr[cross - 1]);
    let (f1, r1) = (curve.far[cross], curve.frr[cross]);
    let d0 = f0 - r0; // > 0
    let d1 = f1 - r1; // < 0
    let t = d0 / (d0 - d1);
    let eer = f0 + t * (f1 - f0);
    let tau = {
        let a = finite_threshold(&curve, cross - 1);
        let b = finite_threshold(&curve, cross);
        a + t * (b - a)
    };
    Ok((eer, tau))
}

fn finite_threshold(curve: &DetCurve, idx: usize) -> f64 {
    if curve.thresholds[idx].is_finite() {
        curve.thresholds[idx]
    } else {
        // -inf stands for "accept everything": any value below the minimum
        // score acts identically; report just below it.
        curve.thresholds[1] - 1.0
    }
}
