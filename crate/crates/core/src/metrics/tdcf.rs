//! Normalized minimum tandem detection cost (the 2019 formulation).
//!
//! With a fixed ASV operating point, the tandem cost at a countermeasure
//! threshold t reduces to
//!
//! ```text
//! C1 = p_target  * (C_miss_cm - C_miss_asv * p_miss_asv)
//!      - p_nontarget * C_fa_asv * p_fa_asv
//! C2 = C_fa_cm * p_spoof * (1 - p_miss_spoof_asv)
//! t-DCF(t)      = C1 * P_miss_cm(t) + C2 * P_fa_cm(t)
//! t-DCF_norm(t) = t-DCF(t) / min(C1, C2)
//! ```
//!
//! and the minimum is taken over the finite set of distinct-score
//! thresholds plus the all-accept / all-reject extremes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::eer::det_curve;
use crate::metrics::ScoreFile;

/// Priors, costs and fixed ASV error rates entering the tandem cost.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsvOperatingPoint {
    pub p_target: f64,
    pub p_nontarget: f64,
    pub p_spoof: f64,
    pub c_miss_asv: f64,
    pub c_fa_asv: f64,
    pub c_miss_cm: f64,
    pub c_fa_cm: f64,
    pub p_miss_asv: f64,
    pub p_fa_asv: f64,
    pub p_miss_spoof_asv: f64,
}

impl Default for AsvOperatingPoint {
    /// Challenge-style priors and costs with illustrative ASV error rates;
    /// absolute t-DCF values always depend on this configuration.
    fn default() -> Self {
        AsvOperatingPoint {
            p_target: 0.9405,
            p_nontarget: 0.0095,
            p_spoof: 0.05,
            c_miss_asv: 1.0,
            c_fa_asv: 10.0,
            c_miss_cm: 1.0,
            c_fa_cm: 10.0,
            p_miss_asv: 0.05,
            p_fa_asv: 0.05,
            p_miss_spoof_asv: 0.5,
        }
    }
}

impl AsvOperatingPoint {
    pub fn validate(&self) -> Result<()> {
        let prior_sum = self.p_target + self.p_nontarget + self.p_spoof;
        if (prior_sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "asv priors sum to {prior_sum}, expected 1"
            )));
        }
        for (name, v) in [
            ("p_miss_asv", self.p_miss_asv),
            ("p_fa_asv", self.p_fa_asv),
            ("p_miss_spoof_asv", self.p_miss_spoof_asv),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} outside [0, 1]")));
            }
        }
        for (name, v) in [
            ("c_miss_asv", self.c_miss_asv),
            ("c_fa_asv", self.c_fa_asv),
            ("c_miss_cm", self.c_miss_cm),
            ("c_fa_cm", self.c_fa_cm),
        ] {
            if v <= 0.0 {
                return Err(Error::Config(format!("cost {name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// The two effective cost weights (C1, C2).
    pub fn cost_weights(&self) -> Result<(f64, f64)> {
        self.validate()?;
        let c1 = self.p_target * (self.c_miss_cm - self.c_miss_asv * self.p_miss_asv)
            - self.p_nontarget * self.c_fa_asv * self.p_fa_asv;
        let c2 = self.c_fa_cm * self.p_spoof * (1.0 - self.p_miss_spoof_asv);
        if c1 <= 0.0 || c2 <= 0.0 {
            return Err(Error::Config(format!(
                "degenerate operating point: C1 = {c1}, C2 = {c2} (both must be positive)"
            )));
        }
        Ok((c1, c2))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let op: AsvOperatingPoint =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{path:?}: {e}")))?;
        op.validate()?;
        Ok(op)
    }
}

/// Minimum normalized t-DCF over all candidate thresholds, with the argmin
/// threshold.
pub fn compute_min_tdcf(cm_scores: &ScoreFile, op: &AsvOperatingPoint) -> Result<(f64, f64)> {
    let (c1, c2) = op.cost_weights()?;
    let norm = c1.min(c2);
    let curve = det_curve(cm_scores)?;

    // the curve's P_miss is FRR, P_fa is FAR; thresholds cover -inf and
    // every distinct score; add the all-reject extreme explicitly
    let mut best = (c1 * 1.0 + c2 * 0.0) / norm; // t = +inf
    let mut best_tau = f64::INFINITY;
    for i in 0..curve.thresholds.len() {
        let cost = (c1 * curve.frr[i] + c2 * curve.far[i]) / norm;
        if cost < best {
            best = cost;
            best_tau = curve.thresholds[i];
        }
    }
    Ok((best, best_tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;
    use crate::metrics::ScoreRow;

    fn score_file(bona: &[f64], spoof: &[f64]) -> ScoreFile {
        let mut rows = Vec::new();
        for (i, &s) in bona.iter().enumerate() {
            rows.push(ScoreRow {
                utterance_id: format!("b{i}"),
                attack_id: "-".into(),
                label: Label::Bonafide,
                score: s,
            });
        }
        for (i, &s) in spoof.iter().enumerate() {
            rows.push(ScoreRow {
                utterance_id: format!("s{i}"),
                attack_id: "A01".into(),
                label: Label::Spoof,
                score: s,
            });
        }
        ScoreFile::new(rows).unwrap()
    }

    #[test]
    fn perfect_separation_has_zero_cost() {
        let (tdcf, _) =
            compute_min_tdcf(&score_file(&[0.9, 0.8], &[0.1, 0.2]), &AsvOperatingPoint::default())
                .unwrap();
        assert_eq!(tdcf, 0.0);
    }

    #[test]
    fn identical_scores_cost_exactly_one() {
        // only the degenerate all-accept / all-reject points exist, so the
        // minimum is min(C1, C2)/min(C1, C2)
        let (tdcf, _) = compute_min_tdcf(
            &score_file(&[0.5, 0.5, 0.5], &[0.5, 0.5]),
            &AsvOperatingPoint::default(),
        )
        .unwrap();
        assert!((tdcf - 1.0).abs() < 1e-15, "tdcf {tdcf}");
    }

    #[test]
    fn degenerate_operating_point_is_rejected() {
        let op = AsvOperatingPoint {
            p_miss_spoof_asv: 1.0, // kills C2
            ..AsvOperatingPoint::default()
        };
        assert!(compute_min_tdcf(&score_file(&[1.0], &[0.0]), &op).is_err());
        let op = AsvOperatingPoint {
            p_target: 0.05,
            p_nontarget: 0.9,
            p_fa_asv: 1.0, // C1 goes negative
            ..AsvOperatingPoint::default()
        };
        assert!(compute_min_tdcf(&score_file(&[1.0], &[0.0]), &op).is_err());
    }

    #[test]
    fn priors_must_sum_to_one() {
        let op = AsvOperatingPoint {
            p_target: 0.9,
            ..AsvOperatingPoint::default()
        };
        assert!(op.validate().is_err());
    }

    /// Oracle: evaluate the normalized cost at every candidate threshold by
    /// brute-force counting and take the minimum.
    pub(crate) fn oracle_min_tdcf(bona: &[f64], spoof: &[f64], op: &AsvOperatingPoint) -> f64 {
        let (c1, c2) = op.cost_weights().unwrap();
        let norm = c1.min(c2);
        let mut cands: Vec<f64> = bona.iter().chain(spoof.iter()).copied().collect();
        cands.sort_by(|a, b| a.total_cmp(b));
        cands.dedup();
        let mut best = c1 / norm; // all-reject
        let all_accept = c2 / norm;
        if all_accept < best {
            best = all_accept;
        }
        for &t in &cands {
            let p_miss = bona.iter().filter(|&&s| s < t).count() as f64 / bona.len() as f64;
            let p_fa = spoof.iter().filter(|&&s| s >= t).count() as f64 / spoof.len() as f64;
            let cost = (c1 * p_miss + c2 * p_fa) / norm;
            if cost < best {
                best = cost;
            }
        }
        best
    }

    #[test]
    fn matches_oracle_bit_exactly_on_random_sets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(31);
        let op = AsvOperatingPoint::default();
        for _ in 0..200 {
            let nb = rng.gen_range(1..30);
            let ns = rng.gen_range(1..30);
            let bona: Vec<f64> = (0..nb).map(|_| rng.gen_range(0..15) as f64 / 7.0).collect();
            let spoof: Vec<f64> = (0..ns).map(|_| rng.gen_range(0..15) as f64 / 7.0).collect();
            let (tdcf, _) = compute_min_tdcf(&score_file(&bona, &spoof), &op).unwrap();
            let want = oracle_min_tdcf(&bona, &spoof, &op);
            assert_eq!(tdcf, want, "bona {bona:?} spoof {spoof:?}");
        }
    }

    #[test]
    fn min_is_a_lower_bound_with_equality_at_argmin() {
        let bona = [0.9, 0.3, 0.7, 0.65];
        let spoof = [0.2, 0.6, 0.35];
        let sf = score_file(&bona, &spoof);
        let op = AsvOperatingPoint::default();
        let (c1, c2) = op.cost_weights().unwrap();
        let norm = c1.min(c2);
        let (min_tdcf, tau) = compute_min_tdcf(&sf, &op).unwrap();
        let mut cands: Vec<f64> = bona.iter().chain(spoof.iter()).copied().collect();
        cands.push(f64::NEG_INFINITY);
        let mut hit = false;
        for t in cands {
            let p_miss = bona.iter().filter(|&&s| s < t).count() as f64 / bona.len() as f64;
            let p_fa = spoof.iter().filter(|&&s| s >= t).count() as f64 / spoof.len() as f64;
            let cost = (c1 * p_miss + c2 * p_fa) / norm;
            assert!(min_tdcf <= cost + 1e-15);
            if t == tau {
                assert!((cost - min_tdcf).abs() < 1e-15);
                hit = true;
            }
        }
        assert!(hit, "argmin threshold {tau} not among candidates");
    }
}
