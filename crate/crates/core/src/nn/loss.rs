//! Two-class softmax cross-entropy.

use crate::error::{Error, Result};
use crate::nn::{Scalar, Tensor4};

/// Mean cross-entropy over the batch. `logits` is `B x 2 x 1 x 1`, labels
/// are 0 (spoof) or 1 (bona fide). Returns the loss and the logit gradient
/// `(softmax - onehot)/B`.
pub fn softmax_xent<S: Scalar>(logits: &Tensor4<S>, labels: &[usize]) -> Result<(S, Tensor4<S>)> {
    let [b, c, h, w] = logits.shape();
    if c != 2 || h != 1 || w != 1 {
        return Err(Error::Shape(format!(
            "expected B x 2 x 1 x 1 logits, got {:?}",
            logits.shape()
        )));
    }
    if labels.len() != b {
        return Err(Error::Shape(format!(
            "{} labels for batch of {b}",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Config(format!("label {bad} outside {{0, 1}}")));
    }

    let b_s = S::from_f64(b as f64);
    let mut loss = S::ZERO;
    let mut grad = Tensor4::zeros(logits.shape());
    for bi in 0..b {
        let z0 = logits.at(bi, 0, 0, 0);
        let z1 = logits.at(bi, 1, 0, 0);
        let m = z0.maxv(z1);
        let e0 = (z0 - m).exp();
        let e1 = (z1 - m).exp();
        let denom = e0 + e1;
        let (p0, p1) = (e0 / denom, e1 / denom);
        let y = labels[bi];
        let log_p_true = if y == 0 { p0.ln() } else { p1.ln() };
        loss -= log_p_true;
        *grad.at_mut(bi, 0, 0, 0) = (p0 - if y == 0 { S::ONE } else { S::ZERO }) / b_s;
        *grad.at_mut(bi, 1, 0, 0) = (p1 - if y == 1 { S::ONE } else { S::ZERO }) / b_s;
    }
    Ok((loss / b_s, grad))
}

/// Log-probability of the bona fide class (index 1) for each batch row:
/// the detection score.
pub fn bonafide_log_prob<S: Scalar>(logits: &Tensor4<S>) -> Result<Vec<f64>> {
    let [b, c, h, w] = logits.shape();
    if c != 2 || h != 1 || w != 1 {
        return Err(Error::Shape(format!(
            "expected B x 2 x 1 x 1 logits, got {:?}",
            logits.shape()
        )));
    }
    Ok((0..b)
        .map(|bi| {
            let z0 = logits.at(bi, 0, 0, 0).to_f64();
            let z1 = logits.at(bi, 1, 0, 0).to_f64();
            let m = z0.max(z1);
            z1 - m - ((z0 - m).exp() + (z1 - m).exp()).ln()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln2() {
        let logits = Tensor4::from_vec([1, 2, 1, 1], vec![0.0f64, 0.0]).unwrap();
        let (loss, _) = softmax_xent(&logits, &[0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        let (loss1, _) = softmax_xent(&logits, &[1]).unwrap();
        assert!((loss1 - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn saturated_correct_logits_give_near_zero_loss() {
        let logits = Tensor4::from_vec([1, 2, 1, 1], vec![-30.0f64, 30.0]).unwrap();
        let (loss, _) = softmax_xent(&logits, &[1]).unwrap();
        assert!(loss < 1e-12, "loss {loss}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let base = vec![0.3f64, -0.7, 1.2, 0.4];
        let labels = [1usize, 0];
        let logits = Tensor4::from_vec([2, 2, 1, 1], base.clone()).unwrap();
        let (_, grad) = softmax_xent(&logits, &labels).unwrap();
        let eps = 1e-7;
        for i in 0..4 {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[i] += eps;
            minus[i] -= eps;
            let (lp, _) =
                softmax_xent(&Tensor4::from_vec([2, 2, 1, 1], plus).unwrap(), &labels).unwrap();
            let (lm, _) =
                softmax_xent(&Tensor4::from_vec([2, 2, 1, 1], minus).unwrap(), &labels).unwrap();
            let num = (lp - lm) / (2.0 * eps);
            let ana = grad.data()[i];
            assert!(
                (num - ana).abs() / num.abs().max(1e-8) < 1e-8,
                "coord {i}: numeric {num} analytic {ana}"
            );
        }
    }

    #[test]
    fn score_is_log_softmax_of_bonafide_class() {
        let logits = Tensor4::from_vec([1, 2, 1, 1], vec![0.0f64, 0.0]).unwrap();
        let s = bonafide_log_prob(&logits).unwrap();
        assert!((s[0] - (-std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn bad_labels_rejected() {
        let logits = Tensor4::from_vec([1, 2, 1, 1], vec![0.0f64, 0.0]).unwrap();
        assert!(softmax_xent(&logits, &[2]).is_err());
        assert!(softmax_xent(&logits, &[]).is_err());
    }
}
