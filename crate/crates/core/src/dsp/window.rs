/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::hann;

    #[test]
    fn endpoints_and_midpoint() {
        let w = hann(8);
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn periodic_sum_is_half_n() {
        let w = hann(1024);
        let s: f64 = w.iter().sum();
        assert!((s - 512.0).abs() < 1e-9);
    }
}
