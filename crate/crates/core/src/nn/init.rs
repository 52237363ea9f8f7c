//! Weight initialization. All draws happen in f64 from a caller-supplied
//! seeded generator, so a seed fully determines the model.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::nn::Scalar;

/// Kaiming-uniform (fan-in, ReLU gain): U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
pub fn kaiming_uniform<S: Scalar>(n: usize, fan_in: usize, rng: &mut ChaCha12Rng) -> Vec<S> {
    let bound = (6.0 / fan_in.max(1) as f64).sqrt();
    (0..n)
        .map(|_| S::from_f64(rng.gen_range(-bound..bound)))
        .collect()
}

/// Bias init: U(-1/sqrt(fan_in), +1/sqrt(fan_in)).
pub fn bias_uniform<S: Scalar>(n: usize, fan_in: usize, rng: &mut ChaCha12Rng) -> Vec<S> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    (0..n)
        .map(|_| S::from_f64(rng.gen_range(-bound..bound)))
        .collect()
}
