//! Central finite-difference gradient verification (f64 only).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::Result;
use crate::nn::{HasParams, Layer, Mode, Tensor4};

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub coords_checked: usize,
}

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-4)
}

fn with_param_coord<M: HasParams<f64> + ?Sized>(
    model: &mut M,
    target_param: usize,
    coord: usize,
    f: impl FnOnce(&mut f64),
) {
    let mut f = Some(f);
    let mut idx = 0usize;
    model.visit_params_mut(&mut |p| {
        if idx == target_param {
            if let Some(f) = f.take() {
                f(&mut p.value[coord]);
            }
        }
        idx += 1;
    });
}

/// Compares analytic parameter gradients against central differences over a
/// random coordinate subset (at least `coords_per_param` per parameter
/// tensor, or all of them when smaller).
///
/// `forward_backward` must zero the gradients, run the full forward/backward
/// and return the loss; `loss_only` must run the forward alone.
pub fn grad_check<M: HasParams<f64> + ?Sized>(
    model: &mut M,
    mut loss_only: impl FnMut(&mut M) -> Result<f64>,
    mut forward_backward: impl FnMut(&mut M) -> Result<f64>,
    coords_per_param: usize,
    eps: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    forward_backward(model)?;

    let mut analytic: Vec<Vec<f64>> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    model.visit_params(&mut |p| {
        analytic.push(p.grad.clone());
        sizes.push(p.numel());
    });

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut max_rel = 0.0f64;
    let mut checked = 0usize;
    for (pi, &n) in sizes.iter().enumerate() {
        let coords: Vec<usize> = if n <= coords_per_param {
            (0..n).collect()
        } else {
            (0..coords_per_param).map(|_| rng.gen_range(0..n)).collect()
        };
        for coord in coords {
            with_param_coord(model, pi, coord, |v| *v += eps);
            let loss_plus = loss_only(model)?;
            with_param_coord(model, pi, coord, |v| *v -= 2.0 * eps);
            let loss_minus = loss_only(model)?;
            with_param_coord(model, pi, coord, |v| *v += eps);

            let numeric = (loss_plus - loss_minus) / (2.0 * eps);
            max_rel = max_rel.max(rel_error(analytic[pi][coord], numeric));
            checked += 1;
        }
    }
    Ok(GradCheckReport {
        max_rel_error: max_rel,
        coords_checked: checked,
    })
}

/// Gradient-checks a single layer under the probe loss `sum(R * out)` with a
/// fixed random `R`; verifies parameter gradients and the returned input
/// gradient.
pub fn check_layer_gradients(
    layer: &mut dyn Layer<f64>,
    input: &Tensor4<f64>,
    mode: Mode,
    coords_per_param: usize,
    eps: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xABCD);
    let out = layer.forward(input, mode)?;
    let probe = Tensor4::from_fn(out.shape(), || rng.gen_range(-1.0..1.0));

    let loss_of = |layer: &mut dyn Layer<f64>, x: &Tensor4<f64>| -> Result<f64> {
        let y = layer.forward(x, mode)?;
        Ok(y.data().iter().zip(probe.data()).map(|(a, b)| a * b).sum())
    };

    // parameter gradients
    let report = {
        let x = input.clone();
        let probe_ref = &probe;
        grad_check(
            layer,
            |l| {
                let y = l.forward(&x, mode)?;
                Ok(y.data().iter().zip(probe_ref.data()).map(|(a, b)| a * b).sum())
            },
            |l| {
                l.zero_grad();
                let y = l.forward(&x, mode)?;
                let loss = y.data().iter().zip(probe_ref.data()).map(|(a, b)| a * b).sum();
                l.backward(probe_ref)?;
                Ok(loss)
            },
            coords_per_param,
            eps,
            seed,
        )?
    };

    // input gradient
    layer.zero_grad();
    layer.forward(input, mode)?;
    let grad_in = layer.backward(&probe)?;
    let n = input.numel();
    let n_coords = coords_per_param.min(n);
    let mut max_rel = report.max_rel_error;
    let mut checked = report.coords_checked;
    let mut x = input.clone();
    for _ in 0..n_coords {
        let coord = rng.gen_range(0..n);
        x.data_mut()[coord] += eps;
        let lp = loss_of(layer, &x)?;
        x.data_mut()[coord] -= 2.0 * eps;
        let lm = loss_of(layer, &x)?;
        x.data_mut()[coord] += eps;
        let numeric = (lp - lm) / (2.0 * eps);
        max_rel = max_rel.max(rel_error(grad_in.data()[coord], numeric));
        checked += 1;
    }

    Ok(GradCheckReport {
        max_rel_error: max_rel,
        coords_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{
        AdaptiveAvgPool2d, BatchNorm2d, Conv2d, GlobalAvgPool, Linear, Relu, Res2NetBlock,
        SeBlock, Sequential, Sigmoid,
    };
    use crate::error::Result as CResult;

    fn rng() -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(7)
    }

    fn random_input(shape: [usize; 4], seed: u64) -> Tensor4<f64> {
        let mut r = ChaCha12Rng::seed_from_u64(seed);
        Tensor4::from_fn(shape, || r.gen_range(-1.0..1.0))
    }

    #[test]
    fn linear_layer_is_exactly_linear() {
        // With a purely linear map the central difference has no truncation
        // term, so a wide epsilon leaves only negligible cancellation noise.
        let mut lin = Linear::<f64>::new("l", 12, 5, &mut rng());
        let x = random_input([3, 3, 2, 2], 1);
        let rep =
            check_layer_gradients(&mut lin, &x, Mode::Train, 60, 1e-2, 2).unwrap();
        assert!(rep.max_rel_error < 1e-9, "rel {}", rep.max_rel_error);
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let mut conv = Conv2d::<f64>::new("c", 3, 2, (3, 3), (1, 1), (1, 1), &mut rng());
        let x = random_input([2, 3, 5, 5], 3);
        let rep =
            check_layer_gradients(&mut conv, &x, Mode::Train, 50, 1e-5, 4).unwrap();
        assert!(rep.max_rel_error < 1e-6, "rel {}", rep.max_rel_error);
        assert!(rep.coords_checked >= 100);
    }

    #[test]
    fn strided_conv_gradients_match() {
        let mut conv = Conv2d::<f64>::new("c", 2, 3, (3, 3), (2, 2), (1, 1), &mut rng());
        let x = random_input([2, 2, 7, 9], 5);
        let rep =
            check_layer_gradients(&mut conv, &x, Mode::Train, 50, 1e-5, 6).unwrap();
        assert!(rep.max_rel_error < 1e-6, "rel {}", rep.max_rel_error);
    }

    #[test]
    fn batchnorm_train_and_eval_gradients_match() {
        let mut bn = BatchNorm2d::<f64>::new("bn", 3);
        let x = random_input([2, 3, 4, 4], 7);
        let rep = check_layer_gradients(&mut bn, &x, Mode::Train, 50, 1e-5, 8).unwrap();
        assert!(rep.max_rel_error < 1e-5, "train rel {}", rep.max_rel_error);
        // populate running stats, then check eval-mode backward
        let mut r = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..5 {
            let xx = Tensor4::from_fn([2, 3, 4, 4], || r.gen_range(-1.0..1.0));
            bn.forward(&xx, Mode::Train).unwrap();
        }
        let rep = check_layer_gradients(&mut bn, &x, Mode::Eval, 50, 1e-5, 10).unwrap();
        assert!(rep.max_rel_error < 1e-5, "eval rel {}", rep.max_rel_error);
    }

    #[test]
    fn activations_and_pools_match() {
        let x = random_input([2, 3, 6, 7], 11);
        let mut relu = Relu::<f64>::new("r");
        let rep = check_layer_gradients(&mut relu, &x, Mode::Train, 60, 1e-5, 12).unwrap();
        assert!(rep.max_rel_error < 1e-6, "relu {}", rep.max_rel_error);

        let mut sig = Sigmoid::<f64>::new("s");
        let rep = check_layer_gradients(&mut sig, &x, Mode::Train, 60, 1e-5, 13).unwrap();
        assert!(rep.max_rel_error < 1e-6, "sigmoid {}", rep.max_rel_error);

        let mut pool = AdaptiveAvgPool2d::<f64>::new("p", (3, 3));
        let rep = check_layer_gradients(&mut pool, &x, Mode::Train, 60, 1e-5, 14).unwrap();
        assert!(rep.max_rel_error < 1e-6, "adaptive {}", rep.max_rel_error);

        let mut gp = GlobalAvgPool::<f64>::new("g");
        let rep = check_layer_gradients(&mut gp, &x, Mode::Train, 60, 1e-5, 15).unwrap();
        assert!(rep.max_rel_error < 1e-6, "global {}", rep.max_rel_error);
    }

    #[test]
    fn se_block_gradients_match() {
        let mut se = SeBlock::<f64>::new("se", 8, 4, &mut rng());
        let x = random_input([2, 8, 4, 4], 17);
        let rep = check_layer_gradients(&mut se, &x, Mode::Train, 50, 1e-5, 18).unwrap();
        assert!(rep.max_rel_error < 1e-5, "rel {}", rep.max_rel_error);
    }

    #[test]
    fn res2net_block_gradients_match() {
        let mut block = Res2NetBlock::<f64>::new("r2", 8, 4, 4, &mut rng()).unwrap();
        let x = random_input([2, 8, 6, 6], 19);
        let rep = check_layer_gradients(&mut block, &x, Mode::Train, 50, 1e-5, 20).unwrap();
        assert!(rep.max_rel_error < 1e-5, "rel {}", rep.max_rel_error);
    }

    #[test]
    fn sequential_chain_gradients_match() {
        let mut seq = Sequential::<f64>::new("net");
        let mut r = rng();
        seq.push(Box::new(Conv2d::new("c1", 1, 4, (3, 3), (1, 1), (1, 1), &mut r)));
        seq.push(Box::new(BatchNorm2d::new("b1", 4)));
        seq.push(Box::new(Relu::new("r1")));
        seq.push(Box::new(Conv2d::new("c2", 4, 1, (1, 1), (1, 1), (0, 0), &mut r)));
        let x = random_input([2, 1, 6, 6], 21);
        let rep = check_layer_gradients(&mut seq, &x, Mode::Train, 40, 1e-5, 22).unwrap();
        assert!(rep.max_rel_error < 1e-5, "rel {}", rep.max_rel_error);
    }

    /// Negative control: a conv whose backward scales the weight gradient
    /// must be flagged with a large relative error.
    #[test]
    fn corrupted_backward_is_detected() {
        struct CorruptedConv {
            inner: Conv2d<f64>,
        }
        impl HasParams<f64> for CorruptedConv {
            fn visit_params(&self, f: &mut dyn FnMut(&crate::nn::Param<f64>)) {
                self.inner.visit_params(f);
            }
            fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut crate::nn::Param<f64>)) {
                self.inner.visit_params_mut(f);
            }
        }
        impl Layer<f64> for CorruptedConv {
            fn name(&self) -> &str {
                "corrupted"
            }
            fn forward(&mut self, x: &Tensor4<f64>, mode: Mode) -> CResult<Tensor4<f64>> {
                self.inner.forward(x, mode)
            }
            fn backward(&mut self, g: &Tensor4<f64>) -> CResult<Tensor4<f64>> {
                let out = self.inner.backward(g)?;
                self.inner.visit_params_mut(&mut |p| {
                    p.grad.iter_mut().for_each(|v| *v *= 1.1);
                });
                Ok(out)
            }
            fn clone_box(&self) -> Box<dyn Layer<f64>> {
                Box::new(CorruptedConv {
                    inner: self.inner.clone(),
                })
            }
        }

        let mut bad = CorruptedConv {
            inner: Conv2d::new("c", 2, 2, (3, 3), (1, 1), (1, 1), &mut rng()),
        };
        let x = random_input([1, 2, 5, 5], 23);
        let rep = check_layer_gradients(&mut bad, &x, Mode::Train, 50, 1e-5, 24).unwrap();
        assert!(rep.max_rel_error > 1e-2, "rel {}", rep.max_rel_error);
    }
}
