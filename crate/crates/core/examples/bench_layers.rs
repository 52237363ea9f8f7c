//! Per-layer timing at realistic shapes.

use std::time::Instant;

use phasefuse_core::nn::{
    BatchNorm2d, Conv2d, Layer, Mode, Relu, Res2NetBlock, SeBlock, Tensor4,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn time_layer(name: &str, layer: &mut dyn Layer<f32>, x: &Tensor4<f32>, reps: usize) {
    let y = layer.forward(x, Mode::Train).unwrap();
    let g = y.clone();
    let t0 = Instant::now();
    for _ in 0..reps {
        let _ = layer.forward(x, Mode::Train).unwrap();
    }
    let fwd = t0.elapsed().as_secs_f64() / reps as f64;
    let t1 = Instant::now();
    for _ in 0..reps {
        let _ = layer.backward(&g).unwrap();
    }
    let bwd = t1.elapsed().as_secs_f64() / reps as f64;
    println!("{name:<26} fwd {:>7.2}ms bwd {:>7.2}ms", fwd * 1e3, bwd * 1e3);
}

fn main() {
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let d = 16usize;

    // shapes mirror the lite backend on D=16 inputs
    let x_in = Tensor4::from_fn([32, 2, d, 400], || rng.gen_range(-1.0f32..1.0));
    let x_stem = Tensor4::from_fn([32, 8, d / 2, 200], || rng.gen_range(-1.0f32..1.0));
    let x_s2 = Tensor4::from_fn([32, 16, d / 4, 100], || rng.gen_range(-1.0f32..1.0));
    let x_s3 = Tensor4::from_fn([32, 32, d / 8, 50], || rng.gen_range(-1.0f32..1.0));
    let x_ph = Tensor4::from_fn([32, 1, d, 400], || rng.gen_range(-1.0f32..1.0));
    let x_ph4 = Tensor4::from_fn([32, 4, d, 400], || rng.gen_range(-1.0f32..1.0));

    let mut stem = Conv2d::<f32>::new("stem", 2, 8, (3, 3), (2, 2), (1, 1), &mut rng);
    time_layer("stem conv 2->8 s2", &mut stem, &x_in, 5);

    let mut bn = BatchNorm2d::<f32>::new("bn", 8);
    time_layer("bn(8) on stem out", &mut bn, &x_stem, 5);

    let mut relu = Relu::<f32>::new("r");
    time_layer("relu on stem out", &mut relu, &x_stem, 5);

    let mut b1 = Res2NetBlock::<f32>::new("b1", 8, 4, 4, &mut rng).unwrap();
    time_layer("res2net(8) stage1", &mut b1, &x_stem, 5);

    let mut b2 = Res2NetBlock::<f32>::new("b2", 16, 4, 4, &mut rng).unwrap();
    time_layer("res2net(16) stage2", &mut b2, &x_s2, 5);

    let mut b3 = Res2NetBlock::<f32>::new("b3", 32, 4, 4, &mut rng).unwrap();
    time_layer("res2net(32) stage3", &mut b3, &x_s3, 5);

    let mut se = SeBlock::<f32>::new("se", 8, 4, &mut rng);
    time_layer("se(8) on stem out", &mut se, &x_stem, 5);

    let mut pc1 = Conv2d::<f32>::new("pc1", 1, 4, (3, 3), (1, 1), (1, 1), &mut rng);
    time_layer("phase conv1 1->4", &mut pc1, &x_ph, 5);

    let mut pc2 = Conv2d::<f32>::new("pc2", 4, 4, (3, 3), (1, 1), (1, 1), &mut rng);
    time_layer("phase conv2 4->4", &mut pc2, &x_ph4, 5);

    let mut pbn = BatchNorm2d::<f32>::new("pbn", 4);
    time_layer("phase bn(4)", &mut pbn, &x_ph4, 5);
}
