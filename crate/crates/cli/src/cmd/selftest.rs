//! Built-in health checks: finite-difference gradient verification for
//! every layer type and a full fusion model, metric oracle comparisons on
//! random score sets, and a threading-determinism check.

use clap::Args;
use phasefuse_core::dataset::Label;
use phasefuse_core::metrics::{compute_eer, compute_min_tdcf, AsvOperatingPoint, ScoreFile, ScoreRow};
use phasefuse_core::models::{BackendPreset, FrameworkKind, FusionModel, ModelConfig, PairingConfig};
use phasefuse_core::nn::{
    check_layer_gradients, grad_check, softmax_xent, AdaptiveAvgPool2d, BatchNorm2d, Conv2d,
    GlobalAvgPool, HasParams, Layer, Linear, Mode, Relu, Res2NetBlock, SeBlock, Sequential,
    Sigmoid, Tensor4,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Args, serde::Serialize)]
pub struct SelftestArgs {
    /// Gradient probe coordinates per parameter tensor.
    #[arg(long, default_value_t = 30)]
    pub coords: usize,
}

struct Reporter {
    failures: usize,
}

impl Reporter {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        let status = if ok { "pass" } else { "FAIL" };
        println!("[{status}] {name}: {detail}");
        if !ok {
            self.failures += 1;
        }
    }
}

fn random_tensor(shape: [usize; 4], seed: u64) -> Tensor4<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Tensor4::from_fn(shape, || rng.gen_range(-1.0..1.0))
}

fn layer_checks(rep: &mut Reporter, coords: usize) -> anyhow::Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let tol = 1e-5;
    let cases: Vec<(&str, Box<dyn Layer<f64>>, [usize; 4])> = vec![
        (
            "conv2d",
            Box::new(Conv2d::new("c", 3, 4, (3, 3), (1, 1), (1, 1), &mut rng)),
            [2, 3, 5, 6],
        ),
        (
            "conv2d strided",
            Box::new(Conv2d::new("cs", 2, 3, (3, 3), (2, 2), (1, 1), &mut rng)),
            [2, 2, 7, 9],
        ),
        ("batchnorm2d", Box::new(BatchNorm2d::new("bn", 3)), [2, 3, 4, 4]),
        ("relu", Box::new(Relu::new("r")), [2, 3, 4, 5]),
        ("sigmoid", Box::new(Sigmoid::new("s")), [2, 3, 4, 5]),
        (
            "adaptive_avg_pool2d",
            Box::new(AdaptiveAvgPool2d::new("p", (3, 3))),
            [2, 2, 5, 7],
        ),
        ("global_avg_pool", Box::new(GlobalAvgPool::new("g")), [2, 3, 4, 4]),
        ("linear", Box::new(Linear::new("l", 12, 5, &mut rng)), [2, 3, 2, 2]),
        (
            "se_block",
            Box::new(SeBlock::new("se", 8, 4, &mut rng)),
            [2, 8, 4, 4],
        ),
        (
            "res2net_block",
            Box::new(Res2NetBlock::new("r2", 8, 4, 4, &mut rng)?),
            [2, 8, 6, 6],
        ),
    ];
    for (name, mut layer, shape) in cases {
        let x = random_tensor(shape, 0x5EED ^ shape[3] as u64);
        let report = check_layer_gradients(layer.as_mut(), &x, Mode::Train, coords, 1e-5, 3)?;
        rep.check(
            &format!("gradients: {name}"),
            report.max_rel_error < tol,
            format!(
                "max rel error {:.2e} over {} coords (tolerance {tol:.0e})",
                report.max_rel_error, report.coords_checked
            ),
        );
    }
    Ok(())
}

fn full_model_check(rep: &mut Reporter, coords: usize) -> anyhow::Result<()> {
    let config = ModelConfig::new(
        FrameworkKind::CPhaseNetworkConcat,
        PairingConfig::controlled(8),
        BackendPreset::Lite,
        5,
    );
    let mut model: FusionModel<f64> = FusionModel::build(&config)?;
    let mag = random_tensor([2, 1, 8, 400], 91);
    let phase = random_tensor([2, 1, 8, 400], 92);
    let labels = [1usize, 0];

    let report = grad_check(
        &mut model,
        |m| {
            let logits = m.forward(&mag, Some(&phase), Mode::Train)?;
            Ok(softmax_xent(&logits, &labels)?.0)
        },
        |m| {
            m.zero_grad();
            let logits = m.forward(&mag, Some(&phase), Mode::Train)?;
            let (loss, grad) = softmax_xent(&logits, &labels)?;
            m.backward(&grad)?;
            Ok(loss)
        },
        coords,
        1e-5,
        17,
    )?;
    rep.check(
        "gradients: full framework-c model",
        report.max_rel_error < 1e-4,
        format!(
            "max rel error {:.2e} over {} coords (tolerance 1e-4)",
            report.max_rel_error, report.coords_checked
        ),
    );
    Ok(())
}

fn oracle_eer(bona: &[f64], spoof: &[f64]) -> f64 {
    let mut cands: Vec<f64> = bona.iter().chain(spoof.iter()).copied().collect();
    cands.sort_by(|a, b| a.total_cmp(b));
    cands.dedup();
    let mut pts: Vec<(f64, f64)> = vec![(1.0, 0.0)];
    for &t in &cands {
        let far = spoof.iter().filter(|&&s| s >= t).count() as f64 / spoof.len() as f64;
        let frr = bona.iter().filter(|&&s| s < t).count() as f64 / bona.len() as f64;
        pts.push((far, frr));
    }
    for i in 0..pts.len() {
        let (f, r) = pts[i];
        if f <= r {
            if f == r {
                return f;
            }
            let (f0, r0) = pts[i - 1];
            let t = (f0 - r0) / ((f0 - r0) - (f - r));
            return f0 + t * (f - f0);
        }
    }
    1.0
}

fn oracle_tdcf(bona: &[f64], spoof: &[f64], op: &AsvOperatingPoint) -> f64 {
    let (c1, c2) = op.cost_weights().unwrap();
    let norm = c1.min(c2);
    let mut cands: Vec<f64> = bona.iter().chain(spoof.iter()).copied().collect();
    cands.sort_by(|a, b| a.total_cmp(b));
    cands.dedup();
    let mut best = (c1 / norm).min(c2 / norm);
    for &t in &cands {
        let p_miss = bona.iter().filter(|&&s| s < t).count() as f64 / bona.len() as f64;
        let p_fa = spoof.iter().filter(|&&s| s >= t).count() as f64 / spoof.len() as f64;
        best = best.min((c1 * p_miss + c2 * p_fa) / norm);
    }
    best
}

fn metric_checks(rep: &mut Reporter) -> anyhow::Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(2718);
    let op = AsvOperatingPoint::default();
    let trials = 300;
    let mut max_eer_diff = 0.0f64;
    let mut tdcf_exact = true;
    for _ in 0..trials {
        let nb = rng.gen_range(1..100);
        let ns = rng.gen_range(1..100);
        let bona: Vec<f64> = (0..nb).map(|_| rng.gen_range(0..40) as f64 / 17.0).collect();
        let spoof: Vec<f64> = (0..ns).map(|_| rng.gen_range(0..40) as f64 / 17.0).collect();
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
        let sf = ScoreFile::new(rows)?;
        let (eer, _) = compute_eer(&sf)?;
        max_eer_diff = max_eer_diff.max((eer - oracle_eer(&bona, &spoof)).abs());
        let (tdcf, _) = compute_min_tdcf(&sf, &op)?;
        if tdcf != oracle_tdcf(&bona, &spoof, &op) {
            tdcf_exact = false;
        }
    }
    rep.check(
        "metrics: EER vs sweep oracle",
        max_eer_diff < 1e-12,
        format!("max |diff| {max_eer_diff:.2e} over {trials} random sets"),
    );
    rep.check(
        "metrics: min t-DCF vs sweep oracle",
        tdcf_exact,
        format!("bit-exact over {trials} random sets"),
    );
    Ok(())
}

fn determinism_check(rep: &mut Reporter) -> anyhow::Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    let mut seq = Sequential::<f32>::new("net");
    seq.push(Box::new(Conv2d::new("c1", 2, 8, (3, 3), (2, 4), (1, 1), &mut rng)));
    seq.push(Box::new(BatchNorm2d::new("b1", 8)));
    seq.push(Box::new(Relu::new("r1")));
    seq.push(Box::new(Conv2d::new("c2", 8, 4, (3, 3), (1, 1), (1, 1), &mut rng)));
    let mut r2 = ChaCha12Rng::seed_from_u64(78);
    let x = Tensor4::<f32>::from_fn([4, 2, 16, 400], || r2.gen_range(-1.0..1.0));

    phasefuse_core::nn::set_single_threaded(false);
    let y_par = seq.forward(&x, Mode::Train)?;
    let g_par = seq.backward(&y_par)?;
    phasefuse_core::nn::set_single_threaded(true);
    let y_seq = seq.forward(&x, Mode::Train)?;
    let g_seq = seq.backward(&y_seq)?;
    phasefuse_core::nn::set_single_threaded(false);

    rep.check(
        "determinism: threaded == single-threaded",
        y_par == y_seq && g_par == g_seq,
        "forward and backward bit-identical across threading modes".into(),
    );
    Ok(())
}

pub fn run(args: SelftestArgs) -> anyhow::Result<()> {
    let mut rep = Reporter { failures: 0 };
    layer_checks(&mut rep, args.coords)?;
    full_model_check(&mut rep, args.coords.min(12))?;
    metric_checks(&mut rep)?;
    determinism_check(&mut rep)?;
    if rep.failures > 0 {
        anyhow::bail!("{} selftest check(s) failed", rep.failures);
    }
    println!("all selftest checks passed");
    Ok(())
}
