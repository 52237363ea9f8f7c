//! Repeated-seed experiment matrix with "average(best)" reporting.

use crate::error::{Error, Result};
use crate::metrics::{compute_eer, compute_min_tdcf, AsvOperatingPoint};
use crate::models::{BackendPreset, FrameworkKind, ModelConfig, PairingConfig};
use crate::train::{evaluate_dataset, fit, SegmentDataset, TrainConfig};

/// One (framework, pairing) cell aggregated over seeds.
#[derive(Debug, Clone)]
pub struct MatrixCell {
    pub framework: FrameworkKind,
    pub pairing: String,
    pub seeds: Vec<u64>,
    pub dev_eers: Vec<f64>,
    pub eval_eers: Vec<f64>,
    pub eval_tdcfs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MatrixReport {
    pub cells: Vec<MatrixCell>,
}

/// Lower-is-better summary in the reporting style `avg(best)`, EER given
/// in percent elsewhere by the caller.
pub fn format_avg_best(values: &[f64], decimals: usize) -> String {
    if values.is_empty() {
        return "-".into();
    }
    let avg = values.iter().sum::<f64>() / values.len() as f64;
    let best = values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    format!("{avg:.decimals$}({best:.decimals$})")
}

/// Trains and evaluates every (framework, pairing, seed) combination on the
/// supplied datasets. The dataset provider maps a pairing name to
/// (train, dev, eval) segment sets so features are extracted once per
/// pairing.
#[allow(clippy::too_many_arguments)]
pub fn run_matrix(
    frameworks: &[FrameworkKind],
    pairings: &[PairingConfig],
    seeds: &[u64],
    backend: BackendPreset,
    datasets: &mut dyn FnMut(&PairingConfig) -> Result<(SegmentDataset, SegmentDataset, SegmentDataset)>,
    train_cfg: &TrainConfig,
    op: &AsvOperatingPoint,
    mut progress: Option<&mut dyn FnMut(&str)>,
) -> Result<MatrixReport> {
    if seeds.is_empty() {
        return Err(Error::Config("matrix needs at least one seed".into()));
    }
    let mut cells = Vec::new();
    for pairing in pairings {
        let (train_set, dev_set, eval_set) = datasets(pairing)?;
        for &framework in frameworks {
            let mut cell = MatrixCell {
                framework,
                pairing: pairing.name.clone(),
                seeds: seeds.to_vec(),
                dev_eers: Vec::new(),
                eval_eers: Vec::new(),
                eval_tdcfs: Vec::new(),
            };
            for &seed in seeds {
                let model_cfg = ModelConfig::new(framework, pairing.clone(), backend, seed);
                let run_cfg = TrainConfig {
                    seed,
                    ..train_cfg.clone()
                };
                let mut result = fit(&model_cfg, &train_set, &dev_set, &run_cfg)?;
                let eval_scores =
                    evaluate_dataset(&mut result.model, &eval_set, run_cfg.batch_size.max(16))?;
                let (eer, _) = compute_eer(&eval_scores)?;
                let (tdcf, _) = compute_min_tdcf(&eval_scores, op)?;
                cell.dev_eers.push(result.meta.best_dev_eer);
                cell.eval_eers.push(eer);
                cell.eval_tdcfs.push(tdcf);
                if let Some(p) = progress.as_deref_mut() {
                    p(&format!(
                        "framework {} pairing {} seed {seed}: dev EER {:.2}% eval EER {:.2}% t-DCF {:.4}",
                        framework.short_name(),
                        pairing.name,
                        result.meta.best_dev_eer * 100.0,
                        eer * 100.0,
                        tdcf
                    ));
                }
            }
            cells.push(cell);
        }
    }
    Ok(MatrixReport { cells })
}

impl MatrixReport {
    /// Table in the reporting format: one row per (framework, pairing),
    /// EER in percent as `avg(best)`, t-DCF likewise.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:<10} {:>16} {:>16} {:>18}\n",
            "framework", "pairing", "dev EER(%)", "eval EER(%)", "eval min t-DCF"
        ));
        for c in &self.cells {
            let dev: Vec<f64> = c.dev_eers.iter().map(|v| v * 100.0).collect();
            let eer: Vec<f64> = c.eval_eers.iter().map(|v| v * 100.0).collect();
            out.push_str(&format!(
                "{:<10} {:<10} {:>16} {:>16} {:>18}\n",
                c.framework.short_name(),
                c.pairing,
                format_avg_best(&dev, 2),
                format_avg_best(&eer, 2),
                format_avg_best(&c.eval_tdcfs, 4),
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("framework,pairing,seed,dev_eer,eval_eer,eval_min_tdcf\n");
        for c in &self.cells {
            for (i, &seed) in c.seeds.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{:.6},{:.6},{:.6}\n",
                    c.framework.short_name(),
                    c.pairing,
                    seed,
                    c.dev_eers[i],
                    c.eval_eers[i],
                    c.eval_tdcfs[i]
                ));
            }
        }
        out
    }
}
