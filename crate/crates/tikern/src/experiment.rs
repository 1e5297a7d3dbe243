//! Experiment harness: accuracy tables over methods and training sizes,
//! plus PD reports (Monte-Carlo sweeps and threshold searches).

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::config::{DatasetConfig, DatasetTransform, ExperimentConfig, KernelParams, Method};
use crate::data::{load_idx, make_rotated, make_translated, subsample, LabeledDataset};
use crate::error::{Error, Result};
use crate::gram::assemble_cross;
use crate::pd::{pd_probability_trial, pd_threshold_search, PdTrialConfig, PdTrialOutcome};
use crate::rng::mix_seed;
use crate::svm::MulticlassModel;

/// One (method, training size) cell of the result table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub method: String,
    pub train_size: usize,
    /// Accuracy percentage per repetition, in repetition order.
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
    /// Wall-clock seconds for the whole cell; informational only and
    /// excluded from determinism comparisons.
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub cells: Vec<CellResult>,
}

impl ResultTable {
    pub fn cell(&self, method: &str, train_size: usize) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.train_size == train_size)
    }

    /// Everything except wall-clock time, formatted exactly; two runs with
    /// the same seeds must produce identical keys.
    pub fn deterministic_key(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            out.push_str(&format!("{}|{}|", c.method, c.train_size));
            for a in &c.accuracies {
                out.push_str(&format!("{};", a.to_bits()));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,train_size,mean_accuracy,std_dev,wall_seconds,accuracies\n");
        for c in &self.cells {
            let accs: Vec<String> = c.accuracies.iter().map(|a| format!("{a:.4}")).collect();
            out.push_str(&format!(
                "{},{},{:.4},{:.4},{:.2},{}\n",
                c.method,
                c.train_size,
                c.mean,
                c.std_dev,
                c.wall_seconds,
                accs.join(";")
            ));
        }
        out
    }

    /// Aligned text table for terminal output.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:>6} {:>10} {:>8} {:>10}\n",
            "method", "n", "mean %", "std", "wall s"
        ));
        for c in &self.cells {
            out.push_str(&format!(
                "{:<10} {:>6} {:>10.2} {:>8.2} {:>10.2}\n",
                c.method, c.train_size, c.mean, c.std_dev, c.wall_seconds
            ));
        }
        out
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

/// Loads the configured train/test pair and applies the dataset transform.
pub fn load_configured_datasets(cfg: &DatasetConfig) -> Result<(LabeledDataset, LabeledDataset)> {
    let train = load_idx(&cfg.train_images, &cfg.train_labels)?;
    let test = load_idx(&cfg.test_images, &cfg.test_labels)?;
    let (train, test) = match cfg.transform {
        DatasetTransform::None => (train, test),
        DatasetTransform::Translated => (
            make_translated(&train, cfg.canvas, cfg.noise_sigma, cfg.train_seed)?,
            make_translated(&test, cfg.canvas, cfg.noise_sigma, cfg.test_seed)?,
        ),
        DatasetTransform::Rotated => (
            make_rotated(&train, cfg.noise_sigma, cfg.train_seed)?,
            make_rotated(&test, cfg.noise_sigma, cfg.test_seed)?,
        ),
    };
    let test = if cfg.test_limit > 0 && cfg.test_limit < test.len() {
        subsample(&test, cfg.test_limit, cfg.test_seed, false)?
    } else {
        test
    };
    Ok((train, test))
}

/// Accuracy (%) of a trained model on a test set, scoring every test
/// image from one precomputed train-by-test kernel block.
pub fn evaluate(
    model: &MulticlassModel,
    train_images: &[crate::image::Image],
    test: &LabeledDataset,
    workers: usize,
) -> Result<f64> {
    let spec = &model.models[0].spec;
    let cross = assemble_cross(train_images, &test.images, spec, workers)?;
    let q = test.len();
    let n = train_images.len();
    let mut correct = 0usize;
    let mut column = vec![0.0f64; n];
    for j in 0..q {
        for i in 0..n {
            column[i] = cross[i * q + j];
        }
        if model.predict_from_column(&column) == test.labels[j] {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / q as f64)
}

/// Runs one repetition: stratified train subsample, multiclass training,
/// test evaluation. Deterministic in (config seeds, size, rep).
fn run_repetition(
    train: &LabeledDataset,
    test: &LabeledDataset,
    method: Method,
    cfg: &ExperimentConfig,
    size_idx: usize,
    rep: usize,
) -> Result<f64> {
    let n = cfg.train_sizes[size_idx];
    // the subsample depends on (seed, size, rep) but not on the method, so
    // every method sees the same training draws
    let sub_seed = mix_seed(cfg.seed, ((size_idx as u64) << 32) | rep as u64);
    let subset = subsample(train, n, sub_seed, true)?;
    let spec = cfg.kernel.spec(method, subset.rows(), subset.cols())?;
    let model = MulticlassModel::train(
        &subset.images,
        &subset.labels,
        &spec,
        cfg.svm.c,
        cfg.svm.tol,
        cfg.workers,
    )?;
    evaluate(&model, &subset.images, test, cfg.workers)
}

/// Runs the full (method x train size x repetition) grid.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let methods = cfg.methods()?;
    let (train, test) = load_configured_datasets(&cfg.dataset)?;
    let mut cells = Vec::new();
    for method in &methods {
        for size_idx in 0..cfg.train_sizes.len() {
            let started = Instant::now();
            let accuracies = (0..cfg.repetitions)
                .map(|rep| run_repetition(&train, &test, *method, cfg, size_idx, rep))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| {
                    Error::InvalidConfig(format!(
                        "method {} at n={} failed: {e}",
                        method, cfg.train_sizes[size_idx]
                    ))
                })?;
            let (mean, std_dev) = mean_std(&accuracies);
            cells.push(CellResult {
                method: method.name().to_string(),
                train_size: cfg.train_sizes[size_idx],
                accuracies,
                mean,
                std_dev,
                wall_seconds: started.elapsed().as_secs_f64(),
            });
        }
    }
    let table = ResultTable { cells };
    if let Some(path) = &cfg.output_csv {
        std::fs::write(path, table.to_csv())?;
    }
    Ok(table)
}

/// PD-report configuration: a Monte-Carlo sweep over Gaussian images
/// and/or a threshold search on a real dataset subset.
#[derive(Debug, Clone)]
pub struct PdReportConfig {
    pub kernel: KernelParams,
    pub methods: Vec<Method>,
    /// (rows, cols, n, trials) tuples for the Gaussian sweep.
    pub gaussian_sweep: Vec<(usize, usize, usize, usize)>,
    /// Dataset for threshold search; None skips that section.
    pub dataset: Option<DatasetConfig>,
    /// Subset size drawn from the dataset before searching.
    pub subset_size: usize,
    /// Subsample draws per candidate n (majority vote).
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PdThresholdRow {
    pub method: String,
    pub dataset: String,
    pub subset_size: usize,
    pub threshold: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PdReportOutput {
    pub sweep: Vec<(String, PdTrialOutcome)>,
    pub thresholds: Vec<PdThresholdRow>,
}

impl PdReportOutput {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if !self.sweep.is_empty() {
            out.push_str("method,");
            out.push_str(PdTrialOutcome::csv_header());
            out.push('\n');
            for (method, row) in &self.sweep {
                out.push_str(&format!("{},{}\n", method, row.csv_row()));
            }
        }
        if !self.thresholds.is_empty() {
            out.push_str("method,dataset,subset_size,pd_threshold\n");
            for t in &self.thresholds {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    t.method, t.dataset, t.subset_size, t.threshold
                ));
            }
        }
        out
    }
}

pub fn run_pd_report(cfg: &PdReportConfig) -> Result<PdReportOutput> {
    let mut sweep = Vec::new();
    for method in &cfg.methods {
        for &(rows, cols, n, trials) in &cfg.gaussian_sweep {
            let spec = cfg.kernel.spec(*method, rows, cols)?;
            let outcome = pd_probability_trial(&PdTrialConfig {
                rows,
                cols,
                n,
                trials,
                seed: mix_seed(cfg.seed, (rows * 31 + cols) as u64),
                spec,
            })?;
            sweep.push((method.name().to_string(), outcome));
        }
    }
    let mut thresholds = Vec::new();
    if let Some(ds_cfg) = &cfg.dataset {
        let (train, _) = load_configured_datasets(ds_cfg)?;
        let subset = if cfg.subset_size > 0 && cfg.subset_size < train.len() {
            subsample(&train, cfg.subset_size, mix_seed(cfg.seed, 0xD5), true)?
        } else {
            train
        };
        for method in &cfg.methods {
            let spec = cfg.kernel.spec(*method, subset.rows(), subset.cols())?;
            let threshold =
                pd_threshold_search(&subset.images, &spec, mix_seed(cfg.seed, 0x7E), cfg.trials)?;
            thresholds.push(PdThresholdRow {
                method: method.name().to_string(),
                dataset: subset.provenance.clone(),
                subset_size: subset.len(),
                threshold,
            });
        }
    }
    Ok(PdReportOutput { sweep, thresholds })
}

pub fn write_pd_report(output: &PdReportOutput, path: &Path) -> Result<()> {
    std::fs::write(path, output.to_csv())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::save_idx;
    use crate::image::Image;

    /// Two well-separated blob classes; any sane method hits 100%.
    fn blob_dataset(count: usize, seed_offset: f64) -> LabeledDataset {
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for i in 0..count {
            let class = (i % 2) as u32;
            let base = if class == 0 { 0.1 } else { 0.9 };
            let wiggle = 0.02 * ((i / 2) % 5) as f64 + seed_offset;
            let px = (0..16)
                .map(|p| base + wiggle * ((p % 3) as f64 - 1.0))
                .collect();
            images.push(Image::new(4, 4, px).unwrap());
            labels.push(class);
        }
        LabeledDataset::new(images, labels, "blobs".into()).unwrap()
    }

    fn write_pair(ds: &LabeledDataset, dir: &Path, stem: &str) -> (std::path::PathBuf, std::path::PathBuf) {
        let img = dir.join(format!("{stem}-img"));
        let lbl = dir.join(format!("{stem}-lbl"));
        save_idx(ds, &img, &lbl).unwrap();
        (img, lbl)
    }

    fn toy_config(dir: &Path) -> ExperimentConfig {
        let train = blob_dataset(40, 0.0);
        let test = blob_dataset(20, 0.01);
        let (ti, tl) = write_pair(&train, dir, "train");
        let (vi, vl) = write_pair(&test, dir, "test");
        let mut cfg = ExperimentConfig::default();
        cfg.dataset.train_images = ti;
        cfg.dataset.train_labels = tl;
        cfg.dataset.test_images = vi;
        cfg.dataset.test_labels = vl;
        cfg.methods = vec!["SVM".into()];
        cfg.train_sizes = vec![10];
        cfg.repetitions = 2;
        cfg.workers = 2;
        cfg
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = toy_config(dir.path());
        let table = run_experiment(&cfg).unwrap();
        let cell = table.cell("SVM", 10).unwrap();
        assert_eq!(cell.mean, 100.0);
        assert_eq!(cell.std_dev, 0.0);
    }

    #[test]
    fn rerun_is_bitwise_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = toy_config(dir.path());
        cfg.methods = vec!["SVM".into(), "TI".into()];
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.deterministic_key(), b.deterministic_key());
        // a different seed still runs but may draw different subsets
        cfg.seed += 1;
        let c = run_experiment(&cfg).unwrap();
        assert_eq!(c.cells.len(), a.cells.len());
    }

    #[test]
    fn csv_and_render_contain_cells() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = toy_config(dir.path());
        cfg.output_csv = Some(dir.path().join("out.csv"));
        let table = run_experiment(&cfg).unwrap();
        let csv = table.to_csv();
        assert!(csv.starts_with("method,train_size"));
        assert!(csv.contains("SVM,10,100.0000"));
        assert!(table.render().contains("SVM"));
        assert!(cfg.output_csv.as_ref().unwrap().exists());
    }

    #[test]
    fn pd_report_gaussian_and_threshold() {
        let dir = tempfile::tempdir().unwrap();
        let exp_cfg = toy_config(dir.path());
        let cfg = PdReportConfig {
            kernel: KernelParams::default(),
            methods: vec![Method::Ti],
            gaussian_sweep: vec![(6, 6, 3, 8)],
            dataset: Some(exp_cfg.dataset.clone()),
            subset_size: 12,
            trials: 3,
            seed: 5,
            workers: 2,
        };
        let out = run_pd_report(&cfg).unwrap();
        assert_eq!(out.sweep.len(), 1);
        assert!(out.sweep[0].1.pd_fraction >= 0.0);
        assert_eq!(out.thresholds.len(), 1);
        assert!(out.thresholds[0].threshold >= 1);
        let csv = out.to_csv();
        assert!(csv.contains("pd_threshold"));
        write_pd_report(&out, &dir.path().join("pd.csv")).unwrap();
    }

    #[test]
    fn mean_std_hand_values() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert!((m - 5.0).abs() < 1e-12);
        // sample std of that set = sqrt(32/7)
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        let (m1, s1) = mean_std(&[3.5]);
        assert_eq!(m1, 3.5);
        assert_eq!(s1, 0.0);
    }
}
