//! Declarative experiment configuration (TOML) and the mapping from
//! short method names to kernel specifications.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{BaseKernel, Invariance, KernelSpec};
use crate::locality::{LocalityLayer, LocalityStack};
use crate::transforms::TransformGroup;

/// Named kernel families used throughout the experiment tables.
///
/// - `Svm`: polynomial kernel, no invariance
/// - `L`: two-layer locality kernel
/// - `Ti` / `Ri`: best-fit over cyclic translations / discretized rotations
/// - combinations compose the locality stack with best-fit groups
/// - `RiAvg`: average-fit over rotations
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Svm,
    L,
    Ti,
    Ri,
    LTi,
    LRi,
    TiRi,
    LTiRi,
    RiAvg,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Svm,
        Method::L,
        Method::Ti,
        Method::Ri,
        Method::LTi,
        Method::LRi,
        Method::TiRi,
        Method::LTiRi,
        Method::RiAvg,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Svm => "SVM",
            Method::L => "L",
            Method::Ti => "TI",
            Method::Ri => "RI",
            Method::LTi => "L-TI",
            Method::LRi => "L-RI",
            Method::TiRi => "TI-RI",
            Method::LTiRi => "L-TI-RI",
            Method::RiAvg => "RI-avg",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown method {s:?}; expected one of {}",
                    Method::ALL.map(|m| m.name()).join(", ")
                ))
            })
    }
}

/// Kernel hyper-parameters shared by every method.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelParams {
    /// Polynomial scaling; `None` means 1/m for m-pixel images.
    pub gamma: Option<f64>,
    pub degree: u32,
    /// Bottom-layer locality span parameter (window covers k1 + 1 entries).
    pub k1: usize,
    pub d1: u32,
    pub d2: u32,
    /// Number of discretized rotation angles.
    pub rotation_count: usize,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            gamma: None,
            degree: 8,
            k1: 5,
            d1: 2,
            d2: 4,
            rotation_count: 36,
        }
    }
}

impl KernelParams {
    pub fn gamma_for(&self, rows: usize, cols: usize) -> f64 {
        self.gamma.unwrap_or(1.0 / (rows * cols) as f64)
    }

    /// Builds the kernel specification for a method at given image
    /// dimensions.
    pub fn spec(&self, method: Method, rows: usize, cols: usize) -> Result<KernelSpec> {
        let poly = BaseKernel::poly(self.gamma_for(rows, cols), self.degree);
        // per-layer normalization (window area below, cell count on top)
        // keeps layer values tame on large canvases without flattening
        // their dynamic range
        let window = ((self.k1 + 1) * (self.k1 + 1)) as f64;
        let locality = LocalityStack {
            layers: vec![LocalityLayer::new(self.k1, self.d1)
                .with_padding(self.k1.saturating_sub(1) / 2)
                .with_gamma(1.0 / window)],
            top_degree: self.d2,
            low_memory: false,
            gamma: 1.0 / (rows * cols) as f64,
        };
        let ti = TransformGroup::CyclicTranslations;
        let ri = TransformGroup::rotations(self.rotation_count);
        let spec = match method {
            Method::Svm => KernelSpec::new(poly),
            Method::L => KernelSpec::new(poly).with_locality(locality),
            Method::Ti => KernelSpec::new(poly).with_invariance(Invariance::best(ti)),
            Method::Ri => KernelSpec::new(poly).with_invariance(Invariance::best(ri)),
            Method::LTi => KernelSpec::new(poly)
                .with_locality(locality)
                .with_invariance(Invariance::best(ti)),
            Method::LRi => KernelSpec::new(poly)
                .with_locality(locality)
                .with_invariance(Invariance::best(ri)),
            Method::TiRi => KernelSpec::new(poly).with_invariance(Invariance::BestFit {
                groups: vec![ri, ti],
            }),
            Method::LTiRi => KernelSpec::new(poly)
                .with_locality(locality)
                .with_invariance(Invariance::BestFit { groups: vec![ri, ti] }),
            Method::RiAvg => KernelSpec::new(poly).with_invariance(Invariance::avg(ri)),
        };
        spec.validate(rows, cols)?;
        Ok(spec)
    }
}

/// How the raw dataset is transformed before the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetTransform {
    None,
    Translated,
    Rotated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    pub transform: DatasetTransform,
    pub canvas: (usize, usize),
    pub noise_sigma: f64,
    /// Independent seeds so train and test synthesis never share streams.
    pub train_seed: u64,
    pub test_seed: u64,
    /// Cap on the test set size per repetition (0 = use all).
    pub test_limit: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            train_images: PathBuf::from("data/digits/train-images-idx3-ubyte"),
            train_labels: PathBuf::from("data/digits/train-labels-idx1-ubyte"),
            test_images: PathBuf::from("data/digits/test-images-idx3-ubyte"),
            test_labels: PathBuf::from("data/digits/test-labels-idx1-ubyte"),
            transform: DatasetTransform::None,
            canvas: (64, 64),
            noise_sigma: 0.1,
            train_seed: 101,
            test_seed: 202,
            test_limit: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub c: f64,
    pub tol: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 10.0, tol: 1e-3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub kernel: KernelParams,
    pub svm: SvmParams,
    pub methods: Vec<String>,
    pub train_sizes: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub workers: usize,
    pub output_csv: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetConfig::default(),
            kernel: KernelParams::default(),
            svm: SvmParams::default(),
            methods: vec!["SVM".into()],
            train_sizes: vec![100],
            repetitions: 5,
            seed: 42,
            workers: 4,
            output_csv: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<ExperimentConfig> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn methods(&self) -> Result<Vec<Method>> {
        self.methods.iter().map(|m| m.parse()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
        }
        if self.train_sizes.is_empty() || self.train_sizes.iter().any(|&n| n == 0) {
            return Err(Error::InvalidConfig("train sizes must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("at least one method required".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        if !(self.svm.c > 0.0) || !(self.svm.tol > 0.0) {
            return Err(Error::InvalidConfig("svm.c and svm.tol must be > 0".into()));
        }
        self.methods()?;
        Ok(())
    }
}
