//! Base kernels, transformation-invariant kernels, and their composition
//! with locality stacks.
//!
//! Best-fit kernels take the maximum of the base kernel over an
//! enumerated transformation group; average-fit kernels take the mean.
//! For dot-product bases the best fit is computed as the monomial map
//! applied to the maximal shifted dot product, and the full cyclic
//! translation group is evaluated through circular cross-correlation
//! with an exhaustive enumeration fallback.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::locality::{locality_kernel, LocalityStack};
use crate::shift::{correlations_naive, ShiftCorrelator};
use crate::transforms::{TransformDesc, TransformGroup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum BaseKernel {
    Linear { normalized: bool },
    Poly { gamma: f64, degree: u32 },
}

impl BaseKernel {
    pub fn normalized_linear() -> Self {
        BaseKernel::Linear { normalized: true }
    }

    pub fn poly(gamma: f64, degree: u32) -> Self {
        BaseKernel::Poly { gamma, degree }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BaseKernel::Linear { .. } => Ok(()),
            BaseKernel::Poly { gamma, degree } => {
                if gamma < 0.0 || !gamma.is_finite() {
                    Err(Error::InvalidSpec(format!("gamma must be >= 0, got {gamma}")))
                } else if degree < 1 {
                    Err(Error::InvalidSpec("degree must be >= 1".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Kernel value from a raw dot product, for m-pixel inputs.
    #[inline]
    pub fn from_dot(&self, dot: f64, m: usize) -> f64 {
        match *self {
            BaseKernel::Linear { normalized } => {
                if normalized {
                    dot / m as f64
                } else {
                    dot
                }
            }
            BaseKernel::Poly { gamma, degree } => (1.0 + gamma * dot).powi(degree as i32),
        }
    }

    pub fn eval(&self, x: &Image, y: &Image) -> Result<f64> {
        Ok(self.from_dot(x.dot(y)?, x.len()))
    }
}

/// Invariance structure of a kernel. Multiple groups act as a product,
/// applied to the first argument in listing order (e.g. rotations then
/// translations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fit", rename_all = "kebab-case")]
pub enum Invariance {
    None,
    BestFit { groups: Vec<TransformGroup> },
    AvgFit { groups: Vec<TransformGroup> },
}

impl Invariance {
    pub fn best(group: TransformGroup) -> Self {
        Invariance::BestFit { groups: vec![group] }
    }

    pub fn avg(group: TransformGroup) -> Self {
        Invariance::AvgFit { groups: vec![group] }
    }

    fn groups(&self) -> &[TransformGroup] {
        match self {
            Invariance::None => &[],
            Invariance::BestFit { groups } | Invariance::AvgFit { groups } => groups,
        }
    }
}

/// Declarative description of a kernel: a base family, an optional
/// locality layer stack (which then acts as the base), and an optional
/// invariance structure on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub base: BaseKernel,
    pub invariance: Invariance,
    pub locality: Option<LocalityStack>,
}

impl KernelSpec {
    pub fn new(base: BaseKernel) -> Self {
        Self {
            base,
            invariance: Invariance::None,
            locality: None,
        }
    }

    pub fn with_invariance(mut self, inv: Invariance) -> Self {
        self.invariance = inv;
        self
    }

    pub fn with_locality(mut self, stack: LocalityStack) -> Self {
        self.locality = Some(stack);
        self
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        self.base.validate()?;
        if let Some(stack) = &self.locality {
            stack.validate(rows, cols)?;
        }
        for g in self.invariance.groups() {
            g.enumerate(rows, cols)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    /// Stable content digest used for Gram/model provenance.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        let hash = Sha256::digest(json.as_bytes());
        hash.iter().take(16).map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Agg {
    Max,
    Mean,
}

/// An evaluatable kernel bound to fixed image dimensions.
///
/// Construction enumerates the invariance groups once; `prepare` caches
/// per-image transformed variants (and their spectra on the FFT path) so
/// Gram assembly pays the transform cost once per image, not per pair.
pub struct KernelFunction {
    spec: KernelSpec,
    rows: usize,
    cols: usize,
    /// Transform sequences applied to the first argument, excluding a
    /// trailing full-cyclic translation group handled by correlation.
    prefix_seqs: Vec<Vec<TransformDesc>>,
    /// Trailing full-cyclic translations folded into the correlation.
    fast_translations: bool,
    agg: Option<Agg>,
    corr: Option<ShiftCorrelator>,
}

/// Per-image cache produced by [`KernelFunction::prepare`].
pub struct Prepared {
    image: Image,
    /// Prefix-transformed variants of the image (empty when trivial).
    variants: Vec<Image>,
    /// Spectra of the variants, FFT path only.
    variant_spectra: Vec<Vec<Complex<f64>>>,
    /// Spectrum of the untransformed image (used as second argument).
    self_spectrum: Option<Vec<Complex<f64>>>,
}

impl KernelFunction {
    pub fn new(spec: KernelSpec, rows: usize, cols: usize) -> Result<Self> {
        Self::with_fft(spec, rows, cols, true)
    }

    /// `use_fft = false` forces the exhaustive translation enumeration.
    pub fn with_fft(spec: KernelSpec, rows: usize, cols: usize, use_fft: bool) -> Result<Self> {
        spec.validate(rows, cols)?;
        let agg = match spec.invariance {
            Invariance::None => None,
            Invariance::BestFit { .. } => Some(Agg::Max),
            Invariance::AvgFit { .. } => Some(Agg::Mean),
        };
        let groups = spec.invariance.groups();
        let dot_base = spec.locality.is_none();
        // A trailing full-cyclic translation group over a dot-product base
        // is evaluated via correlations (FFT or naive oracle).
        let fast_translations =
            dot_base && matches!(groups.last(), Some(TransformGroup::CyclicTranslations));
        let prefix_groups = if fast_translations {
            &groups[..groups.len() - 1]
        } else {
            groups
        };
        let mut prefix_seqs: Vec<Vec<TransformDesc>> = vec![Vec::new()];
        for g in prefix_groups {
            let descs = g.enumerate(rows, cols)?;
            let mut next = Vec::with_capacity(prefix_seqs.len() * descs.len());
            for seq in &prefix_seqs {
                for d in &descs {
                    let mut s = seq.clone();
                    s.push(*d);
                    next.push(s);
                }
            }
            prefix_seqs = next;
        }
        let corr = if fast_translations && use_fft {
            Some(ShiftCorrelator::new(rows, cols))
        } else {
            None
        };
        Ok(Self {
            spec,
            rows,
            cols,
            prefix_seqs,
            fast_translations,
            agg,
            corr,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    fn base_eval(&self, x: &Image, y: &Image) -> Result<f64> {
        match &self.spec.locality {
            Some(stack) => locality_kernel(x, y, stack),
            None => self.spec.base.eval(x, y),
        }
    }

    fn check_dims(&self, img: &Image) -> Result<()> {
        if img.rows() != self.rows || img.cols() != self.cols {
            return Err(Error::DimensionMismatch(
                format!("{}x{}", img.rows(), img.cols()),
                format!("kernel dims {}x{}", self.rows, self.cols),
            ));
        }
        Ok(())
    }

    pub fn prepare(&self, img: &Image) -> Result<Prepared> {
        self.check_dims(img)?;
        let trivial_prefix = self.prefix_seqs.len() == 1 && self.prefix_seqs[0].is_empty();
        let variants: Vec<Image> = if self.agg.is_none() || trivial_prefix {
            Vec::new()
        } else {
            self.prefix_seqs
                .iter()
                .map(|seq| seq.iter().fold(img.clone(), |im, d| d.apply(&im)))
                .collect()
        };
        let (variant_spectra, self_spectrum) = if let Some(corr) = &self.corr {
            let spectra = if variants.is_empty() {
                vec![corr.forward(img)]
            } else {
                variants.iter().map(|v| corr.forward(v)).collect()
            };
            (spectra, Some(corr.forward(img)))
        } else {
            (Vec::new(), None)
        };
        Ok(Prepared {
            image: img.clone(),
            variants,
            variant_spectra,
            self_spectrum,
        })
    }

    /// Evaluates the kernel for a pair of prepared images.
    pub fn eval_prepared(&self, a: &Prepared, b: &Prepared) -> Result<f64> {
        let agg = match self.agg {
            None => return self.base_eval(&a.image, &b.image),
            Some(agg) => agg,
        };
        let m = a.image.len();
        let dot_base = self.spec.locality.is_none();
        let mut acc = Accumulator::new(agg);
        if self.fast_translations {
            // dots over all cyclic shifts, per prefix variant
            if let Some(corr) = &self.corr {
                let fy = b.self_spectrum.as_ref().expect("fft path prepared");
                for fx in &a.variant_spectra {
                    for dot in corr.correlations_from_spectra(fx, fy) {
                        acc.add_dot(dot, &self.spec.base, m);
                    }
                }
            } else {
                let variants: &[Image] = if a.variants.is_empty() {
                    std::slice::from_ref(&a.image)
                } else {
                    &a.variants
                };
                for v in variants {
                    for dot in correlations_naive(v, &b.image)? {
                        acc.add_dot(dot, &self.spec.base, m);
                    }
                }
            }
            Ok(acc.finish_dots(&self.spec.base, m))
        } else {
            let variants: &[Image] = if a.variants.is_empty() {
                std::slice::from_ref(&a.image)
            } else {
                &a.variants
            };
            if dot_base {
                for v in variants {
                    acc.add_dot(v.dot(&b.image)?, &self.spec.base, m);
                }
                Ok(acc.finish_dots(&self.spec.base, m))
            } else {
                for v in variants {
                    acc.add_value(self.base_eval(v, &b.image)?);
                }
                Ok(acc.finish_values())
            }
        }
    }

    /// One-shot evaluation (prepares internally).
    pub fn eval(&self, x: &Image, y: &Image) -> Result<f64> {
        let a = self.prepare(x)?;
        let b = self.prepare(y)?;
        self.eval_prepared(&a, &b)
    }
}

/// Best-fit aggregation follows the monomial-map rewrite: the maximum is
/// taken over raw dot products and the base map applied once to the max.
struct Accumulator {
    agg: Agg,
    max: f64,
    sum: f64,
    count: usize,
}

impl Accumulator {
    fn new(agg: Agg) -> Self {
        Self {
            agg,
            max: f64::NEG_INFINITY,
            sum: 0.0,
            count: 0,
        }
    }

    /// Max aggregation tracks the raw dot; mean aggregation maps each dot
    /// through the base first (mean of base values, not base of mean).
    #[inline]
    fn add_dot(&mut self, dot: f64, base: &BaseKernel, m: usize) {
        match self.agg {
            Agg::Max => self.max = self.max.max(dot),
            Agg::Mean => {
                self.sum += base.from_dot(dot, m);
                self.count += 1;
            }
        }
    }

    #[inline]
    fn add_value(&mut self, v: f64) {
        match self.agg {
            Agg::Max => self.max = self.max.max(v),
            Agg::Mean => {
                self.sum += v;
                self.count += 1;
            }
        }
    }

    fn finish_dots(self, base: &BaseKernel, m: usize) -> f64 {
        match self.agg {
            Agg::Max => base.from_dot(self.max, m),
            Agg::Mean => self.sum / self.count as f64,
        }
    }

    fn finish_values(self) -> f64 {
        match self.agg {
            Agg::Max => self.max,
            Agg::Mean => self.sum / self.count as f64,
        }
    }
}

/// Independent enumeration oracle: evaluates the spec by exhaustively
/// enumerating the full product group and applying the base kernel
/// directly. Used by tests to check the optimized paths.
pub fn eval_enumerated(spec: &KernelSpec, x: &Image, y: &Image) -> Result<f64> {
    x.same_dims(y)?;
    spec.validate(x.rows(), x.cols())?;
    let base_eval = |tx: &Image| -> Result<f64> {
        match &spec.locality {
            Some(stack) => locality_kernel(tx, y, stack),
            None => spec.base.eval(tx, y),
        }
    };
    let groups = spec.invariance.groups();
    if groups.is_empty() {
        return base_eval(x);
    }
    let mut seqs: Vec<Vec<TransformDesc>> = vec![Vec::new()];
    for g in groups {
        let descs = g.enumerate(x.rows(), x.cols())?;
        let mut next = Vec::new();
        for seq in &seqs {
            for d in &descs {
                let mut s = seq.clone();
                s.push(*d);
                next.push(s);
            }
        }
        seqs = next;
    }
    let dot_base = spec.locality.is_none();
    match &spec.invariance {
        Invariance::BestFit { .. } if dot_base => {
            let mut best = f64::NEG_INFINITY;
            for seq in &seqs {
                let tx = seq.iter().fold(x.clone(), |im, d| d.apply(&im));
                best = best.max(tx.dot(y)?);
            }
            Ok(spec.base.from_dot(best, x.len()))
        }
        Invariance::BestFit { .. } => {
            let mut best = f64::NEG_INFINITY;
            for seq in &seqs {
                let tx = seq.iter().fold(x.clone(), |im, d| d.apply(&im));
                best = best.max(base_eval(&tx)?);
            }
            Ok(best)
        }
        Invariance::AvgFit { .. } => {
            let mut sum = 0.0;
            for seq in &seqs {
                let tx = seq.iter().fold(x.clone(), |im, d| d.apply(&im));
                sum += base_eval(&tx)?;
            }
            Ok(sum / seqs.len() as f64)
        }
        Invariance::None => unreachable!(),
    }
}
