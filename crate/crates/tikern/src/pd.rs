//! Positive-definiteness diagnostics for Gram matrices.
//!
//! The Gershgorin disc test is the conservative sufficient condition;
//! whether a matrix actually is PD is decided by the dense symmetric
//! eigenvalue oracle. Monte-Carlo trials draw i.i.d. standard-normal
//! images and measure how often the resulting Gram is PD; the threshold
//! search finds the largest subsample size that stays PD on real data.

use nalgebra::DMatrix;
use rayon::prelude::*;
use rand_distr::StandardNormal;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gram::{assemble, GramMatrix};
use crate::image::Image;
use crate::kernels::KernelSpec;
use crate::rng::derive_rng;

/// Absolute eigenvalue tolerance distinguishing indefiniteness from
/// floating-point noise: the Gram is called PD when its minimum
/// eigenvalue exceeds `PD_TOL_PER_SAMPLE * n`.
pub const PD_TOL_PER_SAMPLE: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct PdReport {
    pub gershgorin_pass: bool,
    pub min_eigenvalue: f64,
    pub is_pd: bool,
    pub n: usize,
    pub spec_digest: String,
}

/// Strict diagonal dominance with positive diagonal: K_ii > sum_{j != i} |K_ij|.
pub fn gershgorin_pd(gram: &GramMatrix) -> bool {
    let n = gram.n();
    (0..n).all(|i| {
        let radius: f64 = (0..n)
            .filter(|&j| j != i)
            .map(|j| gram.get(i, j).abs())
            .sum();
        gram.get(i, i) > radius
    })
}

/// Smallest eigenvalue of a symmetric Gram matrix via a dense solver.
pub fn min_eigenvalue(gram: &GramMatrix, tol: f64) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::InvalidConfig("eigenvalue tolerance must be > 0".into()));
    }
    if !gram.entries().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("gram entry".into()));
    }
    let n = gram.n();
    let m = DMatrix::from_row_slice(n, n, gram.entries());
    let eig = m
        .try_symmetric_eigen(tol, 10_000)
        .ok_or_else(|| Error::NonFinite("eigenvalue iteration did not converge".into()))?;
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

pub fn analyze(gram: &GramMatrix) -> Result<PdReport> {
    let min_eig = min_eigenvalue(gram, 1e-12)?;
    Ok(PdReport {
        gershgorin_pass: gershgorin_pd(gram),
        min_eigenvalue: min_eig,
        is_pd: min_eig > PD_TOL_PER_SAMPLE * gram.n() as f64,
        n: gram.n(),
        spec_digest: gram.spec_digest().to_string(),
    })
}

#[derive(Debug, Clone)]
pub struct PdTrialConfig {
    pub rows: usize,
    pub cols: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub spec: KernelSpec,
}

impl PdTrialConfig {
    /// Auto-sizes n = floor(c * m^(1/2 - beta)) from the sample-count regime.
    pub fn auto_n(rows: usize, cols: usize, c: f64, beta: f64) -> usize {
        let m = (rows * cols) as f64;
        (c * m.powf(0.5 - beta)).floor().max(1.0) as usize
    }

    fn validate(&self) -> Result<()> {
        if self.trials < 1 || self.n < 1 || self.rows < 1 || self.cols < 1 {
            return Err(Error::InvalidConfig(
                "pd trial needs trials >= 1, n >= 1, nonzero dims".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a Monte-Carlo PD probability run.
#[derive(Debug, Clone, Serialize)]
pub struct PdTrialOutcome {
    pub spec_digest: String,
    pub rows: usize,
    pub cols: usize,
    pub n: usize,
    pub trials: usize,
    pub pd_fraction: f64,
    pub min_eig_min: f64,
    pub min_eig_mean: f64,
    pub min_eig_max: f64,
}

impl PdTrialOutcome {
    pub fn csv_header() -> &'static str {
        "spec_digest,m1,m2,n,trials,pd_fraction,min_eig_min,min_eig_mean,min_eig_max"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{:.6e},{:.6e},{:.6e}",
            self.spec_digest,
            self.rows,
            self.cols,
            self.n,
            self.trials,
            self.pd_fraction,
            self.min_eig_min,
            self.min_eig_mean,
            self.min_eig_max
        )
    }
}

fn gaussian_image(rows: usize, cols: usize, rng: &mut impl Rng) -> Image {
    let px: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Image::new(rows, cols, px).expect("finite gaussian pixels")
}

/// Fraction of trials whose Gram on i.i.d. N(0,1) images is PD.
/// Each trial derives its own stream from (seed, trial index), so the
/// result is reproducible and schedule-independent.
pub fn pd_probability_trial(config: &PdTrialConfig) -> Result<PdTrialOutcome> {
    config.validate()?;
    let min_eigs: Vec<f64> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = derive_rng(config.seed, t as u64);
            let images: Vec<Image> = (0..config.n)
                .map(|_| gaussian_image(config.rows, config.cols, &mut rng))
                .collect();
            let gram = assemble(&images, &config.spec, 1)?;
            min_eigenvalue(&gram, 1e-12)
        })
        .collect::<Result<Vec<_>>>()?;
    let tol = PD_TOL_PER_SAMPLE * config.n as f64;
    let pd_count = min_eigs.iter().filter(|&&e| e > tol).count();
    let min = min_eigs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = min_eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = min_eigs.iter().sum::<f64>() / min_eigs.len() as f64;
    Ok(PdTrialOutcome {
        spec_digest: config.spec.digest(),
        rows: config.rows,
        cols: config.cols,
        n: config.n,
        trials: config.trials,
        pd_fraction: pd_count as f64 / config.trials as f64,
        min_eig_min: min,
        min_eig_mean: mean,
        min_eig_max: max,
    })
}

/// Majority PD vote over `trials` random subsamples of size n.
fn pd_at(images: &[Image], spec: &KernelSpec, n: usize, seed: u64, trials: usize) -> Result<bool> {
    let votes: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = derive_rng(seed, (n as u64) << 16 | t as u64);
            let mut indices: Vec<usize> = (0..images.len()).collect();
            // partial Fisher-Yates draw of n indices
            for i in 0..n {
                let j = rng.random_range(i..indices.len());
                indices.swap(i, j);
            }
            let subset: Vec<Image> = indices[..n].iter().map(|&i| images[i].clone()).collect();
            let gram = assemble(&subset, spec, 1)?;
            let eig = min_eigenvalue(&gram, 1e-12)?;
            Ok(eig > PD_TOL_PER_SAMPLE * n as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(votes.iter().filter(|&&v| v).count() * 2 > trials)
}

/// Largest subsample size n whose Gram stays PD (doubling search then
/// bisection, majority over `trials` subsample draws per n).
pub fn pd_threshold_search(
    images: &[Image],
    spec: &KernelSpec,
    seed: u64,
    trials: usize,
) -> Result<usize> {
    if images.len() < 2 {
        return Err(Error::SubsampleTooLarge {
            requested: 2,
            available: images.len(),
        });
    }
    if !pd_at(images, spec, 2, seed, trials)? {
        return Ok(1);
    }
    // doubling phase
    let mut lo = 2usize; // largest known-PD size
    let mut hi; // smallest known-failing size
    let mut n = 4usize;
    loop {
        if n >= images.len() {
            if pd_at(images, spec, images.len(), seed, trials)? {
                return Ok(images.len());
            }
            hi = images.len();
            break;
        }
        if pd_at(images, spec, n, seed, trials)? {
            lo = n;
            n *= 2;
        } else {
            hi = n;
            break;
        }
    }
    // bisection
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pd_at(images, spec, mid, seed, trials)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{BaseKernel, Invariance};
    use crate::transforms::TransformGroup;

    fn gram2(a: f64, b: f64, c: f64, d: f64) -> GramMatrix {
        GramMatrix::from_entries(2, vec![a, b, c, d], "t".into(), "t".into()).unwrap()
    }

    #[test]
    fn gershgorin_hand_cases() {
        assert!(gershgorin_pd(&gram2(1.0, 0.0, 0.0, 1.0)));
        assert!(!gershgorin_pd(&gram2(1.0, 2.0, 2.0, 1.0)));
        assert!(gershgorin_pd(&gram2(1.0, 0.4, 0.4, 1.0)));
    }

    #[test]
    fn min_eigenvalue_hand_cases() {
        assert!((min_eigenvalue(&gram2(1.0, 0.0, 0.0, 1.0), 1e-12).unwrap() - 1.0).abs() < 1e-10);
        assert!((min_eigenvalue(&gram2(1.0, 2.0, 2.0, 1.0), 1e-12).unwrap() + 1.0).abs() < 1e-10);
        assert!((min_eigenvalue(&gram2(2.0, 1.0, 1.0, 2.0), 1e-12).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn min_eigenvalue_matches_characteristic_polynomial_3x3() {
        // eigenvalues of [[2,1,0],[1,2,1],[0,1,2]] are 2, 2 +/- sqrt(2)
        let g = GramMatrix::from_entries(
            3,
            vec![2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0],
            "t".into(),
            "t".into(),
        )
        .unwrap();
        let expected = 2.0 - 2.0_f64.sqrt();
        assert!((min_eigenvalue(&g, 1e-12).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn min_eigenvalue_rejects_non_finite() {
        let g = gram2(1.0, f64::NAN, f64::NAN, 1.0);
        assert!(min_eigenvalue(&g, 1e-12).is_err());
    }

    #[test]
    fn gershgorin_implies_pd_on_random_matrices() {
        let mut rng = derive_rng(99, 0);
        for _ in 0..50 {
            let n = 4;
            let mut data = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    data[i * n + j] = v;
                    data[j * n + i] = v;
                }
            }
            for i in 0..n {
                data[i * n + i] = rng.random_range(0.0..4.0);
            }
            let g = GramMatrix::from_entries(n, data, "t".into(), "t".into()).unwrap();
            if gershgorin_pd(&g) {
                assert!(min_eigenvalue(&g, 1e-12).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn single_sample_trial_is_always_pd() {
        let config = PdTrialConfig {
            rows: 4,
            cols: 4,
            n: 1,
            trials: 10,
            seed: 7,
            spec: KernelSpec::new(BaseKernel::normalized_linear()),
        };
        let out = pd_probability_trial(&config).unwrap();
        assert_eq!(out.pd_fraction, 1.0);
    }

    #[test]
    fn trials_are_reproducible() {
        let config = PdTrialConfig {
            rows: 6,
            cols: 6,
            n: 3,
            trials: 8,
            seed: 21,
            spec: KernelSpec::new(BaseKernel::normalized_linear())
                .with_invariance(Invariance::best(TransformGroup::CyclicTranslations)),
        };
        let a = pd_probability_trial(&config).unwrap();
        let b = pd_probability_trial(&config).unwrap();
        assert_eq!(a.pd_fraction, b.pd_fraction);
        assert_eq!(a.min_eig_mean.to_bits(), b.min_eig_mean.to_bits());
    }

    #[test]
    fn threshold_search_generic_linear_gram() {
        // distinct generic images give a PD linear Gram for n <= m
        let mut rng = derive_rng(5, 0);
        let images: Vec<Image> = (0..8).map(|_| gaussian_image(4, 4, &mut rng)).collect();
        let spec = KernelSpec::new(BaseKernel::normalized_linear());
        let n_star = pd_threshold_search(&images, &spec, 11, 3).unwrap();
        assert!(n_star >= 2, "got {n_star}");
    }

    #[test]
    fn threshold_search_rejects_tiny_dataset() {
        let images = vec![Image::zeros(2, 2)];
        let spec = KernelSpec::new(BaseKernel::normalized_linear());
        assert!(pd_threshold_search(&images, &spec, 1, 3).is_err());
    }

    #[test]
    fn auto_n_regime() {
        // m = 256, beta = 0.25, c = 1: n = floor(256^0.25) = 4
        assert_eq!(PdTrialConfig::auto_n(16, 16, 1.0, 0.25), 4);
    }
}
