//! Dual soft-margin SVM trained by sequential minimal optimization on a
//! precomputed Gram matrix, with one-vs-one multiclass reduction.
//!
//! The solver selects the maximal KKT-violating pair and stops when the
//! largest violation drops below `tol`. Indefinite Grams are accepted:
//! the pair subproblem clips to the box, which makes the solver a
//! heuristic outside the positive-definite regime.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gram::{assemble, GramMatrix};
use crate::image::Image;
use crate::kernels::{KernelFunction, KernelSpec};
use crate::transforms::TransformGroup;

const MODEL_MAGIC: &[u8; 4] = b"TKSV";
const MODEL_VERSION: u32 = 1;
const TAU: f64 = 1e-12;

/// Raw output of the SMO solver.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Final maximal KKT violation (m(alpha) - M(alpha)).
    pub kkt_gap: f64,
    /// True when a non-positive pair curvature was encountered, i.e. the
    /// Gram is not PSD along some working direction.
    pub indefinite_detected: bool,
}

/// Maximizes -1/2 sum a_i a_j y_i y_j K_ij + sum a_i subject to
/// 0 <= a_i <= C and sum a_i y_i = 0.
pub fn solve_dual_smo(gram: &GramMatrix, labels: &[i8], c: f64, tol: f64) -> Result<DualSolution> {
    let n = gram.n();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(
            format!("{} labels", labels.len()),
            format!("{n} samples"),
        ));
    }
    if !(c > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidConfig("C and tol must be > 0".into()));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::InvalidConfig("labels must be +/-1".into()));
    }
    if labels.iter().all(|&y| y == 1) || labels.iter().all(|&y| y == -1) {
        return Err(Error::SingleClass);
    }

    let y: Vec<f64> = labels.iter().map(|&v| v as f64).collect();
    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a'Qa - e'a; all alpha start at 0
    let mut grad = vec![-1.0; n];
    let mut indefinite = false;
    let mut iterations = 0usize;
    let max_iter = 10_000_000usize;
    let mut gap;

    loop {
        // maximal violating pair
        let mut i_sel = None;
        let mut m_up = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut m_low = f64::INFINITY;
        for k in 0..n {
            let v = -y[k] * grad[k];
            let in_up = (y[k] > 0.0 && alpha[k] < c) || (y[k] < 0.0 && alpha[k] > 0.0);
            let in_low = (y[k] < 0.0 && alpha[k] < c) || (y[k] > 0.0 && alpha[k] > 0.0);
            if in_up && v > m_up {
                m_up = v;
                i_sel = Some(k);
            }
            if in_low && v < m_low {
                m_low = v;
                j_sel = Some(k);
            }
        }
        gap = m_up - m_low;
        if gap <= tol || iterations >= max_iter {
            break;
        }
        let (i, j) = (i_sel.expect("both classes present"), j_sel.expect("both classes present"));

        // one-dimensional feasible direction: da_i = y_i t, da_j = -y_j t
        let mut quad = gram.get(i, i) + gram.get(j, j) - 2.0 * gram.get(i, j);
        if quad <= 0.0 {
            indefinite = true;
            quad = TAU;
        }
        let t_unconstrained = (y[j] * grad[j] - y[i] * grad[i]) / quad;
        // box bounds on t from both coordinates
        let (lo_i, hi_i) = if y[i] > 0.0 {
            (-alpha[i], c - alpha[i])
        } else {
            (alpha[i] - c, alpha[i])
        };
        let (lo_j, hi_j) = if y[j] > 0.0 {
            (alpha[j] - c, alpha[j])
        } else {
            (-alpha[j], c - alpha[j])
        };
        let t = t_unconstrained.clamp(lo_i.max(lo_j), hi_i.min(hi_j));
        if t == 0.0 {
            // numerically stuck; treat as converged at current gap
            break;
        }
        alpha[i] += y[i] * t;
        alpha[j] -= y[j] * t;
        for k in 0..n {
            grad[k] += y[k] * t * (gram.get(k, i) - gram.get(k, j));
        }
        iterations += 1;
    }

    // bias averaged over all free support vectors
    let free: Vec<usize> = (0..n)
        .filter(|&k| alpha[k] > TAU && alpha[k] < c - TAU)
        .collect();
    let bias = if free.is_empty() {
        let mut m_up = f64::NEG_INFINITY;
        let mut m_low = f64::INFINITY;
        for k in 0..n {
            let v = -y[k] * grad[k];
            let in_up = (y[k] > 0.0 && alpha[k] < c) || (y[k] < 0.0 && alpha[k] > 0.0);
            let in_low = (y[k] < 0.0 && alpha[k] < c) || (y[k] > 0.0 && alpha[k] > 0.0);
            if in_up {
                m_up = m_up.max(v);
            }
            if in_low {
                m_low = m_low.min(v);
            }
        }
        (m_up + m_low) / 2.0
    } else {
        free.iter().map(|&k| -y[k] * grad[k]).sum::<f64>() / free.len() as f64
    };

    Ok(DualSolution {
        alpha,
        bias,
        iterations,
        kkt_gap: gap,
        indefinite_detected: indefinite,
    })
}

/// Maximum KKT violation of a dual solution against its Gram.
pub fn kkt_max_violation(
    gram: &GramMatrix,
    labels: &[i8],
    alpha: &[f64],
    bias: f64,
    c: f64,
) -> f64 {
    let n = gram.n();
    let mut max_violation: f64 = 0.0;
    for i in 0..n {
        let score: f64 = (0..n)
            .map(|j| alpha[j] * labels[j] as f64 * gram.get(i, j))
            .sum::<f64>()
            + bias;
        let margin = labels[i] as f64 * score;
        let v = if alpha[i] <= TAU {
            (1.0 - margin).max(0.0)
        } else if alpha[i] >= c - TAU {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        max_violation = max_violation.max(v);
    }
    let feasibility: f64 = alpha
        .iter()
        .zip(labels)
        .map(|(a, &y)| a * y as f64)
        .sum::<f64>()
        .abs();
    max_violation.max(feasibility)
}

/// A trained binary SVM: support expansion plus the kernel needed to
/// evaluate it on new images.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub spec: KernelSpec,
    pub c: f64,
    pub bias: f64,
    /// Indices of the support vectors in the training set.
    pub support_indices: Vec<usize>,
    pub alphas: Vec<f64>,
    pub labels: Vec<i8>,
    pub support_images: Vec<Image>,
}

impl SvmModel {
    pub fn train(
        images: &[Image],
        labels: &[i8],
        spec: &KernelSpec,
        c: f64,
        tol: f64,
        workers: usize,
    ) -> Result<SvmModel> {
        let gram = assemble(images, spec, workers)?;
        Self::from_gram(&gram, images, labels, spec, c, tol)
    }

    pub fn from_gram(
        gram: &GramMatrix,
        images: &[Image],
        labels: &[i8],
        spec: &KernelSpec,
        c: f64,
        tol: f64,
    ) -> Result<SvmModel> {
        let sol = solve_dual_smo(gram, labels, c, tol)?;
        let mut support_indices = Vec::new();
        let mut alphas = Vec::new();
        let mut sv_labels = Vec::new();
        let mut support_images = Vec::new();
        for (i, &a) in sol.alpha.iter().enumerate() {
            if a > TAU {
                support_indices.push(i);
                alphas.push(a);
                sv_labels.push(labels[i]);
                support_images.push(images[i].clone());
            }
        }
        Ok(SvmModel {
            spec: spec.clone(),
            c,
            bias: sol.bias,
            support_indices,
            alphas,
            labels: sv_labels,
            support_images,
        })
    }

    /// Decision score sum_i alpha_i y_i K(sv_i, x) + b.
    pub fn score(&self, x: &Image) -> Result<f64> {
        let f = KernelFunction::new(self.spec.clone(), x.rows(), x.cols())?;
        self.score_with(&f, x)
    }

    pub fn score_with(&self, f: &KernelFunction, x: &Image) -> Result<f64> {
        let mut s = self.bias;
        for ((sv, &a), &y) in self.support_images.iter().zip(&self.alphas).zip(&self.labels) {
            s += a * y as f64 * f.eval(sv, x)?;
        }
        Ok(s)
    }

    /// Score from precomputed kernel values K(train_i, x) indexed by the
    /// original training set.
    pub fn score_from_column(&self, column: &[f64]) -> f64 {
        let mut s = self.bias;
        for ((&idx, &a), &y) in self.support_indices.iter().zip(&self.alphas).zip(&self.labels) {
            s += a * y as f64 * column[idx];
        }
        s
    }

    /// Predicted label in {-1, +1}; a zero score maps to +1.
    pub fn predict(&self, x: &Image) -> Result<(i8, f64)> {
        let s = self.score(x)?;
        Ok((if s < 0.0 { -1 } else { 1 }, s))
    }

    /// ||w||^2 in the kernel feature space, from the dual expansion.
    pub fn norm_w_squared(&self, gram: &GramMatrix) -> f64 {
        let k = self.support_indices.len();
        let mut acc = 0.0;
        for a in 0..k {
            for b in 0..k {
                acc += self.alphas[a]
                    * self.alphas[b]
                    * self.labels[a] as f64
                    * self.labels[b] as f64
                    * gram.get(self.support_indices[a], self.support_indices[b]);
            }
        }
        acc
    }

    /// Geometric margin 1/||w||.
    pub fn margin(&self, gram: &GramMatrix) -> f64 {
        1.0 / self.norm_w_squared(gram).sqrt()
    }

    /// Dual feasibility residual |sum alpha_i y_i|.
    pub fn equality_residual(&self) -> f64 {
        self.alphas
            .iter()
            .zip(&self.labels)
            .map(|(a, &y)| a * y as f64)
            .sum::<f64>()
            .abs()
    }
}

/// All transformed copies of every sample: (T x_i, y_i) for each
/// enumerated T, grouped per sample.
pub fn augment_dataset<L: Clone>(
    images: &[Image],
    labels: &[L],
    group: &TransformGroup,
) -> Result<(Vec<Image>, Vec<L>)> {
    let first = images.first().ok_or(Error::EmptyDataset)?;
    let descs = group.enumerate(first.rows(), first.cols())?;
    let mut out_images = Vec::with_capacity(images.len() * descs.len());
    let mut out_labels = Vec::with_capacity(images.len() * descs.len());
    for (img, label) in images.iter().zip(labels) {
        for d in &descs {
            out_images.push(d.apply(img));
            out_labels.push(label.clone());
        }
    }
    Ok((out_images, out_labels))
}

/// One-vs-one multiclass reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    pub classes: Vec<u32>,
    /// One binary model per unordered class pair (a, b) with a < b; the
    /// positive label corresponds to class a.
    pub pairs: Vec<(u32, u32)>,
    pub models: Vec<SvmModel>,
}

impl MulticlassModel {
    /// Trains all one-vs-one submodels on principal submatrices of a
    /// single precomputed Gram.
    pub fn train(
        images: &[Image],
        labels: &[u32],
        spec: &KernelSpec,
        c: f64,
        tol: f64,
        workers: usize,
    ) -> Result<MulticlassModel> {
        if images.len() != labels.len() {
            return Err(Error::DimensionMismatch(
                format!("{} images", images.len()),
                format!("{} labels", labels.len()),
            ));
        }
        let mut classes: Vec<u32> = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::SingleClass);
        }
        let gram = assemble(images, spec, workers)?;
        Self::from_gram(&gram, images, labels, &classes, spec, c, tol)
    }

    pub fn from_gram(
        gram: &GramMatrix,
        images: &[Image],
        labels: &[u32],
        classes: &[u32],
        spec: &KernelSpec,
        c: f64,
        tol: f64,
    ) -> Result<MulticlassModel> {
        let mut pairs = Vec::new();
        for (ai, &a) in classes.iter().enumerate() {
            for &b in &classes[ai + 1..] {
                pairs.push((a, b));
            }
        }
        let models: Vec<SvmModel> = pairs
            .par_iter()
            .map(|&(a, b)| {
                let indices: Vec<usize> = labels
                    .iter()
                    .enumerate()
                    .filter(|(_, &l)| l == a || l == b)
                    .map(|(i, _)| i)
                    .collect();
                let sub_gram = gram.submatrix(&indices);
                let sub_labels: Vec<i8> = indices
                    .iter()
                    .map(|&i| if labels[i] == a { 1 } else { -1 })
                    .collect();
                let sub_images: Vec<Image> = indices.iter().map(|&i| images[i].clone()).collect();
                let mut model =
                    SvmModel::from_gram(&sub_gram, &sub_images, &sub_labels, spec, c, tol)?;
                // remap support indices to the full training set
                model.support_indices = model
                    .support_indices
                    .iter()
                    .map(|&si| indices[si])
                    .collect();
                Ok(model)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MulticlassModel {
            classes: classes.to_vec(),
            pairs,
            models,
        })
    }

    fn vote(&self, scores: &[f64]) -> u32 {
        let mut votes = vec![0usize; self.classes.len()];
        let mut score_sum = vec![0.0f64; self.classes.len()];
        for ((&(a, b), &s), _) in self.pairs.iter().zip(scores).zip(&self.models) {
            let ia = self.classes.iter().position(|&c| c == a).expect("class");
            let ib = self.classes.iter().position(|&c| c == b).expect("class");
            if s >= 0.0 {
                votes[ia] += 1;
            } else {
                votes[ib] += 1;
            }
            score_sum[ia] += s;
            score_sum[ib] -= s;
        }
        // majority vote, ties by summed scores, then smallest class id
        let mut best = 0usize;
        for k in 1..self.classes.len() {
            let better = votes[k] > votes[best]
                || (votes[k] == votes[best] && score_sum[k] > score_sum[best]);
            if better {
                best = k;
            }
        }
        self.classes[best]
    }

    pub fn predict(&self, x: &Image) -> Result<u32> {
        let f = KernelFunction::new(self.models[0].spec.clone(), x.rows(), x.cols())?;
        let scores = self
            .models
            .iter()
            .map(|m| m.score_with(&f, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.vote(&scores))
    }

    /// Prediction from precomputed kernel values K(train_i, x).
    pub fn predict_from_column(&self, column: &[f64]) -> u32 {
        let scores: Vec<f64> = self.models.iter().map(|m| m.score_from_column(column)).collect();
        self.vote(&scores)
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&MODEL_VERSION.to_le_bytes())?;
        w.write_all(&(self.classes.len() as u32).to_le_bytes())?;
        for &c in &self.classes {
            w.write_all(&c.to_le_bytes())?;
        }
        w.write_all(&(self.models.len() as u32).to_le_bytes())?;
        for (model, &(a, b)) in self.models.iter().zip(&self.pairs) {
            w.write_all(&a.to_le_bytes())?;
            w.write_all(&b.to_le_bytes())?;
            let spec_json = serde_json::to_string(&model.spec)
                .map_err(|e| Error::BadFormat(e.to_string()))?;
            w.write_all(&(spec_json.len() as u32).to_le_bytes())?;
            w.write_all(spec_json.as_bytes())?;
            w.write_all(&model.c.to_le_bytes())?;
            w.write_all(&model.bias.to_le_bytes())?;
            w.write_all(&(model.alphas.len() as u32).to_le_bytes())?;
            for k in 0..model.alphas.len() {
                w.write_all(&(model.support_indices[k] as u64).to_le_bytes())?;
                w.write_all(&model.alphas[k].to_le_bytes())?;
                w.write_all(&[model.labels[k] as u8])?;
                let img = &model.support_images[k];
                w.write_all(&(img.rows() as u32).to_le_bytes())?;
                w.write_all(&(img.cols() as u32).to_le_bytes())?;
                for &px in img.pixels() {
                    w.write_all(&px.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn load_binary(path: &Path) -> Result<MulticlassModel> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Truncated(path.display().to_string()))?;
        if &magic != MODEL_MAGIC {
            return Err(Error::BadMagic {
                expected: u32::from_be_bytes(*MODEL_MAGIC),
                found: u32::from_be_bytes(magic),
            });
        }
        let version = read_u32(&mut r)?;
        if version != MODEL_VERSION {
            return Err(Error::BadFormat(format!("unsupported model version {version}")));
        }
        let n_classes = read_u32(&mut r)? as usize;
        let classes = (0..n_classes).map(|_| read_u32(&mut r)).collect::<Result<Vec<_>>>()?;
        let n_models = read_u32(&mut r)? as usize;
        let mut pairs = Vec::with_capacity(n_models);
        let mut models = Vec::with_capacity(n_models);
        for _ in 0..n_models {
            let a = read_u32(&mut r)?;
            let b = read_u32(&mut r)?;
            pairs.push((a, b));
            let spec_len = read_u32(&mut r)? as usize;
            let mut spec_buf = vec![0u8; spec_len];
            r.read_exact(&mut spec_buf)
                .map_err(|_| Error::Truncated("spec".into()))?;
            let spec: KernelSpec = serde_json::from_slice(&spec_buf)
                .map_err(|e| Error::BadFormat(e.to_string()))?;
            let c = read_f64(&mut r)?;
            let bias = read_f64(&mut r)?;
            let n_sv = read_u32(&mut r)? as usize;
            let mut support_indices = Vec::with_capacity(n_sv);
            let mut alphas = Vec::with_capacity(n_sv);
            let mut labels = Vec::with_capacity(n_sv);
            let mut support_images = Vec::with_capacity(n_sv);
            for _ in 0..n_sv {
                support_indices.push(read_u64(&mut r)? as usize);
                alphas.push(read_f64(&mut r)?);
                let mut lb = [0u8; 1];
                r.read_exact(&mut lb).map_err(|_| Error::Truncated("label".into()))?;
                labels.push(lb[0] as i8);
                let rows = read_u32(&mut r)? as usize;
                let cols = read_u32(&mut r)? as usize;
                let mut px = Vec::with_capacity(rows * cols);
                for _ in 0..rows * cols {
                    px.push(read_f64(&mut r)?);
                }
                support_images.push(Image::new(rows, cols, px)?);
            }
            models.push(SvmModel {
                spec,
                c,
                bias,
                support_indices,
                alphas,
                labels,
                support_images,
            });
        }
        Ok(MulticlassModel { classes, pairs, models })
    }

    /// Human-readable summary of the model structure.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "classes: {:?}\nbinary models: {}\n",
            self.classes,
            self.models.len()
        ));
        for (model, &(a, b)) in self.models.iter().zip(&self.pairs) {
            out.push_str(&format!(
                "  {a} vs {b}: {} SVs, bias {:.6}, spec {}\n",
                model.alphas.len(),
                model.bias,
                model.spec.digest()
            ));
        }
        out
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| Error::Truncated("u32".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| Error::Truncated("u64".into()))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| Error::Truncated("f64".into()))?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::BaseKernel;

    fn unnormalized_linear() -> KernelSpec {
        KernelSpec::new(BaseKernel::Linear { normalized: false })
    }

    fn img1x2(a: f64, b: f64) -> Image {
        Image::new(1, 2, vec![a, b]).unwrap()
    }

    #[test]
    fn analytic_two_point_problem() {
        // x1=(1,2) y=+1, x2=(5,2) y=-1: lambda = (0.125, 0.125), b = 1.5
        let images = vec![img1x2(1.0, 2.0), img1x2(5.0, 2.0)];
        let labels = [1i8, -1];
        let gram = assemble(&images, &unnormalized_linear(), 1).unwrap();
        let sol = solve_dual_smo(&gram, &labels, 1e6, 1e-10).unwrap();
        assert!((sol.alpha[0] - 0.125).abs() < 1e-6, "alpha0 {}", sol.alpha[0]);
        assert!((sol.alpha[1] - 0.125).abs() < 1e-6, "alpha1 {}", sol.alpha[1]);
        assert!((sol.bias - 1.5).abs() < 1e-6, "bias {}", sol.bias);
        assert!(kkt_max_violation(&gram, &labels, &sol.alpha, sol.bias, 1e6) < 1e-6);
    }

    #[test]
    fn two_point_model_prediction() {
        let images = vec![img1x2(1.0, 2.0), img1x2(5.0, 2.0)];
        let labels = [1i8, -1];
        let model =
            SvmModel::train(&images, &labels, &unnormalized_linear(), 1e6, 1e-10, 1).unwrap();
        // w = (-0.5, 0), b = 1.5; x=(0,2) -> score 1.5
        let (label, score) = model.predict(&img1x2(0.0, 2.0)).unwrap();
        assert_eq!(label, 1);
        assert!((score - 1.5).abs() < 1e-6);
        // support vectors sit on the margin
        let (_, s1) = model.predict(&img1x2(1.0, 2.0)).unwrap();
        assert!((s1.abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn duplicate_points_opposite_labels() {
        // two samples at distance d: margin d/2 each side, total margin d
        let images = vec![img1x2(0.0, 0.0), img1x2(2.0, 0.0)];
        let labels = [1i8, -1];
        let gram = assemble(&images, &unnormalized_linear(), 1).unwrap();
        let model = SvmModel::from_gram(
            &gram,
            &images,
            &labels,
            &unnormalized_linear(),
            1e6,
            1e-10,
        )
        .unwrap();
        // 1/||w|| = d/2 = 1
        assert!((model.margin(&gram) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_single_class() {
        let images = vec![img1x2(1.0, 0.0), img1x2(0.0, 1.0)];
        let gram = assemble(&images, &unnormalized_linear(), 1).unwrap();
        assert!(matches!(
            solve_dual_smo(&gram, &[1, 1], 1.0, 1e-3),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn dual_feasibility_holds() {
        let images = vec![
            img1x2(1.0, 2.0),
            img1x2(2.0, 1.0),
            img1x2(5.0, 2.0),
            img1x2(2.0, 5.0),
        ];
        let labels = [1i8, 1, -1, -1];
        let model =
            SvmModel::train(&images, &labels, &unnormalized_linear(), 1e6, 1e-10, 1).unwrap();
        assert!(model.equality_residual() < 1e-8);
    }

    #[test]
    fn augment_identity_is_noop() {
        let images = vec![img1x2(1.0, 2.0)];
        let labels = vec![1u32];
        let (ai, al) =
            augment_dataset(&images, &labels, &TransformGroup::IdentityOnly).unwrap();
        assert_eq!(ai, images);
        assert_eq!(al, labels);
    }

    #[test]
    fn augment_swap_group_toy() {
        let images = vec![img1x2(1.0, 2.0)];
        let labels = vec![1u32];
        let (ai, _) =
            augment_dataset(&images, &labels, &TransformGroup::CyclicTranslations).unwrap();
        assert_eq!(ai.len(), 2);
        assert_eq!(ai[1].pixels(), &[2.0, 1.0]);
    }

    #[test]
    fn augment_counts() {
        let images: Vec<Image> = (0..10).map(|i| Image::new(4, 4, vec![i as f64; 16]).unwrap()).collect();
        let labels: Vec<u32> = (0..10).collect();
        let (ai, al) =
            augment_dataset(&images, &labels, &TransformGroup::CyclicTranslations).unwrap();
        assert_eq!(ai.len(), 160);
        assert_eq!(al.len(), 160);
    }

    #[test]
    fn multiclass_two_classes_matches_binary() {
        let images = vec![
            img1x2(1.0, 2.0),
            img1x2(2.0, 1.0),
            img1x2(5.0, 2.0),
            img1x2(2.0, 5.0),
        ];
        let labels = [0u32, 0, 1, 1];
        let mc = MulticlassModel::train(&images, &labels, &unnormalized_linear(), 1e6, 1e-10, 1)
            .unwrap();
        assert_eq!(mc.models.len(), 1);
        let binary_labels = [1i8, 1, -1, -1];
        let bin =
            SvmModel::train(&images, &binary_labels, &unnormalized_linear(), 1e6, 1e-10, 1)
                .unwrap();
        for x in [img1x2(0.0, 0.0), img1x2(3.0, 3.1), img1x2(6.0, 1.0)] {
            let expected = if bin.predict(&x).unwrap().0 == 1 { 0 } else { 1 };
            assert_eq!(mc.predict(&x).unwrap(), expected);
        }
    }

    #[test]
    fn multiclass_separable_clusters() {
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for (cls, center) in [(0u32, (0.0, 0.0)), (1, (10.0, 0.0)), (2, (0.0, 10.0))] {
            for d in [(-0.5, 0.0), (0.5, 0.0), (0.0, -0.5), (0.0, 0.5)] {
                images.push(img1x2(center.0 + d.0, center.1 + d.1));
                labels.push(cls);
            }
        }
        let mc = MulticlassModel::train(&images, &labels, &unnormalized_linear(), 1e6, 1e-8, 2)
            .unwrap();
        assert_eq!(mc.models.len(), 3);
        let correct = images
            .iter()
            .zip(&labels)
            .filter(|(x, &l)| mc.predict(x).unwrap() == l)
            .count();
        assert_eq!(correct, images.len());
    }

    #[test]
    fn class_relabeling_preserves_partitioning() {
        let images = vec![
            img1x2(0.0, 0.0),
            img1x2(0.5, 0.0),
            img1x2(10.0, 0.0),
            img1x2(10.5, 0.0),
        ];
        let labels_a = [0u32, 0, 1, 1];
        let labels_b = [7u32, 7, 3, 3];
        let ma = MulticlassModel::train(&images, &labels_a, &unnormalized_linear(), 1e6, 1e-8, 1)
            .unwrap();
        let mb = MulticlassModel::train(&images, &labels_b, &unnormalized_linear(), 1e6, 1e-8, 1)
            .unwrap();
        for x in [img1x2(1.0, 0.0), img1x2(9.0, 0.0)] {
            let pa = ma.predict(&x).unwrap();
            let pb = mb.predict(&x).unwrap();
            // same partition under the relabeling 0 -> 7, 1 -> 3
            assert_eq!(pb, if pa == 0 { 7 } else { 3 });
        }
    }

    #[test]
    fn model_roundtrip() {
        let images = vec![
            img1x2(1.0, 2.0),
            img1x2(2.0, 1.0),
            img1x2(5.0, 2.0),
            img1x2(2.0, 5.0),
        ];
        let labels = [0u32, 0, 1, 1];
        let mc = MulticlassModel::train(&images, &labels, &unnormalized_linear(), 1e6, 1e-10, 1)
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        mc.save_binary(&path).unwrap();
        let loaded = MulticlassModel::load_binary(&path).unwrap();
        assert_eq!(mc, loaded);
        assert!(loaded.summary().contains("binary models: 1"));
    }
}
