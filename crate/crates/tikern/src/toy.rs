//! Two-pixel toy problem contrasting data augmentation, the average-fit
//! kernel, and the best-fit translation kernel.
//!
//! Training set: X1 = (1, 2) labelled +1 and X2 = (5, 2) labelled -1,
//! viewed as 1x2 images whose cyclic translation group is {identity,
//! swap}. Augmentation adds the swapped copies (2, 1) and (2, 5); the
//! resulting linear SVM boundary is the line x1 + x2 = 5. The best-fit
//! kernel instead yields a piecewise linear boundary with a larger
//! margin.

use crate::error::Result;
use crate::gram::assemble;
use crate::image::Image;
use crate::kernels::{BaseKernel, Invariance, KernelSpec};
use crate::svm::{augment_dataset, SvmModel};
use crate::transforms::TransformGroup;

const C: f64 = 1e6;
const TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct GridPoint {
    pub x1: f64,
    pub x2: f64,
    pub augmented_score: f64,
    pub avg_score: f64,
    pub ti_score: f64,
}

#[derive(Debug, Clone)]
pub struct ToyDemoResult {
    pub augmented_model: SvmModel,
    pub avg_model: SvmModel,
    pub ti_model: SvmModel,
    pub augmented_margin: f64,
    pub ti_margin: f64,
    /// 21x21 grid over [0, 6]^2, row-major in x1 then x2.
    pub grid: Vec<GridPoint>,
    /// x1 + x2 at sign changes of the augmented score along grid lines;
    /// all should equal 5 for the boundary x1 + x2 = 5.
    pub boundary_sums: Vec<f64>,
}

pub const GRID_SIDE: usize = 21;
pub const GRID_MAX: f64 = 6.0;

fn point(x1: f64, x2: f64) -> Image {
    Image::new(1, 2, vec![x1, x2]).expect("finite 2-vector")
}

/// Trains the three models and evaluates them on the grid.
pub fn demo_toy_example() -> Result<ToyDemoResult> {
    let base = BaseKernel::Linear { normalized: false };
    let samples = vec![point(1.0, 2.0), point(5.0, 2.0)];
    let labels = vec![1i8, -1];

    let (aug_images, aug_labels) =
        augment_dataset(&samples, &labels, &TransformGroup::CyclicTranslations)?;
    let plain = KernelSpec::new(base.clone());
    let aug_gram = assemble(&aug_images, &plain, 1)?;
    let augmented_model =
        SvmModel::from_gram(&aug_gram, &aug_images, &aug_labels, &plain, C, TOL)?;
    let augmented_margin = augmented_model.margin(&aug_gram);

    let avg_spec = KernelSpec::new(base.clone())
        .with_invariance(Invariance::avg(TransformGroup::CyclicTranslations));
    let avg_gram = assemble(&samples, &avg_spec, 1)?;
    let avg_model = SvmModel::from_gram(&avg_gram, &samples, &labels, &avg_spec, C, TOL)?;

    let ti_spec = KernelSpec::new(base)
        .with_invariance(Invariance::best(TransformGroup::CyclicTranslations));
    let ti_gram = assemble(&samples, &ti_spec, 1)?;
    let ti_model = SvmModel::from_gram(&ti_gram, &samples, &labels, &ti_spec, C, TOL)?;
    let ti_margin = ti_model.margin(&ti_gram);

    let step = GRID_MAX / (GRID_SIDE - 1) as f64;
    let mut grid = Vec::with_capacity(GRID_SIDE * GRID_SIDE);
    for i in 0..GRID_SIDE {
        for j in 0..GRID_SIDE {
            let (x1, x2) = (i as f64 * step, j as f64 * step);
            let x = point(x1, x2);
            grid.push(GridPoint {
                x1,
                x2,
                augmented_score: augmented_model.score(&x)?,
                avg_score: avg_model.score(&x)?,
                ti_score: ti_model.score(&x)?,
            });
        }
    }

    // boundary crossings of the augmented score along horizontal and
    // vertical grid segments, located by linear interpolation (exact for
    // a linear decision function)
    let at = |i: usize, j: usize| &grid[i * GRID_SIDE + j];
    let mut boundary_sums = Vec::new();
    let mut crossing = |a: &GridPoint, b: &GridPoint| {
        let (sa, sb) = (a.augmented_score, b.augmented_score);
        if sa == 0.0 {
            boundary_sums.push(a.x1 + a.x2);
        } else if sa * sb < 0.0 {
            let t = sa / (sa - sb);
            let x1 = a.x1 + t * (b.x1 - a.x1);
            let x2 = a.x2 + t * (b.x2 - a.x2);
            boundary_sums.push(x1 + x2);
        }
    };
    for i in 0..GRID_SIDE {
        for j in 0..GRID_SIDE {
            if i + 1 < GRID_SIDE {
                crossing(at(i, j), at(i + 1, j));
            }
            if j + 1 < GRID_SIDE {
                crossing(at(i, j), at(i, j + 1));
            }
        }
    }

    Ok(ToyDemoResult {
        augmented_model,
        avg_model,
        ti_model,
        augmented_margin,
        ti_margin,
        grid,
        boundary_sums,
    })
}

impl ToyDemoResult {
    /// Grid points where the average-kernel and augmented models disagree
    /// in sign despite a confident score.
    pub fn sign_disagreements(&self, threshold: f64) -> usize {
        self.grid
            .iter()
            .filter(|g| {
                g.avg_score.abs() > threshold
                    && g.augmented_score.abs() > threshold
                    && (g.avg_score > 0.0) != (g.augmented_score > 0.0)
            })
            .count()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("toy demo: X1=(1,2) +1, X2=(5,2) -1, group {identity, swap}\n\n");
        let dev = self
            .boundary_sums
            .iter()
            .map(|s| (s - 5.0).abs())
            .fold(0.0f64, f64::max);
        out.push_str(&format!(
            "augmented linear SVM: boundary x1 + x2 = 5 (max deviation {dev:.2e} over {} crossings)\n",
            self.boundary_sums.len()
        ));
        out.push_str(&format!(
            "augmented margin: {:.6}\nbest-fit TI margin: {:.6}\n",
            self.augmented_margin, self.ti_margin
        ));
        out.push_str(&format!(
            "average-kernel vs augmented sign disagreements (|score| > 1e-3): {}\n",
            self.sign_disagreements(1e-3)
        ));
        out.push_str(&format!(
            "grid: {GRID_SIDE}x{GRID_SIDE} over [0, {GRID_MAX}]^2 (see plot data)\n"
        ));
        out
    }

    /// Tab-separated grid of decision values for plotting.
    pub fn plot_data(&self) -> String {
        let mut out = String::from("x1\tx2\taugmented\taverage\tti_best\n");
        for g in &self.grid {
            out.push_str(&format!(
                "{:.3}\t{:.3}\t{:.6}\t{:.6}\t{:.6}\n",
                g.x1, g.x2, g.augmented_score, g.avg_score, g.ti_score
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn augmented_boundary_is_sum_five() {
        let demo = demo_toy_example().unwrap();
        assert!(!demo.boundary_sums.is_empty());
        for s in &demo.boundary_sums {
            assert!((s - 5.0).abs() < 1e-6, "crossing at sum {s}");
        }
    }

    #[test]
    fn ti_margin_beats_augmented_margin() {
        let demo = demo_toy_example().unwrap();
        // analytic values: sqrt(2) and 1/sqrt(0.4)
        assert!((demo.augmented_margin - 2.0f64.sqrt()).abs() < 1e-6);
        assert!((demo.ti_margin - 1.0 / 0.4f64.sqrt()).abs() < 1e-6);
        assert!(demo.ti_margin > demo.augmented_margin);
    }

    #[test]
    fn average_kernel_matches_augmentation_signs() {
        let demo = demo_toy_example().unwrap();
        assert_eq!(demo.sign_disagreements(1e-3), 0);
    }

    #[test]
    fn outputs_are_well_formed() {
        let demo = demo_toy_example().unwrap();
        assert_eq!(demo.grid.len(), GRID_SIDE * GRID_SIDE);
        let text = demo.render();
        assert!(text.contains("boundary x1 + x2 = 5"));
        let plot = demo.plot_data();
        assert_eq!(plot.lines().count(), GRID_SIDE * GRID_SIDE + 1);
    }
}
