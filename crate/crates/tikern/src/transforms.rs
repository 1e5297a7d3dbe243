//! Finite transformation groups acting on images.
//!
//! Every group here contains the identity, and is closed under
//! composition and inverse: cyclic translations form a product of cyclic
//! groups, strided translations a subgroup thereof, and rotations are
//! closed when the angles are the A-th roots of the full circle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// Interpolation mode for rotation resampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Interp {
    Nearest,
    #[default]
    Bilinear,
}

/// A finite, enumerable group of image transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TransformGroup {
    /// The trivial group {I}.
    IdentityOnly,
    /// All m1*m2 cyclic shifts.
    CyclicTranslations,
    /// Shifts with |r| <= r_max, |s| <= s_max (not closed in general;
    /// offered to bound cost on large canvases).
    WindowedTranslations { r_max: usize, s_max: usize },
    /// Cyclic shifts restricted to multiples of a stride that divides the
    /// image dimensions; a closed subgroup of the full translation group.
    StridedTranslations { r_stride: usize, s_stride: usize },
    /// `count` equally spaced angles covering the full circle, incl. 0.
    Rotations { count: usize, interp: Interp },
}

/// One enumerated group element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformDesc {
    Translate { r: usize, s: usize },
    Rotate { theta: f64, interp: Interp },
}

impl TransformDesc {
    pub fn is_identity(&self) -> bool {
        match *self {
            TransformDesc::Translate { r, s } => r == 0 && s == 0,
            TransformDesc::Rotate { theta, .. } => theta == 0.0,
        }
    }

    pub fn apply(&self, img: &Image) -> Image {
        match *self {
            TransformDesc::Translate { r, s } => translate(img, r as i64, s as i64),
            TransformDesc::Rotate { theta, interp } => rotate(img, theta, interp),
        }
    }
}

impl TransformGroup {
    pub fn rotations(count: usize) -> Self {
        TransformGroup::Rotations {
            count,
            interp: Interp::Bilinear,
        }
    }

    /// Enumerates every group element for images of the given dimensions.
    pub fn enumerate(&self, rows: usize, cols: usize) -> Result<Vec<TransformDesc>> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(
                format!("{rows}x{cols}"),
                "nonzero dimensions".into(),
            ));
        }
        let descs = match *self {
            TransformGroup::IdentityOnly => vec![TransformDesc::Translate { r: 0, s: 0 }],
            TransformGroup::CyclicTranslations => {
                let mut v = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    for s in 0..cols {
                        v.push(TransformDesc::Translate { r, s });
                    }
                }
                v
            }
            TransformGroup::WindowedTranslations { r_max, s_max } => {
                let mut v = Vec::with_capacity((2 * r_max + 1) * (2 * s_max + 1));
                for dr in -(r_max as i64)..=(r_max as i64) {
                    for ds in -(s_max as i64)..=(s_max as i64) {
                        v.push(TransformDesc::Translate {
                            r: dr.rem_euclid(rows as i64) as usize,
                            s: ds.rem_euclid(cols as i64) as usize,
                        });
                    }
                }
                v
            }
            TransformGroup::StridedTranslations { r_stride, s_stride } => {
                if r_stride == 0 || s_stride == 0 || rows % r_stride != 0 || cols % s_stride != 0 {
                    return Err(Error::InvalidSpec(format!(
                        "strides ({r_stride},{s_stride}) must divide dimensions ({rows},{cols})"
                    )));
                }
                let mut v = Vec::new();
                for r in (0..rows).step_by(r_stride) {
                    for s in (0..cols).step_by(s_stride) {
                        v.push(TransformDesc::Translate { r, s });
                    }
                }
                v
            }
            TransformGroup::Rotations { count, interp } => {
                if count == 0 {
                    return Err(Error::InvalidSpec("rotation count must be >= 1".into()));
                }
                (0..count)
                    .map(|a| {
                        let mut theta = 2.0 * std::f64::consts::PI * a as f64 / count as f64;
                        // map to (-pi, pi]
                        if theta > std::f64::consts::PI {
                            theta -= 2.0 * std::f64::consts::PI;
                        }
                        TransformDesc::Rotate { theta, interp }
                    })
                    .collect()
            }
        };
        Ok(descs)
    }

    /// Group order for the given dimensions.
    pub fn order(&self, rows: usize, cols: usize) -> Result<usize> {
        Ok(self.enumerate(rows, cols)?.len())
    }

    pub fn is_translation_group(&self) -> bool {
        !matches!(self, TransformGroup::Rotations { .. })
    }
}

/// Cyclic translation: output pixel (p,q) reads input ((p+r) mod m1, (q+s) mod m2).
pub fn translate(img: &Image, r: i64, s: i64) -> Image {
    let (rows, cols) = (img.rows(), img.cols());
    let r = r.rem_euclid(rows as i64) as usize;
    let s = s.rem_euclid(cols as i64) as usize;
    let mut out = Image::zeros(rows, cols);
    for p in 0..rows {
        let sp = (p + r) % rows;
        for q in 0..cols {
            let sq = (q + s) % cols;
            out.set(p, q, img.get(sp, sq));
        }
    }
    out
}

/// Rotation about the image center by `theta`, inverse-mapped so that the
/// output pixel (p,q) samples the input at the rotated source coordinate.
/// Sources outside the grid read as 0.
pub fn rotate(img: &Image, theta: f64, interp: Interp) -> Image {
    if theta == 0.0 {
        return img.clone();
    }
    let (rows, cols) = (img.rows(), img.cols());
    let (c1, c2) = ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0);
    let (sin, cos) = theta.sin_cos();
    let mut out = Image::zeros(rows, cols);
    for p in 0..rows {
        for q in 0..cols {
            let dp = p as f64 - c1;
            let dq = q as f64 - c2;
            let sp = dp * cos - dq * sin + c1;
            let sq = dp * sin + dq * cos + c2;
            let v = match interp {
                Interp::Nearest => sample_nearest(img, sp, sq),
                Interp::Bilinear => sample_bilinear(img, sp, sq),
            };
            out.set(p, q, v);
        }
    }
    out
}

fn sample_nearest(img: &Image, p: f64, q: f64) -> f64 {
    let pi = p.round();
    let qi = q.round();
    if pi < 0.0 || qi < 0.0 || pi >= img.rows() as f64 || qi >= img.cols() as f64 {
        0.0
    } else {
        img.get(pi as usize, qi as usize)
    }
}

fn sample_bilinear(img: &Image, p: f64, q: f64) -> f64 {
    let p0 = p.floor();
    let q0 = q.floor();
    let fp = p - p0;
    let fq = q - q0;
    let mut acc = 0.0;
    for (dp, wp) in [(0.0, 1.0 - fp), (1.0, fp)] {
        for (dq, wq) in [(0.0, 1.0 - fq), (1.0, fq)] {
            if wp == 0.0 || wq == 0.0 {
                continue;
            }
            let sp = p0 + dp;
            let sq = q0 + dq;
            let v = if sp < 0.0 || sq < 0.0 || sp >= img.rows() as f64 || sq >= img.cols() as f64 {
                0.0
            } else {
                img.get(sp as usize, sq as usize)
            };
            acc += wp * wq * v;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(rows: usize, cols: usize, px: &[f64]) -> Image {
        Image::new(rows, cols, px.to_vec()).unwrap()
    }

    #[test]
    fn translate_identity() {
        let x = img(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(translate(&x, 0, 0), x);
    }

    #[test]
    fn translate_1x2() {
        let x = img(1, 2, &[1.0, 2.0]);
        assert_eq!(translate(&x, 0, 1).pixels(), &[2.0, 1.0]);
    }

    #[test]
    fn translate_inverse() {
        let x = img(3, 4, &(0..12).map(|v| v as f64).collect::<Vec<_>>());
        let y = translate(&translate(&x, 2, 3), 3 - 2, 4 - 3);
        assert_eq!(x, y);
    }

    #[test]
    fn translate_preserves_pixel_multiset() {
        let x = img(3, 3, &[1.0, 5.0, 2.0, 9.0, 0.0, 3.0, 7.0, 4.0, 6.0]);
        let y = translate(&x, 1, 2);
        let mut a: Vec<_> = x.pixels().to_vec();
        let mut b: Vec<_> = y.pixels().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
    }

    #[test]
    fn rotate_zero_is_identity() {
        let x = img(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        assert_eq!(rotate(&x, 0.0, Interp::Nearest), x);
        assert_eq!(rotate(&x, 0.0, Interp::Bilinear), x);
    }

    #[test]
    fn rotate_zero_input_stays_zero() {
        let x = Image::zeros(5, 7);
        let y = rotate(&x, 1.234, Interp::Bilinear);
        assert!(y.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rotate_cross_quarter_turn() {
        // symmetric 5x5 cross is fixed by a quarter turn
        let mut x = Image::zeros(5, 5);
        for i in 0..5 {
            x.set(2, i, 1.0);
            x.set(i, 2, 1.0);
        }
        let y = rotate(&x, std::f64::consts::FRAC_PI_2, Interp::Nearest);
        for p in 0..5 {
            for q in 0..5 {
                assert_eq!(y.get(p, q), x.get(p, q), "pixel ({p},{q})");
            }
        }
    }

    #[test]
    fn enumerate_counts() {
        let full = TransformGroup::CyclicTranslations.enumerate(4, 4).unwrap();
        assert_eq!(full.len(), 16);
        let rot = TransformGroup::rotations(36).enumerate(8, 8).unwrap();
        assert_eq!(rot.len(), 36);
        assert!(rot.iter().any(|d| d.is_identity()));
        let id = TransformGroup::IdentityOnly.enumerate(8, 8).unwrap();
        assert_eq!(id.len(), 1);
        let win = TransformGroup::WindowedTranslations { r_max: 2, s_max: 1 }
            .enumerate(8, 8)
            .unwrap();
        assert_eq!(win.len(), 15);
        let strided = TransformGroup::StridedTranslations {
            r_stride: 14,
            s_stride: 14,
        }
        .enumerate(28, 28)
        .unwrap();
        assert_eq!(strided.len(), 4);
    }

    #[test]
    fn enumerate_rejects_zero_dims() {
        assert!(TransformGroup::CyclicTranslations.enumerate(0, 4).is_err());
    }

    #[test]
    fn cyclic_group_axioms() {
        // identity, closure, inverse on a small grid
        let descs = TransformGroup::CyclicTranslations.enumerate(3, 4).unwrap();
        assert!(descs.iter().any(|d| d.is_identity()));
        let contains = |r: usize, s: usize| {
            descs
                .iter()
                .any(|d| matches!(d, TransformDesc::Translate { r: dr, s: ds } if *dr == r && *ds == s))
        };
        for a in &descs {
            for b in &descs {
                if let (
                    TransformDesc::Translate { r: r1, s: s1 },
                    TransformDesc::Translate { r: r2, s: s2 },
                ) = (a, b)
                {
                    assert!(contains((r1 + r2) % 3, (s1 + s2) % 4));
                }
            }
            if let TransformDesc::Translate { r, s } = a {
                assert!(contains((3 - r) % 3, (4 - s) % 4));
            }
        }
    }
}
