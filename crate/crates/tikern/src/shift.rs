//! All-shifts dot products via circular cross-correlation.
//!
//! For a pair of images the vector of dot products `<T_rs x, y>` over
//! every cyclic shift (r,s) is the circular cross-correlation of x and y,
//! computed here in the frequency domain in O(m log m) instead of the
//! O(m^2) exhaustive enumeration. The exhaustive path is kept as an
//! independent oracle.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::Result;
use crate::image::Image;
use crate::transforms::translate;

/// Reusable 2-D FFT plans for a fixed image size.
pub struct ShiftCorrelator {
    rows: usize,
    cols: usize,
    fwd_rows: Arc<dyn Fft<f64>>,
    fwd_cols: Arc<dyn Fft<f64>>,
    inv_rows: Arc<dyn Fft<f64>>,
    inv_cols: Arc<dyn Fft<f64>>,
}

impl ShiftCorrelator {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            fwd_rows: planner.plan_fft_forward(cols),
            fwd_cols: planner.plan_fft_forward(rows),
            inv_rows: planner.plan_fft_inverse(cols),
            inv_cols: planner.plan_fft_inverse(rows),
        }
    }

    /// Forward 2-D FFT of an image's pixels.
    pub fn forward(&self, img: &Image) -> Vec<Complex<f64>> {
        assert_eq!(img.rows(), self.rows);
        assert_eq!(img.cols(), self.cols);
        let mut buf: Vec<Complex<f64>> = img
            .pixels()
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .collect();
        self.fft2_in_place(&mut buf, false);
        buf
    }

    /// Correlations c[r*cols+s] = <T_rs x, y> for all cyclic shifts,
    /// given precomputed spectra of x and y.
    pub fn correlations_from_spectra(
        &self,
        fx: &[Complex<f64>],
        fy: &[Complex<f64>],
    ) -> Vec<f64> {
        let m = self.rows * self.cols;
        let mut buf: Vec<Complex<f64>> = fx
            .iter()
            .zip(fy)
            .map(|(a, b)| a * b.conj())
            .collect();
        self.fft2_in_place(&mut buf, true);
        let scale = 1.0 / m as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Correlations for a pair of images (plans reused, spectra not).
    pub fn correlations(&self, x: &Image, y: &Image) -> Result<Vec<f64>> {
        x.same_dims(y)?;
        let fx = self.forward(x);
        let fy = self.forward(y);
        Ok(self.correlations_from_spectra(&fx, &fy))
    }

    /// Row-column 2-D FFT over a row-major buffer.
    fn fft2_in_place(&self, buf: &mut [Complex<f64>], inverse: bool) {
        let (row_fft, col_fft) = if inverse {
            (&self.inv_rows, &self.inv_cols)
        } else {
            (&self.fwd_rows, &self.fwd_cols)
        };
        for r in 0..self.rows {
            row_fft.process(&mut buf[r * self.cols..(r + 1) * self.cols]);
        }
        let mut col = vec![Complex::new(0.0, 0.0); self.rows];
        for q in 0..self.cols {
            for p in 0..self.rows {
                col[p] = buf[p * self.cols + q];
            }
            col_fft.process(&mut col);
            for p in 0..self.rows {
                buf[p * self.cols + q] = col[p];
            }
        }
    }
}

/// Exhaustive-enumeration oracle for the all-shifts dot products.
pub fn correlations_naive(x: &Image, y: &Image) -> Result<Vec<f64>> {
    x.same_dims(y)?;
    let mut out = Vec::with_capacity(x.len());
    for r in 0..x.rows() {
        for s in 0..x.cols() {
            out.push(translate(x, r as i64, s as i64).dot(y)?);
        }
    }
    Ok(out)
}

/// Maximum dot product over all cyclic shifts of x against y.
pub fn max_shift_dot(corr: &ShiftCorrelator, x: &Image, y: &Image) -> Result<f64> {
    Ok(corr
        .correlations(x, y)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    fn random_image(rows: usize, cols: usize, rng: &mut impl Rng) -> Image {
        let px: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        Image::new(rows, cols, px).unwrap()
    }

    #[test]
    fn fft_matches_naive_small() {
        let x = Image::new(2, 3, vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0]).unwrap();
        let y = Image::new(2, 3, vec![0.25, 1.0, -0.5, 2.0, -3.0, 1.5]).unwrap();
        let corr = ShiftCorrelator::new(2, 3);
        let fft = corr.correlations(&x, &y).unwrap();
        let naive = correlations_naive(&x, &y).unwrap();
        for (a, b) in fft.iter().zip(&naive) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn fft_matches_naive_random() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..10 {
            let x = random_image(9, 11, &mut rng);
            let y = random_image(9, 11, &mut rng);
            let corr = ShiftCorrelator::new(9, 11);
            let fft = corr.correlations(&x, &y).unwrap();
            let naive = correlations_naive(&x, &y).unwrap();
            for (a, b) in fft.iter().zip(&naive) {
                let scale = b.abs().max(1.0);
                assert!((a - b).abs() / scale < 1e-10);
            }
        }
    }

    #[test]
    fn max_matches_enumeration() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let x = random_image(8, 8, &mut rng);
        let y = random_image(8, 8, &mut rng);
        let corr = ShiftCorrelator::new(8, 8);
        let via_fft = max_shift_dot(&corr, &x, &y).unwrap();
        let via_naive = correlations_naive(&x, &y)
            .unwrap()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((via_fft - via_naive).abs() / via_naive.abs().max(1.0) < 1e-10);
    }
}
