//! Real-valued image grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2-D grid of real pixel intensities, stored row-major.
///
/// Row index `p` runs over `0..rows`, column index `q` over `0..cols`.
/// A 1-D pixel sequence is just an image with a single row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(
                format!("{rows}x{cols}"),
                "nonzero dimensions".into(),
            ));
        }
        if pixels.len() != rows * cols {
            return Err(Error::DimensionMismatch(
                format!("{} pixels", pixels.len()),
                format!("{rows}x{cols}"),
            ));
        }
        if !pixels.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("image pixel".into()));
        }
        Ok(Self { rows, cols, pixels })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols]).expect("nonzero dims")
    }

    /// 1-D convenience constructor (a single-row image).
    pub fn from_vec(pixels: Vec<f64>) -> Result<Self> {
        let len = pixels.len();
        Self::new(1, len, pixels)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Total pixel count m = m1 * m2.
    #[inline]
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // rows, cols >= 1 by construction
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.pixels[p * self.cols + q]
    }

    #[inline]
    pub fn set(&mut self, p: usize, q: usize, v: f64) {
        self.pixels[p * self.cols + q] = v;
    }

    #[inline]
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn same_dims(&self, other: &Image) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(())
    }

    pub fn dot(&self, other: &Image) -> Result<f64> {
        self.same_dims(other)?;
        Ok(self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }
}
