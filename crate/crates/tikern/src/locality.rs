//! Multi-layer locality kernels.
//!
//! Layer 0 is the elementwise product grid z[p,q] = x[p,q] * y[p,q].
//! An inner layer with locality parameter k sums windows spanning k+1
//! contiguous entries along each sliding axis, adds 1, and raises to its
//! degree. The top layer sums everything that remains, adds 1, and
//! raises to the top degree, producing the scalar kernel value.
//! Windows are square for 2-D inputs; a single-row input slides along
//! its columns only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityLayer {
    /// Locality parameter k; the window spans k+1 contiguous entries.
    pub k: usize,
    pub degree: u32,
    /// Zero padding added on each side of every sliding axis.
    pub padding: usize,
    pub stride: usize,
    /// Scale applied to the window sum before the +1, i.e.
    /// (gamma * sum + 1)^degree. 1/window-area keeps values tame on
    /// real-valued inputs; 1 recovers the unscaled layer.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

impl LocalityLayer {
    pub fn new(k: usize, degree: u32) -> Self {
        Self {
            k,
            degree,
            padding: 0,
            stride: 1,
            gamma: 1.0,
        }
    }

    pub fn with_padding(mut self, padding: usize) -> Self {
        self.padding = padding;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityStack {
    pub layers: Vec<LocalityLayer>,
    /// Degree of the final all-summing layer.
    pub top_degree: u32,
    /// When true, intermediate layer maps are not materialized and lower
    /// layers are recomputed per window. Slower for deep stacks; bounded
    /// memory.
    #[serde(default)]
    pub low_memory: bool,
    /// Scale applied to the top layer's total before the +1, i.e.
    /// (gamma * total + 1)^top_degree; 1 recovers the unscaled kernel.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

fn default_gamma() -> f64 {
    1.0
}

impl LocalityStack {
    /// The two-layer structure used in the experiments: one windowed
    /// layer (k1, d1) with (k1-1)/2 zero padding and stride 1, then the
    /// summing top layer of degree d2.
    pub fn two_layer(k1: usize, d1: u32, d2: u32) -> Self {
        Self {
            layers: vec![LocalityLayer::new(k1, d1).with_padding(k1.saturating_sub(1) / 2)],
            top_degree: d2,
            low_memory: false,
            gamma: 1.0,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if self.top_degree < 1 {
            return Err(Error::InvalidSpec("top degree must be >= 1".into()));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "locality gamma must be finite and > 0, got {}",
                self.gamma
            )));
        }
        if self.layers.iter().any(|l| !(l.gamma > 0.0) || !l.gamma.is_finite()) {
            return Err(Error::InvalidSpec("layer gamma must be finite and > 0".into()));
        }
        let mut dims = (rows, cols);
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.degree < 1 {
                return Err(Error::InvalidSpec(format!("layer {i}: degree must be >= 1")));
            }
            if layer.stride < 1 {
                return Err(Error::InvalidSpec(format!("layer {i}: stride must be >= 1")));
            }
            dims = layer_output_dims(dims, layer)?;
        }
        Ok(())
    }

    /// Total polynomial degree of the kernel (product over layers).
    pub fn total_degree(&self) -> u32 {
        self.layers
            .iter()
            .map(|l| l.degree)
            .product::<u32>()
            .saturating_mul(self.top_degree)
    }
}

fn axis_extent(k: usize, len: usize) -> usize {
    if len == 1 {
        1
    } else {
        k + 1
    }
}

fn axis_output(len: usize, extent: usize, padding: usize, stride: usize) -> Result<usize> {
    // singleton axes do not slide and are not padded
    if len == 1 {
        return Ok(1);
    }
    let padded = len + 2 * padding;
    if extent > padded {
        return Err(Error::ReceptiveFieldOverflow(format!(
            "window {extent} > padded axis {padded}"
        )));
    }
    Ok((padded - extent) / stride + 1)
}

fn layer_output_dims(dims: (usize, usize), layer: &LocalityLayer) -> Result<(usize, usize)> {
    let (rows, cols) = dims;
    let er = axis_extent(layer.k, rows);
    let ec = axis_extent(layer.k, cols);
    Ok((
        axis_output(rows, er, layer.padding, layer.stride)?,
        axis_output(cols, ec, layer.padding, layer.stride)?,
    ))
}

/// One layer applied to a grid of accumulated values.
fn apply_layer(
    grid: &[f64],
    dims: (usize, usize),
    layer: &LocalityLayer,
) -> Result<(Vec<f64>, (usize, usize))> {
    let (rows, cols) = dims;
    let er = axis_extent(layer.k, rows);
    let ec = axis_extent(layer.k, cols);
    let out_dims = layer_output_dims(dims, layer)?;
    let (orows, ocols) = out_dims;
    let pad_r = if rows == 1 { 0 } else { layer.padding };
    let pad_c = if cols == 1 { 0 } else { layer.padding };
    let mut out = vec![0.0; orows * ocols];
    for op in 0..orows {
        for oq in 0..ocols {
            let base_p = (op * layer.stride) as i64 - pad_r as i64;
            let base_q = (oq * layer.stride) as i64 - pad_c as i64;
            let mut sum = 0.0;
            for dp in 0..er {
                let p = base_p + dp as i64;
                if p < 0 || p >= rows as i64 {
                    continue;
                }
                for dq in 0..ec {
                    let q = base_q + dq as i64;
                    if q < 0 || q >= cols as i64 {
                        continue;
                    }
                    sum += grid[p as usize * cols + q as usize];
                }
            }
            out[op * ocols + oq] = (layer.gamma * sum + 1.0).powi(layer.degree as i32);
        }
    }
    Ok((out, out_dims))
}

/// Evaluates the locality kernel for an image pair.
pub fn locality_kernel(x: &Image, y: &Image, stack: &LocalityStack) -> Result<f64> {
    x.same_dims(y)?;
    stack.validate(x.rows(), y.cols())?;
    let mut grid: Vec<f64> = x
        .pixels()
        .iter()
        .zip(y.pixels())
        .map(|(a, b)| a * b)
        .collect();
    let mut dims = (x.rows(), x.cols());
    if stack.low_memory {
        return eval_recursive(&grid, dims, stack);
    }
    for layer in &stack.layers {
        let (next, next_dims) = apply_layer(&grid, dims, layer)?;
        grid = next;
        dims = next_dims;
    }
    let total: f64 = grid.iter().sum();
    Ok((stack.gamma * total + 1.0).powi(stack.top_degree as i32))
}

/// Low-memory path: recomputes lower-layer values per window instead of
/// storing per-layer maps. Exponential in depth, constant extra memory.
fn eval_recursive(grid0: &[f64], dims0: (usize, usize), stack: &LocalityStack) -> Result<f64> {
    // value of layer `li` (1-based over stack.layers) at output position (p,q)
    fn layer_value(
        grid0: &[f64],
        dims0: (usize, usize),
        layers: &[LocalityLayer],
        li: usize,
        p: usize,
        q: usize,
    ) -> Result<f64> {
        let layer = &layers[li];
        let in_dims = if li == 0 {
            dims0
        } else {
            let mut d = dims0;
            for l in &layers[..li] {
                d = layer_output_dims(d, l)?;
            }
            d
        };
        let (rows, cols) = in_dims;
        let er = axis_extent(layer.k, rows);
        let ec = axis_extent(layer.k, cols);
        let pad_r = if rows == 1 { 0 } else { layer.padding };
        let pad_c = if cols == 1 { 0 } else { layer.padding };
        let base_p = (p * layer.stride) as i64 - pad_r as i64;
        let base_q = (q * layer.stride) as i64 - pad_c as i64;
        let mut sum = 0.0;
        for dp in 0..er {
            let ip = base_p + dp as i64;
            if ip < 0 || ip >= rows as i64 {
                continue;
            }
            for dq in 0..ec {
                let iq = base_q + dq as i64;
                if iq < 0 || iq >= cols as i64 {
                    continue;
                }
                sum += if li == 0 {
                    grid0[ip as usize * cols + iq as usize]
                } else {
                    layer_value(grid0, dims0, layers, li - 1, ip as usize, iq as usize)?
                };
            }
        }
        Ok((layer.gamma * sum + 1.0).powi(layer.degree as i32))
    }

    let mut dims = dims0;
    for l in &stack.layers {
        dims = layer_output_dims(dims, l)?;
    }
    let mut total = 0.0;
    if stack.layers.is_empty() {
        total = grid0.iter().sum();
    } else {
        let last = stack.layers.len() - 1;
        for p in 0..dims.0 {
            for q in 0..dims.1 {
                total += layer_value(grid0, dims0, &stack.layers, last, p, q)?;
            }
        }
    }
    Ok((stack.gamma * total + 1.0).powi(stack.top_degree as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_img(px: &[f64]) -> Image {
        Image::from_vec(px.to_vec()).unwrap()
    }

    fn stack(layers: Vec<LocalityLayer>, top: u32) -> LocalityStack {
        LocalityStack {
            layers,
            top_degree: top,
            low_memory: false,
            gamma: 1.0,
        }
    }

    #[test]
    fn one_dim_hand_example() {
        // x = y = (1,0,1), one layer (k=1, d=1), no padding, top d=1:
        // windows (1,0) and (0,1) each give sum 1 -> 2; top: 2+2+1 = 5
        let x = vec_img(&[1.0, 0.0, 1.0]);
        let v = locality_kernel(&x, &x, &stack(vec![LocalityLayer::new(1, 1)], 1)).unwrap();
        assert_eq!(v, 5.0);
    }

    #[test]
    fn degenerate_top_layer_is_dot_plus_one() {
        let x = vec_img(&[1.0, 2.0, -1.0, 0.5]);
        let y = vec_img(&[0.0, 1.0, 3.0, 2.0]);
        let v = locality_kernel(&x, &y, &stack(vec![], 1)).unwrap();
        assert_eq!(v, x.dot(&y).unwrap() + 1.0);
    }

    #[test]
    fn zero_input_example() {
        // all-zero length-3, layers [(k=1,d=2),(top,d=2)]:
        // inner windows evaluate to 1, two of them: (2*1+1)^2 = 9
        let x = vec_img(&[0.0, 0.0, 0.0]);
        let v = locality_kernel(&x, &x, &stack(vec![LocalityLayer::new(1, 2)], 2)).unwrap();
        assert_eq!(v, 9.0);
    }

    #[test]
    fn low_memory_matches_cached() {
        let x = Image::new(1, 8, vec![0.3, -0.1, 0.7, 0.2, -0.5, 0.9, 0.0, 0.4]).unwrap();
        let y = Image::new(1, 8, vec![0.1, 0.8, -0.2, 0.6, 0.3, -0.7, 0.5, 0.2]).unwrap();
        let mut s = LocalityStack {
            layers: vec![
                LocalityLayer::new(2, 2).with_gamma(0.25),
                LocalityLayer::new(1, 2),
            ],
            top_degree: 2,
            low_memory: false,
            gamma: 0.5,
        };
        let cached = locality_kernel(&x, &y, &s).unwrap();
        s.low_memory = true;
        let low = locality_kernel(&x, &y, &s).unwrap();
        assert!((cached - low).abs() <= 1e-9 * cached.abs());
    }

    #[test]
    fn two_dim_windows_are_square() {
        // 2x2 input, k=1 -> single 2x2 window covering everything
        let x = Image::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let v = locality_kernel(&x, &x, &stack(vec![LocalityLayer::new(1, 1)], 1)).unwrap();
        // inner: 1+4+9+16 + 1 = 31; top: 31 + 1 = 32
        assert_eq!(v, 32.0);
    }

    #[test]
    fn receptive_field_overflow_rejected() {
        let x = vec_img(&[1.0, 2.0]);
        let s = stack(vec![LocalityLayer::new(5, 1)], 1);
        assert!(matches!(
            locality_kernel(&x, &x, &s),
            Err(Error::ReceptiveFieldOverflow(_))
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let x = vec_img(&[1.0, 2.0]);
        let y = vec_img(&[1.0, 2.0, 3.0]);
        assert!(locality_kernel(&x, &y, &stack(vec![], 1)).is_err());
    }

    #[test]
    fn padding_preserves_window_count() {
        // length 4, k=1 (window 2), padding 0 -> 3 windows; padding 1 -> 5
        let x = vec_img(&[1.0; 4]);
        let no_pad = locality_kernel(&x, &x, &stack(vec![LocalityLayer::new(1, 1)], 1)).unwrap();
        let padded = locality_kernel(
            &x,
            &x,
            &stack(vec![LocalityLayer::new(1, 1).with_padding(1)], 1),
        )
        .unwrap();
        // no pad: windows sums (2,2,2)+1 -> 3,3,3; total 9+1 = 10
        assert_eq!(no_pad, 10.0);
        // pad 1: windows (1,2,2,2,1)+1 -> 2,3,3,3,2; total 13+1 = 14
        assert_eq!(padded, 14.0);
    }
}
