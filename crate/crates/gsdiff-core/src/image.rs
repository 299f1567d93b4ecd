//! Planar RGB raster container.
//!
//! One `Image` holds three `f64` planes (R, G, B) in row-major order. The
//! same container carries pixel data in `[0, 1]`, diffusion latents, and
//! noise tensors; range constraints are enforced at the operation
//! boundaries that need them, not here.

use crate::error::{Error, Result};

/// H×W×3 planar real-valued raster. Plane order is R, G, B.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    /// All-zero image of the given geometry.
    pub fn zeros(height: usize, width: usize) -> Self {
        Image {
            height,
            width,
            data: vec![0.0; height * width * 3],
        }
    }

    /// Constant-valued image (same value in every channel).
    pub fn splat(height: usize, width: usize, value: f64) -> Self {
        Image {
            height,
            width,
            data: vec![value; height * width * 3],
        }
    }

    /// Wrap an existing planar buffer. `data.len()` must be `3·height·width`.
    pub fn from_planar(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * 3 {
            return Err(Error::Dimension(format!(
                "planar buffer has {} samples, geometry {}x{}x3 needs {}",
                data.len(),
                height,
                width,
                height * width * 3
            )));
        }
        Ok(Image {
            height,
            width,
            data,
        })
    }

    /// Build per-sample from `f(channel, row, col)`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut img = Image::zeros(height, width);
        for c in 0..3 {
            for y in 0..height {
                for x in 0..width {
                    let v = f(c, y, x);
                    img.data[c * height * width + y * width + x] = v;
                }
            }
        }
        img
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Samples per plane.
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    /// Total sample count across all three planes.
    pub fn sample_count(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// One color plane (0 = R, 1 = G, 2 = B).
    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn plane_mut(&mut self, channel: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[channel * n..(channel + 1) * n]
    }

    pub fn get(&self, channel: usize, y: usize, x: usize) -> f64 {
        self.data[channel * self.plane_len() + y * self.width + x]
    }

    pub fn set(&mut self, channel: usize, y: usize, x: usize, v: f64) {
        let n = self.plane_len();
        self.data[channel * n + y * self.width + x] = v;
    }

    pub fn same_geometry(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Elementwise map into a new image.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combine with another image of the same geometry.
    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Image {
        debug_assert!(self.same_geometry(other));
        Image {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Clamp every sample to `[0, 1]`.
    pub fn clamp01(&self) -> Image {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    /// Largest absolute difference to `other`.
    pub fn linf_distance(&self, other: &Image) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// True when every sample compares bit-identical to `other`.
    pub fn bit_identical(&self, other: &Image) -> bool {
        self.same_geometry(other)
            && self
                .data
                .iter()
                .zip(other.data.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Geometry guard used by operations that combine two rasters.
pub fn ensure_same_geometry(a: &Image, b: &Image, context: &str) -> Result<()> {
    if a.same_geometry(b) {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{context}: {}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )))
    }
}
