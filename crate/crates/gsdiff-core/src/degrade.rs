//! Machine-oriented codec simulator.
//!
//! Stands in for a learned recognition-oriented codec: structure survives,
//! texture and color fidelity degrade. The pipeline is Gaussian blur,
//! chroma attenuation toward neutral, optional uniform quantization, then a
//! gamut clamp. Blur and chroma attenuation form the linear part that
//! guidance differentiates through; quantization and clamping are excluded
//! from it by contract.

use crate::color::LUMA_WEIGHTS;
use crate::error::{Error, Result};
use crate::image::Image;

/// Parameters of the simulated machine codec.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradationConfig {
    /// Gaussian blur stddev in pixels; the kernel is truncated at radius
    /// `ceil(3 * blur_sigma)`. Zero disables the blur.
    pub blur_sigma: f64,
    /// Scale on Cb/Cr deviations from neutral 0.5, in [0, 1]. Zero yields
    /// grayscale, one leaves chroma untouched.
    pub chroma_gain: f64,
    /// Uniform quantization levels per channel; 0 disables, q >= 2 rounds
    /// to q evenly spaced levels spanning [0, 1], q = 1 collapses to 0.5.
    pub quant_levels: u32,
}

impl Default for DegradationConfig {
    fn default() -> Self {
        DegradationConfig {
            blur_sigma: 1.0,
            chroma_gain: 0.35,
            quant_levels: 32,
        }
    }
}

impl DegradationConfig {
    /// Identity configuration: degrade becomes a no-op (modulo clamp).
    pub fn identity() -> Self {
        DegradationConfig {
            blur_sigma: 0.0,
            chroma_gain: 1.0,
            quant_levels: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.blur_sigma.is_finite() || self.blur_sigma < 0.0 {
            return Err(Error::config("blur_sigma", "must be finite and >= 0"));
        }
        if !self.chroma_gain.is_finite() || !(0.0..=1.0).contains(&self.chroma_gain) {
            return Err(Error::config("chroma_gain", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Normalized 1-D Gaussian taps for the separable blur; `None` when the
/// blur is disabled.
fn blur_kernel(sigma: f64) -> Option<Vec<f64>> {
    if sigma <= 0.0 {
        return None;
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let mut taps = Vec::with_capacity(2 * radius + 1);
    for i in -(radius as isize)..=(radius as isize) {
        let d = i as f64;
        taps.push((-d * d / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    Some(taps)
}

/// Half-sample symmetric fold of an out-of-range index into `[0, len)`.
/// The edge sample repeats: -1 maps to 0, len maps to len - 1.
#[inline]
fn mirror(idx: isize, len: usize) -> usize {
    let period = 2 * len as isize;
    let mut m = idx % period;
    if m < 0 {
        m += period;
    }
    if m < len as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Separable blur of one plane, gathering through the mirrored border.
fn blur_plane(plane: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let radius = (taps.len() / 2) as isize;
    let mut rows = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, tap) in taps.iter().enumerate() {
                let sx = mirror(x as isize + j as isize - radius, w);
                acc += tap * plane[y * w + sx];
            }
            rows[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, tap) in taps.iter().enumerate() {
                let sy = mirror(y as isize + j as isize - radius, h);
                acc += tap * rows[sy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Exact transpose of [`blur_plane`]: scatter each input sample through the
/// same mirrored taps. Bit-for-bit adjoint regardless of border effects.
fn blur_plane_transpose(plane: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let radius = (taps.len() / 2) as isize;
    // Transpose of the column pass.
    let mut cols = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let v = plane[y * w + x];
            for (j, tap) in taps.iter().enumerate() {
                let sy = mirror(y as isize + j as isize - radius, h);
                cols[sy * w + x] += tap * v;
            }
        }
    }
    // Transpose of the row pass.
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let v = cols[y * w + x];
            for (j, tap) in taps.iter().enumerate() {
                let sx = mirror(x as isize + j as isize - radius, w);
                out[y * w + sx] += tap * v;
            }
        }
    }
    out
}

fn blur_image(x: &Image, taps: &[f64], transpose: bool) -> Image {
    let (h, w) = (x.height(), x.width());
    let mut out = Image::zeros(h, w);
    for c in 0..3 {
        let plane = if transpose {
            blur_plane_transpose(x.plane(c), h, w, taps)
        } else {
            blur_plane(x.plane(c), h, w, taps)
        };
        out.plane_mut(c).copy_from_slice(&plane);
    }
    out
}

/// Chroma attenuation as a per-pixel linear map on RGB vectors:
/// `v -> gain*v + (1 - gain) * ones * (luma . v)`. Equivalent to scaling
/// Cb/Cr deviations by `gain` in BT.601 space; the 0.5 offsets cancel.
fn chroma_attenuate(x: &Image, gain: f64) -> Image {
    per_pixel_map(x, |r, g, b| {
        let luma = LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b;
        let keep = 1.0 - gain;
        [
            gain * r + keep * luma,
            gain * g + keep * luma,
            gain * b + keep * luma,
        ]
    })
}

/// Transpose of [`chroma_attenuate`]:
/// `v -> gain*v + (1 - gain) * luma * (ones . v)`.
fn chroma_attenuate_transpose(x: &Image, gain: f64) -> Image {
    per_pixel_map(x, |r, g, b| {
        let channel_sum = r + g + b;
        let keep = 1.0 - gain;
        [
            gain * r + keep * LUMA_WEIGHTS[0] * channel_sum,
            gain * g + keep * LUMA_WEIGHTS[1] * channel_sum,
            gain * b + keep * LUMA_WEIGHTS[2] * channel_sum,
        ]
    })
}

fn per_pixel_map(x: &Image, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Image {
    let n = x.plane_len();
    let (r, g, b) = (x.plane(0), x.plane(1), x.plane(2));
    let mut data = vec![0.0; 3 * n];
    for i in 0..n {
        let [vr, vg, vb] = f(r[i], g[i], b[i]);
        data[i] = vr;
        data[n + i] = vg;
        data[2 * n + i] = vb;
    }
    Image::from_planar(x.height(), x.width(), data).expect("geometry preserved")
}

fn quantize(x: &Image, levels: u32) -> Image {
    match levels {
        0 => x.clone(),
        1 => x.map(|_| 0.5),
        q => {
            let steps = (q - 1) as f64;
            x.map(|v| (v * steps).round() / steps)
        }
    }
}

/// Full degradation: blur, chroma attenuation, optional quantization,
/// clamp to [0, 1]. Deterministic.
pub fn degrade(x: &Image, cfg: &DegradationConfig) -> Image {
    let mut out = degrade_linear(x, cfg);
    if cfg.quant_levels > 0 {
        out = quantize(&out, cfg.quant_levels);
    }
    out.clamp01()
}

/// Linear part of the degradation (blur then chroma attenuation), without
/// quantization or clamping. This is the operator guidance differentiates
/// through.
pub fn degrade_linear(x: &Image, cfg: &DegradationConfig) -> Image {
    let blurred = match blur_kernel(cfg.blur_sigma) {
        Some(taps) => blur_image(x, &taps, false),
        None => x.clone(),
    };
    if cfg.chroma_gain == 1.0 {
        blurred
    } else {
        chroma_attenuate(&blurred, cfg.chroma_gain)
    }
}

/// Exact adjoint of [`degrade_linear`] as a linear map on pixel vectors.
pub fn degrade_adjoint(y: &Image, cfg: &DegradationConfig) -> Image {
    let attenuated = if cfg.chroma_gain == 1.0 {
        y.clone()
    } else {
        chroma_attenuate_transpose(y, cfg.chroma_gain)
    };
    match blur_kernel(cfg.blur_sigma) {
        Some(taps) => blur_image(&attenuated, &taps, true),
        None => attenuated,
    }
}
