//! BT.601 full-range color transforms and the luminance-preserving
//! color-controller merge.
//!
//! The merge takes luminance from a generated image and chroma from the
//! machine-oriented image, which restores color fidelity without touching
//! the structure the sampler produced.

use crate::error::Result;
use crate::image::{ensure_same_geometry, Image};

/// BT.601 luma weights. Normative for every metric in this crate.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];
const CB_SCALE: f64 = 0.564;
const CR_SCALE: f64 = 0.713;

/// Planar luma/chroma raster. Chroma planes are neutral at 0.5.
#[derive(Clone, Debug, PartialEq)]
pub struct YCbCrImage {
    pub height: usize,
    pub width: usize,
    pub y: Vec<f64>,
    pub cb: Vec<f64>,
    pub cr: Vec<f64>,
}

/// Exact linear transform; in-range RGB keeps chroma inside [0, 1].
pub fn rgb_to_ycbcr(x: &Image) -> YCbCrImage {
    let n = x.plane_len();
    let (r, g, b) = (x.plane(0), x.plane(1), x.plane(2));
    let mut y = vec![0.0; n];
    let mut cb = vec![0.0; n];
    let mut cr = vec![0.0; n];
    for i in 0..n {
        let luma = LUMA_WEIGHTS[0] * r[i] + LUMA_WEIGHTS[1] * g[i] + LUMA_WEIGHTS[2] * b[i];
        y[i] = luma;
        cb[i] = CB_SCALE * (b[i] - luma) + 0.5;
        cr[i] = CR_SCALE * (r[i] - luma) + 0.5;
    }
    YCbCrImage {
        height: x.height(),
        width: x.width(),
        y,
        cb,
        cr,
    }
}

/// Algebraic inverse of [`rgb_to_ycbcr`] without gamut clamping. Used where
/// plane-exact pre-clamp behavior matters (merge verification, adjoints).
pub fn ycbcr_to_rgb_unclamped(x: &YCbCrImage) -> Image {
    let n = x.y.len();
    let mut data = vec![0.0; n * 3];
    {
        let (rp, rest) = data.split_at_mut(n);
        let (gp, bp) = rest.split_at_mut(n);
        for i in 0..n {
            let y = x.y[i];
            let r = y + (x.cr[i] - 0.5) / CR_SCALE;
            let b = y + (x.cb[i] - 0.5) / CB_SCALE;
            let g = (y - LUMA_WEIGHTS[0] * r - LUMA_WEIGHTS[2] * b) / LUMA_WEIGHTS[1];
            rp[i] = r;
            gp[i] = g;
            bp[i] = b;
        }
    }
    Image::from_planar(x.height, x.width, data).expect("planes share geometry")
}

/// Inverse transform with the out-of-gamut result clamped to [0, 1].
pub fn ycbcr_to_rgb(x: &YCbCrImage) -> Image {
    ycbcr_to_rgb_unclamped(x).clamp01()
}

/// Color-controller merge: luminance from `generated`, chroma from
/// `machine`, result clamped to [0, 1].
pub fn cc_merge(generated: &Image, machine: &Image) -> Result<Image> {
    Ok(cc_merge_unclamped(generated, machine)?.clamp01())
}

/// Merge without the final gamut clamp, exposing the plane-exact result.
pub fn cc_merge_unclamped(generated: &Image, machine: &Image) -> Result<Image> {
    ensure_same_geometry(generated, machine, "cc_merge")?;
    let gen_planes = rgb_to_ycbcr(generated);
    let mach_planes = rgb_to_ycbcr(machine);
    let merged = YCbCrImage {
        height: gen_planes.height,
        width: gen_planes.width,
        y: gen_planes.y,
        cb: mach_planes.cb,
        cr: mach_planes.cr,
    };
    Ok(ycbcr_to_rgb_unclamped(&merged))
}
