//! Full-reference quality metrics: PSNR (RGB and luma-only) and
//! single-scale SSIM on the luma plane.

use crate::color::rgb_to_ycbcr;
use crate::error::{Error, Result};
use crate::image::{ensure_same_geometry, Image};

/// Cap applied to PSNR values so identical images serialize as a finite
/// number instead of infinity.
pub const PSNR_CAP_DB: f64 = 100.0;

/// SSIM window: 11x11 Gaussian, sigma 1.5.
const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Metric bundle attached to reports. `lpips` stays `None`: this crate
/// never computes it, and reports carry the explicit not-computed marker
/// rather than a stand-in number.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub y_psnr_db: f64,
    pub ssim: f64,
    pub lpips: Option<f64>,
}

impl MetricReport {
    /// Compute all metrics for a pair of same-geometry images.
    pub fn between(a: &Image, b: &Image) -> Result<MetricReport> {
        Ok(MetricReport {
            psnr_db: psnr(a, b, false)?,
            y_psnr_db: psnr(a, b, true)?,
            ssim: ssim(a, b)?,
            lpips: None,
        })
    }
}

/// Peak signal-to-noise ratio with peak 1.0, capped at [`PSNR_CAP_DB`].
/// Inputs are clamped to [0, 1] before scoring. With `on_y_channel` the
/// MSE runs over the luma plane only, otherwise over all RGB samples.
pub fn psnr(a: &Image, b: &Image, on_y_channel: bool) -> Result<f64> {
    ensure_same_geometry(a, b, "psnr")?;
    let a = a.clamp01();
    let b = b.clamp01();
    let mse = if on_y_channel {
        let ya = rgb_to_ycbcr(&a).y;
        let yb = rgb_to_ycbcr(&b).y;
        mean_squared_error(&ya, &yb)
    } else {
        mean_squared_error(a.data(), b.data())
    };
    Ok(mse_to_psnr(mse))
}

/// Luma-only PSNR, the selection metric.
pub fn y_psnr(a: &Image, b: &Image) -> Result<f64> {
    psnr(a, b, true)
}

fn mean_squared_error(a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum();
    sum / a.len() as f64
}

fn mse_to_psnr(mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (-10.0 * mse.log10()).min(PSNR_CAP_DB)
}

/// Single-scale SSIM on the luma plane: 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 1.0, averaged over valid window
/// positions only.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    ensure_same_geometry(a, b, "ssim")?;
    let (h, w) = (a.height(), a.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::config(
            "image",
            format!("ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"),
        ));
    }
    let ya = rgb_to_ycbcr(&a.clamp01()).y;
    let yb = rgb_to_ycbcr(&b.clamp01()).y;

    let window = gaussian_window();
    let c1 = (SSIM_K1 * 1.0f64).powi(2);
    let c2 = (SSIM_K2 * 1.0f64).powi(2);

    let mut total = 0.0;
    let mut count = 0usize;
    for wy in 0..=(h - SSIM_WINDOW) {
        for wx in 0..=(w - SSIM_WINDOW) {
            let (mut mu_a, mut mu_b) = (0.0, 0.0);
            for dy in 0..SSIM_WINDOW {
                for dx in 0..SSIM_WINDOW {
                    let weight = window[dy * SSIM_WINDOW + dx];
                    let idx = (wy + dy) * w + wx + dx;
                    mu_a += weight * ya[idx];
                    mu_b += weight * yb[idx];
                }
            }
            let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
            for dy in 0..SSIM_WINDOW {
                for dx in 0..SSIM_WINDOW {
                    let weight = window[dy * SSIM_WINDOW + dx];
                    let idx = (wy + dy) * w + wx + dx;
                    let da = ya[idx] - mu_a;
                    let db = yb[idx] - mu_b;
                    var_a += weight * da * da;
                    var_b += weight * db * db;
                    cov += weight * da * db;
                }
            }
            total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as isize;
    let mut window = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    for y in -half..=half {
        for x in -half..=half {
            let d2 = (y * y + x * x) as f64;
            window.push((-d2 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp());
        }
    }
    let sum: f64 = window.iter().sum();
    for v in &mut window {
        *v /= sum;
    }
    window
}
