//! Reconstruction guidance toward the machine-oriented condition image.
//!
//! The sampler's noise prediction is nudged by the gradient of the data
//! fidelity term ½‖A·x0_hat − c‖², where A is the linear part of the
//! degradation operator and c the condition image. This replaces a learned
//! conditioning network with an exact, differentiable surrogate.

use crate::degrade::{degrade_adjoint, degrade_linear, DegradationConfig};
use crate::error::{Error, Result};
use crate::image::{ensure_same_geometry, Image};
use crate::sampler::predict_x0;
use crate::schedule::NoiseSchedule;

/// Guidance strength and target.
#[derive(Clone, Debug)]
pub struct GuidanceConfig {
    /// Nonnegative guidance weight; 0 disables guidance entirely.
    pub weight: f64,
    /// The machine-oriented condition image c.
    pub condition: Image,
    /// Degradation operator whose linear part defines A.
    pub operator: DegradationConfig,
}

impl GuidanceConfig {
    pub fn new(weight: f64, condition: Image, operator: DegradationConfig) -> Result<Self> {
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::config("weight", "must be finite and >= 0"));
        }
        operator.validate()?;
        Ok(GuidanceConfig {
            weight,
            condition,
            operator,
        })
    }
}

/// Gradient of ½‖A·x0_hat(x_k) − c‖² with respect to x_k, with `eps_hat`
/// held fixed: `(1/sqrt(ab_k)) * A^T (A x0_hat - c)`.
pub fn guidance_gradient(
    x_k: &Image,
    eps_hat: &Image,
    level: usize,
    g: &GuidanceConfig,
    sched: &NoiseSchedule,
) -> Result<Image> {
    ensure_same_geometry(x_k, &g.condition, "guidance condition")?;
    let x0_hat = predict_x0(x_k, eps_hat, level, sched)?;
    let residual = degrade_linear(&x0_hat, &g.operator).zip_map(&g.condition, |a, c| a - c);
    let backprojected = degrade_adjoint(&residual, &g.operator);
    let scale = 1.0 / sched.alpha_bar(level).sqrt();
    Ok(backprojected.map(|v| v * scale))
}

/// Apply reconstruction guidance to a noise prediction:
/// `eps' = eps_hat + w * sqrt(1 - ab_k) * grad`. A zero weight returns the
/// prediction unchanged.
pub fn apply_guidance(
    eps_hat: &Image,
    x_k: &Image,
    level: usize,
    g: &GuidanceConfig,
    sched: &NoiseSchedule,
) -> Result<Image> {
    if g.weight == 0.0 {
        return Ok(eps_hat.clone());
    }
    let grad = guidance_gradient(x_k, eps_hat, level, g, sched)?;
    let scale = g.weight * (1.0 - sched.alpha_bar(level)).sqrt();
    Ok(eps_hat.zip_map(&grad, |e, d| e + scale * d))
}
