//! Training-free denoisers with exact scores.
//!
//! Instead of a learned noise predictor, the sampler runs against priors
//! whose diffused marginals have closed-form scores: an isotropic Gaussian
//! mixture, or an empirical dataset (the delta-mixture limit). Both yield
//! the exact `eps_hat` for the current noise level.

use crate::error::{Error, Result};
use crate::image::{ensure_same_geometry, Image};
use crate::schedule::NoiseSchedule;

/// One isotropic mixture component.
#[derive(Clone, Debug)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Image,
    pub stddev: f64,
}

/// Prior the sampler denoises against.
#[derive(Clone, Debug)]
pub enum DenoiserSpec {
    /// Weighted isotropic Gaussians; weights must sum to 1.
    GaussianMixture { components: Vec<MixtureComponent> },
    /// Clean reference images; the sigma = 0 mixture case.
    Empirical { dataset: Vec<Image> },
}

impl DenoiserSpec {
    pub fn gaussian_mixture(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::config("components", "mixture must be non-empty"));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "components",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        for (i, c) in components.iter().enumerate() {
            if c.weight < 0.0 {
                return Err(Error::config(
                    "components",
                    format!("component {i} has negative weight"),
                ));
            }
            if c.stddev < 0.0 || !c.stddev.is_finite() {
                return Err(Error::config(
                    "components",
                    format!("component {i} has invalid stddev"),
                ));
            }
            if !c.mean.same_geometry(&components[0].mean) {
                return Err(Error::config(
                    "components",
                    format!("component {i} mean geometry differs"),
                ));
            }
        }
        Ok(DenoiserSpec::GaussianMixture { components })
    }

    pub fn empirical(dataset: Vec<Image>) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::config("dataset", "empirical dataset must be non-empty"));
        }
        for (i, img) in dataset.iter().enumerate() {
            if !img.same_geometry(&dataset[0]) {
                return Err(Error::config(
                    "dataset",
                    format!("image {i} geometry differs"),
                ));
            }
        }
        Ok(DenoiserSpec::Empirical { dataset })
    }

    fn reference_geometry(&self) -> &Image {
        match self {
            DenoiserSpec::GaussianMixture { components } => &components[0].mean,
            DenoiserSpec::Empirical { dataset } => &dataset[0],
        }
    }
}

/// Exact noise prediction at level `k` for the diffused prior.
///
/// For the mixture, the level-`k` marginal of component `i` is a Gaussian
/// with mean `sqrt(ab_k) * mu_i` and variance `ab_k * sigma_i^2 + 1 - ab_k`;
/// the score is the responsibility-weighted Gaussian score and
/// `eps_hat = -sqrt(1 - ab_k) * score`. For the empirical prior the exact
/// posterior mean over references is blended with softmax responsibilities
/// and `eps_hat` recovered from the clean-image prediction identity.
/// Responsibilities use a log-sum-exp stabilized softmax throughout.
pub fn denoiser_eps(
    x_k: &Image,
    level: usize,
    spec: &DenoiserSpec,
    sched: &NoiseSchedule,
) -> Result<Image> {
    check_level(level, sched)?;
    ensure_same_geometry(x_k, spec.reference_geometry(), "denoiser_eps")?;
    let ab = sched.alpha_bar(level);
    match spec {
        DenoiserSpec::GaussianMixture { components } => {
            Ok(mixture_eps(x_k, ab, components))
        }
        DenoiserSpec::Empirical { dataset } => {
            let x0_hat = empirical_posterior_mean(x_k, ab, dataset);
            // eps_hat = (x_k - sqrt(ab) * x0_hat) / sqrt(1 - ab)
            let signal = ab.sqrt();
            let noise = (1.0 - ab).sqrt();
            Ok(x_k.zip_map(&x0_hat, |x, m| (x - signal * m) / noise))
        }
    }
}

/// Exact posterior mean of the clean image under the empirical prior.
pub fn empirical_posterior_mean(x_k: &Image, alpha_bar: f64, dataset: &[Image]) -> Image {
    let signal = alpha_bar.sqrt();
    let denom = 2.0 * (1.0 - alpha_bar);
    let logits: Vec<f64> = dataset
        .iter()
        .map(|reference| {
            let mut dist2 = 0.0;
            for (x, r) in x_k.data().iter().zip(reference.data()) {
                let d = x - signal * r;
                dist2 += d * d;
            }
            -dist2 / denom
        })
        .collect();
    let weights = log_softmax_weights(&logits);

    let mut out = Image::zeros(x_k.height(), x_k.width());
    for (reference, &w) in dataset.iter().zip(weights.iter()) {
        if w == 0.0 {
            continue;
        }
        for (o, r) in out.data_mut().iter_mut().zip(reference.data()) {
            *o += w * r;
        }
    }
    out
}

fn mixture_eps(x_k: &Image, alpha_bar: f64, components: &[MixtureComponent]) -> Image {
    let signal = alpha_bar.sqrt();
    let dims = x_k.sample_count() as f64;
    // Per-component marginal variance and log-density (up to the shared
    // (2*pi)^{-d/2} constant, which cancels in the softmax).
    let mut logits = Vec::with_capacity(components.len());
    let mut variances = Vec::with_capacity(components.len());
    for c in components {
        let var = alpha_bar * c.stddev * c.stddev + (1.0 - alpha_bar);
        let mut dist2 = 0.0;
        for (x, m) in x_k.data().iter().zip(c.mean.data()) {
            let d = x - signal * m;
            dist2 += d * d;
        }
        let log_density = -0.5 * dims * var.ln() - dist2 / (2.0 * var);
        logits.push(if c.weight > 0.0 {
            c.weight.ln() + log_density
        } else {
            f64::NEG_INFINITY
        });
        variances.push(var);
    }
    let resp = log_softmax_weights(&logits);

    // score(x) = sum_i r_i * (sqrt(ab) * mu_i - x) / v_i
    // eps_hat  = -sqrt(1 - ab) * score(x)
    let noise = (1.0 - alpha_bar).sqrt();
    let mut out = Image::zeros(x_k.height(), x_k.width());
    for ((c, &r), &v) in components.iter().zip(resp.iter()).zip(variances.iter()) {
        if r == 0.0 {
            continue;
        }
        let coeff = r / v;
        for ((o, x), m) in out
            .data_mut()
            .iter_mut()
            .zip(x_k.data())
            .zip(c.mean.data())
        {
            *o += coeff * (x - signal * m);
        }
    }
    out.map(|v| v * noise)
}

/// Softmax over log-weights, stabilized by subtracting the maximum.
fn log_softmax_weights(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    weights
}

pub(crate) fn check_level(level: usize, sched: &NoiseSchedule) -> Result<()> {
    if level == 0 || level > sched.total_steps() {
        return Err(Error::config(
            "level",
            format!(
                "level {level} outside schedule range 1..={}",
                sched.total_steps()
            ),
        ));
    }
    Ok(())
}
