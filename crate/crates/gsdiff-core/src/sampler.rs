//! Seeded, resumable reverse-diffusion sampler.
//!
//! A trajectory is a pure function of its 64-bit seed and the configured
//! denoiser/guidance/schedule. Checkpoints carry the latent, the progress
//! counter, the live RNG state, and the current clean-image estimate, so a
//! truncated run resumed later is bit-identical to an uninterrupted one.
//!
//! Step-index convention: `steps_done` counts completed reverse steps
//! (public-facing); the schedule level is `k = T - steps_done`, with
//! `k = T` the pure-noise end and `alpha_bar(0) = 1` so the final step
//! lands exactly on the clean estimate.

use crate::denoiser::{check_level, denoiser_eps, DenoiserSpec};
use crate::error::{Error, Result};
use crate::guidance::{apply_guidance, GuidanceConfig};
use crate::image::{ensure_same_geometry, Image};
use crate::rng::TrajectoryRng;
use crate::schedule::NoiseSchedule;

/// Resumable sampler state.
#[derive(Clone, Debug)]
pub struct TrajectoryCheckpoint {
    latent: Image,
    steps_done: usize,
    rng: TrajectoryRng,
    seed_id: u64,
    x0_estimate: Image,
}

impl TrajectoryCheckpoint {
    /// Current latent x_k at level `k = T - steps_done`.
    pub fn latent(&self) -> &Image {
        &self.latent
    }

    /// Completed reverse steps, in [0, T].
    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    /// Seed that initialized this trajectory.
    pub fn seed_id(&self) -> u64 {
        self.seed_id
    }

    /// Predicted clean image at the current step. Before the first step
    /// this is the raw init latent.
    pub fn x0_estimate(&self) -> &Image {
        &self.x0_estimate
    }

    /// Serializable RNG state words.
    pub fn rng_state(&self) -> [u64; 4] {
        self.rng.state()
    }

    /// True when every field, including RNG state, matches bit-for-bit.
    pub fn bit_identical(&self, other: &TrajectoryCheckpoint) -> bool {
        self.steps_done == other.steps_done
            && self.seed_id == other.seed_id
            && self.rng == other.rng
            && self.latent.bit_identical(&other.latent)
            && self.x0_estimate.bit_identical(&other.x0_estimate)
    }
}

/// Forward diffusion: `x_k = sqrt(ab_k)·x0 + sqrt(1 - ab_k)·eps`.
pub fn forward_sample(
    x0: &Image,
    level: usize,
    eps: &Image,
    sched: &NoiseSchedule,
) -> Result<Image> {
    check_level(level, sched)?;
    ensure_same_geometry(x0, eps, "forward_sample")?;
    let ab = sched.alpha_bar(level);
    let signal = ab.sqrt();
    let noise = (1.0 - ab).sqrt();
    Ok(x0.zip_map(eps, |x, e| signal * x + noise * e))
}

/// Clean-image prediction: `x0_hat = (x_k - sqrt(1 - ab_k)·eps_hat) / sqrt(ab_k)`.
/// Returns the raw estimate; clamping is a scoring-stage decision.
pub fn predict_x0(
    x_k: &Image,
    eps_hat: &Image,
    level: usize,
    sched: &NoiseSchedule,
) -> Result<Image> {
    check_level(level, sched)?;
    ensure_same_geometry(x_k, eps_hat, "predict_x0")?;
    let ab = sched.alpha_bar(level);
    let signal = ab.sqrt();
    let noise = (1.0 - ab).sqrt();
    Ok(x_k.zip_map(eps_hat, |x, e| (x - noise * e) / signal))
}

/// One reverse step of the DDIM-family update:
///
/// `x_{k-1} = sqrt(ab_{k-1})·x0_hat + sqrt(1 - ab_{k-1} - sigma_k^2)·eps' + sigma_k·z`
///
/// with `sigma_k = eta * sqrt((1-ab_{k-1})/(1-ab_k)) * sqrt(1 - ab_k/ab_{k-1})`.
/// The stored clean estimate is the `x0_hat` consistent with the guided
/// noise prediction `eps'`. The RNG advances (one normal tensor) iff
/// `eta > 0`.
pub fn reverse_step(
    ckpt: &TrajectoryCheckpoint,
    spec: &DenoiserSpec,
    guidance: Option<&GuidanceConfig>,
    eta: f64,
    sched: &NoiseSchedule,
) -> Result<TrajectoryCheckpoint> {
    let total = sched.total_steps();
    if ckpt.steps_done >= total {
        return Err(Error::State(format!(
            "trajectory already complete ({} of {total} steps)",
            ckpt.steps_done
        )));
    }
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::config("eta", "must be finite and >= 0"));
    }

    let level = total - ckpt.steps_done;
    let ab_k = sched.alpha_bar(level);
    let ab_prev = sched.alpha_bar(level - 1);

    let eps_hat = denoiser_eps(&ckpt.latent, level, spec, sched)?;
    let eps_guided = match guidance {
        Some(g) => apply_guidance(&eps_hat, &ckpt.latent, level, g, sched)?,
        None => eps_hat,
    };
    let x0_hat = predict_x0(&ckpt.latent, &eps_guided, level, sched)?;

    let sigma = if eta > 0.0 {
        eta * ((1.0 - ab_prev) / (1.0 - ab_k)).sqrt() * (1.0 - ab_k / ab_prev).sqrt()
    } else {
        0.0
    };
    let dir_coeff = (1.0 - ab_prev - sigma * sigma).max(0.0).sqrt();
    let signal_coeff = ab_prev.sqrt();

    let mut rng = ckpt.rng.clone();
    let mut next = x0_hat.zip_map(&eps_guided, |x0, e| signal_coeff * x0 + dir_coeff * e);
    if eta > 0.0 {
        // One normal tensor per stochastic step, drawn even when sigma is
        // zero at the boundary so the draw order stays uniform.
        let mut z = vec![0.0; next.sample_count()];
        rng.fill_standard_normal(&mut z);
        for (v, n) in next.data_mut().iter_mut().zip(z.iter()) {
            *v += sigma * n;
        }
    }

    Ok(TrajectoryCheckpoint {
        latent: next,
        steps_done: ckpt.steps_done + 1,
        rng,
        seed_id: ckpt.seed_id,
        x0_estimate: x0_hat,
    })
}

/// Initialize a trajectory: the latent is one standard-normal tensor drawn
/// from a fresh stream seeded with `seed`.
pub fn init_trajectory(seed: u64, height: usize, width: usize) -> TrajectoryCheckpoint {
    let mut rng = TrajectoryRng::seed_from(seed);
    let mut latent = Image::zeros(height, width);
    let mut buf = vec![0.0; latent.sample_count()];
    rng.fill_standard_normal(&mut buf);
    latent.data_mut().copy_from_slice(&buf);
    TrajectoryCheckpoint {
        x0_estimate: latent.clone(),
        latent,
        steps_done: 0,
        rng,
        seed_id: seed,
    }
}

/// Run a fresh trajectory for `stop_after` reverse steps.
pub fn run_trajectory(
    seed: u64,
    stop_after: usize,
    spec: &DenoiserSpec,
    guidance: Option<&GuidanceConfig>,
    eta: f64,
    sched: &NoiseSchedule,
) -> Result<TrajectoryCheckpoint> {
    if stop_after > sched.total_steps() {
        return Err(Error::config(
            "stop_after",
            format!(
                "requested {stop_after} steps, schedule has {}",
                sched.total_steps()
            ),
        ));
    }
    let geometry = match spec {
        DenoiserSpec::GaussianMixture { components } => &components[0].mean,
        DenoiserSpec::Empirical { dataset } => &dataset[0],
    };
    let mut ckpt = init_trajectory(seed, geometry.height(), geometry.width());
    for _ in 0..stop_after {
        ckpt = reverse_step(&ckpt, spec, guidance, eta, sched)?;
    }
    Ok(ckpt)
}

/// Resume a checkpoint until `steps_done` reaches `target_steps`.
pub fn resume_to(
    ckpt: &TrajectoryCheckpoint,
    target_steps: usize,
    spec: &DenoiserSpec,
    guidance: Option<&GuidanceConfig>,
    eta: f64,
    sched: &NoiseSchedule,
) -> Result<TrajectoryCheckpoint> {
    if target_steps < ckpt.steps_done {
        return Err(Error::State(format!(
            "cannot rewind from step {} to {target_steps}",
            ckpt.steps_done
        )));
    }
    if target_steps > sched.total_steps() {
        return Err(Error::config(
            "target_steps",
            format!(
                "requested {target_steps} steps, schedule has {}",
                sched.total_steps()
            ),
        ));
    }
    let mut current = ckpt.clone();
    while current.steps_done < target_steps {
        current = reverse_step(&current, spec, guidance, eta, sched)?;
    }
    Ok(current)
}
