//! Noise schedule tables for the reverse-diffusion sampler.

use crate::error::{Error, Result};

/// Per-level beta/alpha/alpha-bar tables.
///
/// Level `k` runs 1..=T with `k = T` the noisiest; table index `k - 1`
/// stores level `k`. `alpha_bar(0)` is defined as 1 so the final reverse
/// step lands on the clean estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// Total number of reverse steps T.
    pub fn total_steps(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    /// Cumulative signal coefficient at level `k`, with the `k = 0`
    /// boundary convention `alpha_bar(0) = 1`.
    pub fn alpha_bar(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.alpha_bars[k - 1]
        }
    }

    pub fn beta(&self, k: usize) -> f64 {
        self.betas[k - 1]
    }
}

/// Build a schedule with betas linearly interpolated from `beta_start` to
/// `beta_end` inclusive over `total_steps` levels.
pub fn build_schedule(total_steps: usize, beta_start: f64, beta_end: f64) -> Result<NoiseSchedule> {
    if total_steps < 1 {
        return Err(Error::config("total_steps", "must be at least 1"));
    }
    if !(beta_start > 0.0 && beta_start < 1.0) || !beta_start.is_finite() {
        return Err(Error::config("beta_start", "must lie strictly in (0, 1)"));
    }
    if !(beta_end > 0.0 && beta_end < 1.0) || !beta_end.is_finite() {
        return Err(Error::config("beta_end", "must lie strictly in (0, 1)"));
    }
    if beta_start > beta_end {
        return Err(Error::config(
            "beta_start",
            "must not exceed beta_end",
        ));
    }

    let betas: Vec<f64> = if total_steps == 1 {
        vec![beta_start]
    } else {
        (0..total_steps)
            .map(|i| {
                let frac = i as f64 / (total_steps - 1) as f64;
                beta_start + (beta_end - beta_start) * frac
            })
            .collect()
    };
    let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
    let mut alpha_bars = Vec::with_capacity(total_steps);
    let mut running = 1.0;
    for &a in &alphas {
        running *= a;
        alpha_bars.push(running);
    }

    // Betas in (0,1) force alpha_bars to be strictly decreasing and
    // strictly inside (0,1); trap any numeric surprise here rather than in
    // the sampler.
    for (i, &ab) in alpha_bars.iter().enumerate() {
        let prev = if i == 0 { 1.0 } else { alpha_bars[i - 1] };
        if !(ab > 0.0 && ab < 1.0 && ab < prev) {
            return Err(Error::config(
                "beta_end",
                format!("schedule degenerates at level {} (alpha_bar = {ab})", i + 1),
            ));
        }
    }

    Ok(NoiseSchedule {
        betas,
        alphas,
        alpha_bars,
    })
}
