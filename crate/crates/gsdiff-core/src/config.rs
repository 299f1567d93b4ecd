//! Experiment and pipeline configuration.
//!
//! One TOML file drives every subcommand; all fields are optional and fall
//! back to the documented defaults (see README). Unknown keys are
//! rejected so typos surface as configuration errors instead of silently
//! enabled defaults.

use std::path::{Path, PathBuf};

use crate::dataset::PatternKind;
use crate::degrade::DegradationConfig;
use crate::error::{Error, Result};
use crate::schedule::{build_schedule, NoiseSchedule};

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub degradation: DegradationConfig,
    pub schedule: ScheduleConfig,
    pub selection: SelectionSettings,
    pub guidance: GuidanceSettings,
    pub experiment: ExperimentSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            output_dir: PathBuf::from("gsdiff-out"),
            dataset: DatasetConfig::default(),
            degradation: DegradationConfig::default(),
            schedule: ScheduleConfig::default(),
            selection: SelectionSettings::default(),
            guidance: GuidanceSettings::default(),
            experiment: ExperimentSettings::default(),
        }
    }
}

/// Where evaluation images and denoiser references come from.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    /// Deterministic pattern generator (the default).
    Synthetic {
        #[serde(default)]
        pattern: PatternKind,
        #[serde(default = "default_count")]
        count: usize,
        #[serde(default = "default_geometry")]
        height: usize,
        #[serde(default = "default_geometry")]
        width: usize,
        #[serde(default = "default_noise_level")]
        noise_level: f64,
    },
    /// User-supplied PNG corpus: evaluation images from `path`, denoiser
    /// references from `reference_path`.
    Directory {
        path: PathBuf,
        reference_path: PathBuf,
    },
}

fn default_count() -> usize {
    64
}
fn default_geometry() -> usize {
    32
}
fn default_noise_level() -> f64 {
    0.02
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig::Synthetic {
            pattern: PatternKind::default(),
            count: default_count(),
            height: default_geometry(),
            width: default_geometry(),
            noise_level: default_noise_level(),
        }
    }
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub total_steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            total_steps: 20,
            beta_start: 1e-4,
            beta_end: 0.02,
        }
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<NoiseSchedule> {
        build_schedule(self.total_steps, self.beta_start, self.beta_end)
    }
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSettings {
    pub num_candidates: usize,
    /// Truncation step used by single-image selection.
    pub truncation_step: usize,
    /// Truncation steps swept by the experiment runner.
    pub truncation_sweep: Vec<usize>,
    pub eta: f64,
}

impl Default for SelectionSettings {
    fn default() -> Self {
        SelectionSettings {
            num_candidates: 5,
            truncation_step: 10,
            truncation_sweep: vec![10, 15, 20],
            eta: 0.0,
        }
    }
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidanceSettings {
    /// Reconstruction-guidance weight; 0 disables guidance.
    pub weight: f64,
}

impl Default for GuidanceSettings {
    fn default() -> Self {
        GuidanceSettings { weight: 1.0 }
    }
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSettings {
    pub trials: usize,
    pub master_seed: u64,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            trials: 1,
            master_seed: 7,
        }
    }
}

impl ExperimentConfig {
    /// Parse a TOML config file; a missing `path` of `None` yields the
    /// defaults.
    pub fn load(path: Option<&Path>) -> Result<ExperimentConfig> {
        let Some(path) = path else {
            return Ok(ExperimentConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Config {
            field: "config".to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.degradation.validate()?;
        let sched = self.schedule.build()?;
        if self.selection.num_candidates < 1 {
            return Err(Error::config("selection.num_candidates", "must be at least 1"));
        }
        if self.selection.num_candidates > u16::MAX as usize {
            return Err(Error::config(
                "selection.num_candidates",
                "must fit the sidecar u16 field",
            ));
        }
        if self.schedule.total_steps > u16::MAX as usize {
            return Err(Error::config(
                "schedule.total_steps",
                "must fit the sidecar u16 field",
            ));
        }
        let check_step = |name: &str, t: usize| -> Result<()> {
            if t < 1 || t > sched.total_steps() {
                return Err(Error::Config {
                    field: name.to_string(),
                    message: format!("must lie in 1..={}, got {t}", sched.total_steps()),
                });
            }
            Ok(())
        };
        check_step("selection.truncation_step", self.selection.truncation_step)?;
        if self.selection.truncation_sweep.is_empty() {
            return Err(Error::config(
                "selection.truncation_sweep",
                "must name at least one truncation step",
            ));
        }
        for &t in &self.selection.truncation_sweep {
            check_step("selection.truncation_sweep", t)?;
        }
        if !self.selection.eta.is_finite() || self.selection.eta < 0.0 {
            return Err(Error::config("selection.eta", "must be finite and >= 0"));
        }
        if !self.guidance.weight.is_finite() || self.guidance.weight < 0.0 {
            return Err(Error::config("guidance.weight", "must be finite and >= 0"));
        }
        if self.experiment.trials < 1 {
            return Err(Error::config("experiment.trials", "must be at least 1"));
        }
        match &self.dataset {
            DatasetConfig::Synthetic {
                count,
                height,
                width,
                noise_level,
                ..
            } => {
                if *count < 1 {
                    return Err(Error::config("dataset.count", "must be at least 1"));
                }
                if *height < 11 || *width < 11 {
                    return Err(Error::config(
                        "dataset.height/width",
                        "must be at least 11 for metric windows",
                    ));
                }
                if !noise_level.is_finite() || *noise_level < 0.0 {
                    return Err(Error::config("dataset.noise_level", "must be finite and >= 0"));
                }
            }
            DatasetConfig::Directory { .. } => {}
        }
        Ok(())
    }
}
