//! Experiment runner: baseline vs seed selection across a truncation
//! sweep, with agreement statistics against the full-depth oracle.
//!
//! For every image, N candidate trajectories run once to full depth while
//! intermediate clean-image estimates are scored at each configured
//! truncation step (reusing one pass for the whole sweep is safe because
//! resuming is bit-exact). The baseline is candidate 0 of the same derived
//! seed family; the oracle is the argmax of final-image luma PSNR. Reports
//! are assembled in image order, so parallel execution never changes
//! output bytes.

use std::path::{Path, PathBuf};

use crate::color::cc_merge;
use crate::config::{DatasetConfig, ExperimentConfig};
use crate::dataset::{synth_dataset_with_refs, synth_references};
use crate::degrade::degrade;
use crate::denoiser::DenoiserSpec;
use crate::error::{Error, Result};
use crate::exec::{try_map_indexed, ExecMode};
use crate::guidance::GuidanceConfig;
use crate::image::Image;
use crate::metrics::{y_psnr, MetricReport};
use crate::pngio::load_image;
use crate::sampler::{init_trajectory, reverse_step};
use crate::select::{argmax_first, derive_seed};
use crate::stats::mean;

/// Derivation index of the first trial stream under the master seed
/// (indices 0 and 1 belong to the dataset generator).
const TRIAL_STREAM_BASE: u64 = 2;

/// Baseline strategy label in reports; selection strategies are
/// `select_t{t}`.
pub const BASELINE_STRATEGY: &str = "baseline";

pub fn strategy_label(truncation_step: usize) -> String {
    format!("select_t{truncation_step}")
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub strategies: Vec<String>,
    pub trials: Vec<TrialReport>,
    /// Per-strategy means over every image of every trial.
    pub aggregate: Vec<StrategySummary>,
    /// Per-truncation-step agreement with the oracle, across all trials.
    pub agreement: Vec<AgreementSummary>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct TrialReport {
    pub trial_index: usize,
    pub trial_seed: u64,
    pub images: Vec<ImageRecord>,
    pub strategy_means: Vec<StrategySummary>,
    pub agreement_rates: Vec<AgreementSummary>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub mean_psnr_db: f64,
    pub mean_y_psnr_db: f64,
    pub mean_ssim: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct AgreementSummary {
    pub truncation_step: usize,
    pub agreement_rate: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ImageRecord {
    pub image_id: usize,
    pub image_base_seed: u64,
    pub candidate_seeds: Vec<u64>,
    /// Per-candidate luma PSNR of the final (full-depth, pre-merge)
    /// estimate; the oracle is its argmax.
    pub final_scores_db: Vec<f64>,
    pub oracle_index: usize,
    pub truncations: Vec<TruncationRecord>,
    pub strategies: Vec<StrategyResult>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct TruncationRecord {
    pub truncation_step: usize,
    pub scores_db: Vec<f64>,
    pub chosen_index: usize,
    pub agreed_with_oracle: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct StrategyResult {
    pub strategy: String,
    pub candidate_index: usize,
    pub metrics: MetricReport,
}

/// Evaluation images plus the matching denoiser.
pub struct ResolvedDataset {
    pub images: Vec<Image>,
    pub denoiser: DenoiserSpec,
}

/// Materialize the configured dataset.
pub fn resolve_dataset(cfg: &ExperimentConfig) -> Result<ResolvedDataset> {
    match &cfg.dataset {
        DatasetConfig::Synthetic {
            pattern,
            count,
            height,
            width,
            noise_level,
        } => {
            let d = synth_dataset_with_refs(
                *pattern,
                *count,
                *count,
                *height,
                *width,
                *noise_level,
                cfg.experiment.master_seed,
            )?;
            Ok(ResolvedDataset {
                images: d.images,
                denoiser: d.denoiser,
            })
        }
        DatasetConfig::Directory {
            path,
            reference_path,
        } => {
            let images = load_png_directory(path)?;
            let references = load_png_directory(reference_path)?;
            Ok(ResolvedDataset {
                images,
                denoiser: DenoiserSpec::empirical(references)?,
            })
        }
    }
}

/// Rebuild the denoiser alone at a given geometry, as the decoder does:
/// synthetic references are regenerated from the master seed, directory
/// references are loaded from disk.
pub fn resolve_denoiser(cfg: &ExperimentConfig, height: usize, width: usize) -> Result<DenoiserSpec> {
    match &cfg.dataset {
        DatasetConfig::Synthetic {
            pattern,
            count,
            noise_level,
            ..
        } => DenoiserSpec::empirical(synth_references(
            *pattern,
            *count,
            height,
            width,
            *noise_level,
            cfg.experiment.master_seed,
        )),
        DatasetConfig::Directory { reference_path, .. } => {
            DenoiserSpec::empirical(load_png_directory(reference_path)?)
        }
    }
}

/// PNGs in one directory, sorted by file name for determinism.
pub fn load_png_directory(dir: &Path) -> Result<Vec<Image>> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .map(|ext| ext.eq_ignore_ascii_case("png"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config {
            field: "dataset.path".to_string(),
            message: format!("no .png files found in {}", dir.display()),
        });
    }
    paths.iter().map(|p| load_image(p)).collect()
}

/// Run the configured experiment.
pub fn run_experiment(cfg: &ExperimentConfig, mode: ExecMode) -> Result<ExperimentReport> {
    cfg.validate()?;
    let sched = cfg.schedule.build()?;
    let dataset = resolve_dataset(cfg)?;

    let mut sweep: Vec<usize> = cfg.selection.truncation_sweep.clone();
    sweep.sort_unstable();
    sweep.dedup();

    let strategies: Vec<String> = std::iter::once(BASELINE_STRATEGY.to_string())
        .chain(sweep.iter().map(|&t| strategy_label(t)))
        .collect();

    let total_steps = sched.total_steps();
    let num_candidates = cfg.selection.num_candidates;
    let eta = cfg.selection.eta;

    let mut trials = Vec::with_capacity(cfg.experiment.trials);
    for trial_index in 0..cfg.experiment.trials {
        let trial_seed = derive_seed(
            cfg.experiment.master_seed,
            TRIAL_STREAM_BASE + trial_index as u64,
        );
        let images = try_map_indexed(mode, dataset.images.len(), |image_id| {
            process_image(
                image_id,
                &dataset.images[image_id],
                trial_seed,
                cfg,
                &dataset.denoiser,
                &sched,
                &sweep,
                num_candidates,
                eta,
                total_steps,
            )
        })?;

        let strategy_means = summarize_strategies(&strategies, &images);
        let agreement_rates = summarize_agreement(&sweep, &images);
        trials.push(TrialReport {
            trial_index,
            trial_seed,
            images,
            strategy_means,
            agreement_rates,
        });
    }

    let all_images: Vec<&ImageRecord> = trials.iter().flat_map(|t| t.images.iter()).collect();
    let aggregate = summarize_strategies_ref(&strategies, &all_images);
    let agreement = summarize_agreement_ref(&sweep, &all_images);

    Ok(ExperimentReport {
        config: cfg.clone(),
        strategies,
        trials,
        aggregate,
        agreement,
    })
}

#[allow(clippy::too_many_arguments)]
fn process_image(
    image_id: usize,
    ground_truth: &Image,
    trial_seed: u64,
    cfg: &ExperimentConfig,
    denoiser: &DenoiserSpec,
    sched: &crate::schedule::NoiseSchedule,
    sweep: &[usize],
    num_candidates: usize,
    eta: f64,
    total_steps: usize,
) -> Result<ImageRecord> {
    let machine = degrade(ground_truth, &cfg.degradation);
    let guidance = if cfg.guidance.weight > 0.0 {
        Some(GuidanceConfig::new(
            cfg.guidance.weight,
            machine.clone(),
            cfg.degradation.clone(),
        )?)
    } else {
        None
    };

    let image_base_seed = derive_seed(trial_seed, image_id as u64);
    let candidate_seeds: Vec<u64> = (0..num_candidates)
        .map(|c| derive_seed(image_base_seed, c as u64))
        .collect();

    // One full-depth pass per candidate, scoring the clean-image estimate
    // at every swept truncation step along the way.
    let mut sweep_scores = vec![vec![0.0f64; num_candidates]; sweep.len()];
    let mut final_scores_db = vec![0.0f64; num_candidates];
    let mut final_estimates: Vec<Image> = Vec::with_capacity(num_candidates);
    for (c, &seed) in candidate_seeds.iter().enumerate() {
        let mut ckpt = init_trajectory(seed, ground_truth.height(), ground_truth.width());
        while ckpt.steps_done() < total_steps {
            ckpt = reverse_step(&ckpt, denoiser, guidance.as_ref(), eta, sched)?;
            if let Some(slot) = sweep.iter().position(|&t| t == ckpt.steps_done()) {
                sweep_scores[slot][c] =
                    y_psnr(&ckpt.x0_estimate().clamp01(), ground_truth)?;
            }
        }
        let final_estimate = ckpt.x0_estimate().clamp01();
        final_scores_db[c] = y_psnr(&final_estimate, ground_truth)?;
        final_estimates.push(final_estimate);
    }

    let oracle_index = argmax_first(&final_scores_db);
    let truncations: Vec<TruncationRecord> = sweep
        .iter()
        .enumerate()
        .map(|(slot, &t)| {
            let chosen_index = argmax_first(&sweep_scores[slot]);
            TruncationRecord {
                truncation_step: t,
                scores_db: sweep_scores[slot].clone(),
                chosen_index,
                agreed_with_oracle: chosen_index == oracle_index,
            }
        })
        .collect();

    // Finalize (merge + metrics) each distinct candidate a strategy needs.
    let mut finalized: Vec<Option<MetricReport>> = vec![None; num_candidates];
    let mut metrics_for = |c: usize| -> Result<MetricReport> {
        if finalized[c].is_none() {
            let merged = cc_merge(&final_estimates[c], &machine)?;
            finalized[c] = Some(MetricReport::between(&merged, ground_truth)?);
        }
        Ok(finalized[c].clone().expect("just filled"))
    };

    let mut strategies = Vec::with_capacity(1 + sweep.len());
    strategies.push(StrategyResult {
        strategy: BASELINE_STRATEGY.to_string(),
        candidate_index: 0,
        metrics: metrics_for(0)?,
    });
    for record in &truncations {
        strategies.push(StrategyResult {
            strategy: strategy_label(record.truncation_step),
            candidate_index: record.chosen_index,
            metrics: metrics_for(record.chosen_index)?,
        });
    }

    Ok(ImageRecord {
        image_id,
        image_base_seed,
        candidate_seeds,
        final_scores_db,
        oracle_index,
        truncations,
        strategies,
    })
}

fn summarize_strategies(strategies: &[String], images: &[ImageRecord]) -> Vec<StrategySummary> {
    let refs: Vec<&ImageRecord> = images.iter().collect();
    summarize_strategies_ref(strategies, &refs)
}

fn summarize_strategies_ref(
    strategies: &[String],
    images: &[&ImageRecord],
) -> Vec<StrategySummary> {
    strategies
        .iter()
        .map(|name| {
            let mut psnr = Vec::with_capacity(images.len());
            let mut y = Vec::with_capacity(images.len());
            let mut ssim = Vec::with_capacity(images.len());
            for img in images {
                if let Some(s) = img.strategies.iter().find(|s| &s.strategy == name) {
                    psnr.push(s.metrics.psnr_db);
                    y.push(s.metrics.y_psnr_db);
                    ssim.push(s.metrics.ssim);
                }
            }
            StrategySummary {
                strategy: name.clone(),
                mean_psnr_db: mean(&psnr),
                mean_y_psnr_db: mean(&y),
                mean_ssim: mean(&ssim),
            }
        })
        .collect()
}

fn summarize_agreement(sweep: &[usize], images: &[ImageRecord]) -> Vec<AgreementSummary> {
    let refs: Vec<&ImageRecord> = images.iter().collect();
    summarize_agreement_ref(sweep, &refs)
}

fn summarize_agreement_ref(sweep: &[usize], images: &[&ImageRecord]) -> Vec<AgreementSummary> {
    sweep
        .iter()
        .map(|&t| {
            let mut agreed = 0usize;
            let mut total = 0usize;
            for img in images {
                if let Some(r) = img.truncations.iter().find(|r| r.truncation_step == t) {
                    total += 1;
                    if r.agreed_with_oracle {
                        agreed += 1;
                    }
                }
            }
            AgreementSummary {
                truncation_step: t,
                agreement_rate: if total == 0 {
                    0.0
                } else {
                    agreed as f64 / total as f64
                },
            }
        })
        .collect()
}

/// Write `report.json` and `summary.csv` under `output_dir`; returns their
/// paths.
pub fn write_report_files(
    report: &ExperimentReport,
    output_dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(output_dir).map_err(|source| Error::Io {
        path: output_dir.to_path_buf(),
        source,
    })?;
    let json_path = output_dir.join("report.json");
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(&json_path, json.as_bytes()).map_err(|source| Error::Io {
        path: json_path.clone(),
        source,
    })?;

    let csv_path = output_dir.join("summary.csv");
    std::fs::write(&csv_path, summary_csv(report).as_bytes()).map_err(|source| Error::Io {
        path: csv_path.clone(),
        source,
    })?;
    Ok((json_path, csv_path))
}

/// Flat per-trial and overall summary for spreadsheet import.
pub fn summary_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("trial,strategy,mean_psnr_db,mean_y_psnr_db,mean_ssim,agreement_rate\n");
    let agreement_cell = |rates: &[AgreementSummary], strategy: &str| -> String {
        rates
            .iter()
            .find(|a| strategy_label(a.truncation_step) == strategy)
            .map(|a| format!("{:.6}", a.agreement_rate))
            .unwrap_or_default()
    };
    for trial in &report.trials {
        for s in &trial.strategy_means {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{}\n",
                trial.trial_index,
                s.strategy,
                s.mean_psnr_db,
                s.mean_y_psnr_db,
                s.mean_ssim,
                agreement_cell(&trial.agreement_rates, &s.strategy),
            ));
        }
    }
    for s in &report.aggregate {
        out.push_str(&format!(
            "all,{},{:.6},{:.6},{:.6},{}\n",
            s.strategy,
            s.mean_psnr_db,
            s.mean_y_psnr_db,
            s.mean_ssim,
            agreement_cell(&report.agreement, &s.strategy),
        ));
    }
    out
}
