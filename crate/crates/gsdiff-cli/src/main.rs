//! `gsdiff`: machine-codec simulation, seed selection, decoding, metrics,
//! and the dataset experiment, wired into one binary.
//!
//! Progress and diagnostics go to stderr; stdout carries only
//! machine-readable JSON, so the subcommands compose in shell pipelines.
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 4
//! format/corruption error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use gsdiff_core::config::ExperimentConfig;
use gsdiff_core::degrade::degrade;
use gsdiff_core::error::Error;
use gsdiff_core::exec::{configure_workers, ExecMode};
use gsdiff_core::experiment::{resolve_denoiser, run_experiment, write_report_files};
use gsdiff_core::guidance::GuidanceConfig;
use gsdiff_core::image::ensure_same_geometry;
use gsdiff_core::metrics::MetricReport;
use gsdiff_core::pngio::{load_image, save_image};
use gsdiff_core::select::{
    derive_seed, finalize_from_seed, generate_candidates, select_seed, SelectionConfig,
};
use gsdiff_core::sidecar::{decode_sidecar, encode_sidecar, SeedSidecar};

#[derive(Parser)]
#[command(
    name = "gsdiff",
    version,
    about = "Guided-diffusion reconstruction of human-viewable images from machine-oriented codecs, with zero-bitrate seed selection"
)]
struct Cli {
    /// TOML configuration file (defaults apply when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Worker threads for data-parallel stages (0 = one per core).
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    workers: usize,

    /// Output directory override for experiment artifacts.
    #[arg(long, global = true, value_name = "PATH")]
    output_dir: Option<PathBuf>,

    /// Base seed override for seed-deriving commands.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the machine-oriented codec on a PNG.
    Encode {
        /// Input 8-bit RGB PNG.
        input: PathBuf,
        /// Output path for the machine-oriented PNG.
        output: PathBuf,
    },
    /// Pick the best candidate seed against the original and write the
    /// sidecar.
    SelectSeed {
        /// Ground-truth original PNG.
        original: PathBuf,
        /// Machine-oriented PNG (the condition image).
        machine: PathBuf,
        /// Output path for the binary seed sidecar.
        sidecar: PathBuf,
        /// Optional path for the JSON score report (also printed).
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Decode: replay the transmitted seed to full depth and merge chroma.
    /// Needs only the machine image and the sidecar.
    Reconstruct {
        machine: PathBuf,
        sidecar: PathBuf,
        /// Output path for the reconstructed PNG.
        output: PathBuf,
    },
    /// Print quality metrics between two PNGs.
    Metrics {
        image_a: PathBuf,
        image_b: PathBuf,
    },
    /// Run the configured dataset experiment and write report files.
    Experiment,
}

fn main() {
    let cli = Cli::parse();
    configure_workers(cli.workers);
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Dimension(_) | Error::State(_) => 2,
        Error::Io { .. } | Error::ImageFormat { .. } | Error::Truncated { .. } => 3,
        Error::Format(_) | Error::Corrupt(_) | Error::Semantic(_) => 4,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    match &cli.command {
        Command::Encode { input, output } => cmd_encode(&cfg, input, output),
        Command::SelectSeed {
            original,
            machine,
            sidecar,
            report,
        } => cmd_select_seed(&cfg, cli.seed, original, machine, sidecar, report.as_deref()),
        Command::Reconstruct {
            machine,
            sidecar,
            output,
        } => cmd_reconstruct(&cfg, machine, sidecar, output),
        Command::Metrics { image_a, image_b } => cmd_metrics(image_a, image_b),
        Command::Experiment => cmd_experiment(&cfg),
    }
}

fn cmd_encode(cfg: &ExperimentConfig, input: &Path, output: &Path) -> Result<(), Error> {
    let img = load_image(input)?;
    let machine = degrade(&img, &cfg.degradation);
    save_image(output, &machine)?;
    eprintln!("encoded {} -> {}", input.display(), output.display());
    Ok(())
}

fn cmd_select_seed(
    cfg: &ExperimentConfig,
    seed_override: Option<u64>,
    original: &Path,
    machine: &Path,
    sidecar_path: &Path,
    report_path: Option<&Path>,
) -> Result<(), Error> {
    let ground_truth = load_image(original)?;
    let machine_img = load_image(machine)?;
    ensure_same_geometry(&ground_truth, &machine_img, "select-seed inputs")?;

    let sched = cfg.schedule.build()?;
    let base_seed = seed_override.unwrap_or(cfg.experiment.master_seed);
    let selection = SelectionConfig {
        num_candidates: cfg.selection.num_candidates,
        truncation_step: cfg.selection.truncation_step,
        base_seed,
        eta: cfg.selection.eta,
    };
    let denoiser = resolve_denoiser(cfg, ground_truth.height(), ground_truth.width())?;
    let guidance = build_guidance(cfg, &machine_img)?;

    let records = generate_candidates(
        &ground_truth,
        &machine_img,
        &selection,
        &denoiser,
        guidance.as_ref(),
        &sched,
    )?;
    let report = select_seed(&records)?;

    let record = SeedSidecar {
        total_steps: sched.total_steps() as u16,
        num_candidates: selection.num_candidates as u16,
        selected_index: report.chosen_index as u16,
        base_seed,
    };
    let bytes = encode_sidecar(&record)?;
    std::fs::write(sidecar_path, &bytes).map_err(|source| Error::Io {
        path: sidecar_path.to_path_buf(),
        source,
    })?;

    let json = serde_json::json!({
        "chosen_index": report.chosen_index,
        "scores_db": report.scores_db,
        "base_seed": base_seed,
        "truncation_step": selection.truncation_step,
        "sidecar_bytes": bytes.len(),
    });
    let text = serde_json::to_string_pretty(&json).expect("report serializes");
    if let Some(path) = report_path {
        std::fs::write(path, text.as_bytes()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    println!("{text}");
    eprintln!(
        "selected seed index {} of {}; sidecar {} ({} bytes)",
        report.chosen_index,
        selection.num_candidates,
        sidecar_path.display(),
        bytes.len()
    );
    Ok(())
}

fn cmd_reconstruct(
    cfg: &ExperimentConfig,
    machine: &Path,
    sidecar_path: &Path,
    output: &Path,
) -> Result<(), Error> {
    let machine_img = load_image(machine)?;
    let bytes = std::fs::read(sidecar_path).map_err(|source| Error::Io {
        path: sidecar_path.to_path_buf(),
        source,
    })?;
    let record = decode_sidecar(&bytes)?;

    let sched = cfg.schedule.build()?;
    if record.total_steps as usize != sched.total_steps() {
        return Err(Error::Config {
            field: "schedule.total_steps".to_string(),
            message: format!(
                "sidecar was produced with T = {}, configuration has T = {}",
                record.total_steps,
                sched.total_steps()
            ),
        });
    }

    let denoiser = resolve_denoiser(cfg, machine_img.height(), machine_img.width())?;
    let guidance = build_guidance(cfg, &machine_img)?;
    let derived = derive_seed(record.base_seed, record.selected_index as u64);
    let reconstructed = finalize_from_seed(
        derived,
        &machine_img,
        &denoiser,
        guidance.as_ref(),
        cfg.selection.eta,
        &sched,
    )?;
    save_image(output, &reconstructed)?;
    eprintln!(
        "reconstructed {} from seed index {} -> {}",
        machine.display(),
        record.selected_index,
        output.display()
    );
    Ok(())
}

fn cmd_metrics(image_a: &Path, image_b: &Path) -> Result<(), Error> {
    let a = load_image(image_a)?;
    let b = load_image(image_b)?;
    let report = MetricReport::between(&a, &b)?;
    let json = serde_json::json!({
        "psnr_db": report.psnr_db,
        "y_psnr_db": report.y_psnr_db,
        "ssim": report.ssim,
        "lpips": "not computed",
    });
    println!("{}", serde_json::to_string_pretty(&json).expect("serializes"));
    Ok(())
}

fn cmd_experiment(cfg: &ExperimentConfig) -> Result<(), Error> {
    eprintln!(
        "running experiment: {} trial(s), {} candidate(s), sweep {:?}",
        cfg.experiment.trials, cfg.selection.num_candidates, cfg.selection.truncation_sweep
    );
    let report = run_experiment(cfg, ExecMode::Parallel)?;
    let (json_path, csv_path) = write_report_files(&report, &cfg.output_dir)?;
    let headline = serde_json::json!({
        "aggregate": report.aggregate,
        "agreement": report.agreement,
        "report": json_path,
        "summary": csv_path,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&headline).expect("serializes")
    );
    eprintln!("report written to {}", json_path.display());
    Ok(())
}

fn build_guidance(
    cfg: &ExperimentConfig,
    machine_img: &gsdiff_core::Image,
) -> Result<Option<GuidanceConfig>, Error> {
    if cfg.guidance.weight > 0.0 {
        Ok(Some(GuidanceConfig::new(
            cfg.guidance.weight,
            machine_img.clone(),
            cfg.degradation.clone(),
        )?))
    } else {
        Ok(None)
    }
}
