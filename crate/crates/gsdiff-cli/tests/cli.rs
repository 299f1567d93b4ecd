//! End-to-end tests of the `gsdiff` binary: every subcommand, the exit-code
//! contract, determinism, and decoder isolation.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gsdiff_core::color::rgb_to_ycbcr;
use gsdiff_core::dataset::{synth_dataset, PatternKind};
use gsdiff_core::pngio::{load_image, save_image};

fn gsdiff() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gsdiff"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output().expect("binary runs").status.code().unwrap_or(-1)
}

/// Small shared config: synthetic denoiser references, short schedule.
fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(
        &path,
        r#"
[dataset]
kind = "synthetic"
pattern = "mixed"
count = 6
noise_level = 0.02

[schedule]
total_steps = 8
beta_start = 1e-4
beta_end = 0.15

[selection]
num_candidates = 3
truncation_step = 4
truncation_sweep = [4, 8]

[experiment]
trials = 1
master_seed = 77
"#,
    )
    .unwrap();
    path
}

fn write_test_image(dir: &Path, name: &str, seed: u64) -> PathBuf {
    let data = synth_dataset(PatternKind::Mixed, 1, 16, 16, 0.02, seed).unwrap();
    let path = dir.join(name);
    save_image(&path, &data.images[0]).unwrap();
    path
}

#[test]
fn encode_identity_config_roundtrips_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("identity.toml");
    std::fs::write(
        &cfg,
        "[degradation]\nblur_sigma = 0.0\nchroma_gain = 1.0\nquant_levels = 0\n",
    )
    .unwrap();
    let input = write_test_image(dir.path(), "in.png", 1);
    let output = dir.path().join("out.png");
    run_ok(gsdiff()
        .args(["--config", cfg.to_str().unwrap(), "encode"])
        .arg(&input)
        .arg(&output));
    assert_eq!(std::fs::read(&input).unwrap(), std::fs::read(&output).unwrap());
}

#[test]
fn encode_zero_chroma_gain_yields_grayscale() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gray.toml");
    std::fs::write(
        &cfg,
        "[degradation]\nblur_sigma = 0.0\nchroma_gain = 0.0\nquant_levels = 0\n",
    )
    .unwrap();
    let input = write_test_image(dir.path(), "in.png", 2);
    let output = dir.path().join("gray.png");
    run_ok(gsdiff()
        .args(["--config", cfg.to_str().unwrap(), "encode"])
        .arg(&input)
        .arg(&output));
    let img = load_image(&output).unwrap();
    for i in 0..img.plane_len() {
        assert_eq!(img.plane(0)[i], img.plane(1)[i]);
        assert_eq!(img.plane(1)[i], img.plane(2)[i]);
    }
}

#[test]
fn encode_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let input = write_test_image(dir.path(), "in.png", 3);
    let out_a = dir.path().join("a.png");
    let out_b = dir.path().join("b.png");
    run_ok(gsdiff()
        .args(["--config", cfg.to_str().unwrap(), "encode"])
        .arg(&input)
        .arg(&out_a));
    run_ok(gsdiff()
        .args(["--config", cfg.to_str().unwrap(), "encode"])
        .arg(&input)
        .arg(&out_b));
    assert_eq!(std::fs::read(&out_a).unwrap(), std::fs::read(&out_b).unwrap());
}

struct SelectFixture {
    dir: tempfile::TempDir,
    config: PathBuf,
    machine: PathBuf,
    sidecar: PathBuf,
}

/// encode + select-seed, leaving the sidecar behind.
fn select_fixture(seed_flag: Option<&str>) -> SelectFixture {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let original = write_test_image(dir.path(), "original.png", 4);
    let machine = dir.path().join("machine.png");
    run_ok(gsdiff()
        .args(["--config", config.to_str().unwrap(), "encode"])
        .arg(&original)
        .arg(&machine));
    let sidecar = dir.path().join("seed.gsds");
    let mut cmd = gsdiff();
    cmd.args(["--config", config.to_str().unwrap()]);
    if let Some(seed) = seed_flag {
        cmd.args(["--seed", seed]);
    }
    cmd.arg("select-seed")
        .arg(&original)
        .arg(&machine)
        .arg(&sidecar);
    run_ok(&mut cmd);
    SelectFixture {
        dir,
        config,
        machine,
        sidecar,
    }
}

#[test]
fn select_seed_writes_fixed_size_sidecar_and_report() {
    let fx = select_fixture(None);
    let bytes = std::fs::read(&fx.sidecar).unwrap();
    assert_eq!(bytes.len(), 23); // 19-byte payload + CRC-32
    let record = gsdiff_core::sidecar::decode_sidecar(&bytes).unwrap();
    assert_eq!(record.total_steps, 8);
    assert_eq!(record.num_candidates, 3);
    assert!(record.selected_index < 3);

    // Repeat invocation: identical sidecar bytes.
    let again = fx.dir.path().join("again.gsds");
    let original = fx.dir.path().join("original.png");
    run_ok(gsdiff()
        .args(["--config", fx.config.to_str().unwrap(), "select-seed"])
        .arg(&original)
        .arg(&fx.machine)
        .arg(&again));
    assert_eq!(bytes, std::fs::read(&again).unwrap());
}

#[test]
fn single_candidate_selects_index_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("one.toml");
    std::fs::write(
        &config,
        r#"
[dataset]
kind = "synthetic"
count = 4
[schedule]
total_steps = 6
beta_end = 0.15
[selection]
num_candidates = 1
truncation_step = 3
truncation_sweep = [3]
"#,
    )
    .unwrap();
    let original = write_test_image(dir.path(), "original.png", 5);
    let machine = dir.path().join("machine.png");
    run_ok(gsdiff()
        .args(["--config", config.to_str().unwrap(), "encode"])
        .arg(&original)
        .arg(&machine));
    let sidecar = dir.path().join("seed.gsds");
    let out = run_ok(gsdiff()
        .args(["--config", config.to_str().unwrap(), "select-seed"])
        .arg(&original)
        .arg(&machine)
        .arg(&sidecar));
    let record = gsdiff_core::sidecar::decode_sidecar(&std::fs::read(&sidecar).unwrap()).unwrap();
    assert_eq!(record.selected_index, 0);
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    assert_eq!(report["chosen_index"], 0);
}

#[test]
fn reconstruct_is_isolated_from_the_original() {
    let fx = select_fixture(Some("12345"));

    // A clean room holding only what the decoder is entitled to: the
    // machine image, the sidecar, and the shared configuration.
    let decoder_room = tempfile::tempdir().unwrap();
    let machine = decoder_room.path().join("machine.png");
    let sidecar = decoder_room.path().join("seed.gsds");
    let config = decoder_room.path().join("config.toml");
    std::fs::copy(&fx.machine, &machine).unwrap();
    std::fs::copy(&fx.sidecar, &sidecar).unwrap();
    std::fs::copy(&fx.config, &config).unwrap();

    let output = decoder_room.path().join("human.png");
    run_ok(gsdiff()
        .current_dir(decoder_room.path())
        .args(["--config", "config.toml", "reconstruct", "machine.png", "seed.gsds", "human.png"]));
    assert!(output.exists());

    // Reconstruction carries the machine image's chroma (in-gamut pixels).
    let human = load_image(&output).unwrap();
    let machine_img = load_image(&machine).unwrap();
    let got = rgb_to_ycbcr(&human);
    let want = rgb_to_ycbcr(&machine_img);
    let close = (0..human.plane_len())
        .filter(|&i| (got.cb[i] - want.cb[i]).abs() < 0.01 && (got.cr[i] - want.cr[i]).abs() < 0.01)
        .count();
    assert!(close * 10 >= human.plane_len() * 8, "{close} of {}", human.plane_len());
}

#[test]
fn full_depth_reconstruction_matches_encoder_side_winner() {
    // With t = T the scored candidate IS the final image; the decoder must
    // reproduce it bit-for-bit after 8-bit quantization.
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("full.toml");
    std::fs::write(
        &config,
        r#"
[dataset]
kind = "synthetic"
count = 5
[schedule]
total_steps = 6
beta_end = 0.15
[selection]
num_candidates = 3
truncation_step = 6
truncation_sweep = [6]
"#,
    )
    .unwrap();
    let original = write_test_image(dir.path(), "original.png", 6);
    let machine = dir.path().join("machine.png");
    run_ok(gsdiff()
        .args(["--config", config.to_str().unwrap(), "encode"])
        .arg(&original)
        .arg(&machine));
    let sidecar = dir.path().join("seed.gsds");
    run_ok(gsdiff()
        .args(["--config", config.to_str().unwrap(), "select-seed"])
        .arg(&original)
        .arg(&machine)
        .arg(&sidecar));
    let decoded_png = dir.path().join("human.png");
    run_ok(gsdiff()
        .args(["--config", config.to_str().unwrap(), "reconstruct"])
        .arg(&machine)
        .arg(&sidecar)
        .arg(&decoded_png));

    // Encoder-side winner, finalized through the library.
    let record =
        gsdiff_core::sidecar::decode_sidecar(&std::fs::read(&sidecar).unwrap()).unwrap();
    let machine_img = load_image(&machine).unwrap();
    let cfg = gsdiff_core::config::ExperimentConfig::load(Some(&config)).unwrap();
    let sched = cfg.schedule.build().unwrap();
    let denoiser = gsdiff_core::experiment::resolve_denoiser(&cfg, 16, 16).unwrap();
    let guidance = gsdiff_core::guidance::GuidanceConfig::new(
        cfg.guidance.weight,
        machine_img.clone(),
        cfg.degradation.clone(),
    )
    .unwrap();
    let seed = gsdiff_core::select::derive_seed(record.base_seed, record.selected_index as u64);
    let expected = gsdiff_core::select::finalize_from_seed(
        seed,
        &machine_img,
        &denoiser,
        Some(&guidance),
        cfg.selection.eta,
        &sched,
    )
    .unwrap();
    let expected_png = dir.path().join("expected.png");
    save_image(&expected_png, &expected).unwrap();
    assert_eq!(
        std::fs::read(&decoded_png).unwrap(),
        std::fs::read(&expected_png).unwrap()
    );
}

#[test]
fn corrupt_and_truncated_sidecars_exit_distinctly() {
    let fx = select_fixture(None);
    let bytes = std::fs::read(&fx.sidecar).unwrap();

    let corrupt = fx.dir.path().join("corrupt.gsds");
    let mut flipped = bytes.clone();
    flipped[6] ^= 0x10;
    std::fs::write(&corrupt, &flipped).unwrap();
    let out = fx.dir.path().join("x.png");
    let code = exit_code(gsdiff()
        .args(["--config", fx.config.to_str().unwrap(), "reconstruct"])
        .arg(&fx.machine)
        .arg(&corrupt)
        .arg(&out));
    assert_eq!(code, 4, "corruption must exit 4");

    let truncated = fx.dir.path().join("short.gsds");
    std::fs::write(&truncated, &bytes[..18]).unwrap();
    let code = exit_code(gsdiff()
        .args(["--config", fx.config.to_str().unwrap(), "reconstruct"])
        .arg(&fx.machine)
        .arg(&truncated)
        .arg(&out));
    assert_eq!(code, 3, "truncation must exit 3");
}

#[test]
fn config_and_io_errors_use_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "[selection]\nnum_candidates = 0\n").unwrap();
    let input = write_test_image(dir.path(), "in.png", 7);
    let out = dir.path().join("out.png");
    let code = exit_code(gsdiff()
        .args(["--config", bad_cfg.to_str().unwrap(), "encode"])
        .arg(&input)
        .arg(&out));
    assert_eq!(code, 2, "config error must exit 2");

    let code = exit_code(gsdiff().args(["encode", "/nonexistent/in.png"]).arg(&out));
    assert_eq!(code, 3, "missing input must exit 3");
}

#[test]
fn metrics_reports_cap_for_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_test_image(dir.path(), "a.png", 8);
    let out = run_ok(gsdiff().arg("metrics").arg(&a).arg(&a));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["psnr_db"], 100.0);
    assert_eq!(v["y_psnr_db"], 100.0);
    assert_eq!(v["ssim"], 1.0);
    assert_eq!(v["lpips"], "not computed");
}

#[test]
fn metrics_matches_library_calls() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_test_image(dir.path(), "a.png", 9);
    let b = write_test_image(dir.path(), "b.png", 10);
    let out = run_ok(gsdiff().arg("metrics").arg(&a).arg(&b));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let report = gsdiff_core::metrics::MetricReport::between(
        &load_image(&a).unwrap(),
        &load_image(&b).unwrap(),
    )
    .unwrap();
    assert_eq!(v["psnr_db"].as_f64().unwrap(), report.psnr_db);
    assert_eq!(v["y_psnr_db"].as_f64().unwrap(), report.y_psnr_db);
    assert_eq!(v["ssim"].as_f64().unwrap(), report.ssim);
}

#[test]
fn metrics_geometry_mismatch_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_test_image(dir.path(), "a.png", 11);
    let small = synth_dataset(PatternKind::Mixed, 1, 12, 12, 0.0, 12).unwrap();
    let b = dir.path().join("b.png");
    save_image(&b, &small.images[0]).unwrap();
    let code = exit_code(gsdiff().arg("metrics").arg(&a).arg(&b));
    assert_eq!(code, 2);
}

#[test]
fn experiment_writes_reports_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(
        &config,
        r#"
[dataset]
kind = "synthetic"
count = 2
height = 12
width = 12

[schedule]
total_steps = 6
beta_end = 0.15

[selection]
num_candidates = 2
truncation_step = 3
truncation_sweep = [3, 6]

[experiment]
trials = 2
master_seed = 5
"#,
    )
    .unwrap();

    let out_dir = dir.path().join("run");
    run_ok(gsdiff()
        .args(["--config", config.to_str().unwrap()])
        .args(["--output-dir", out_dir.to_str().unwrap()])
        .arg("experiment"));
    let report_a = std::fs::read(out_dir.join("report.json")).unwrap();
    let csv_a = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(csv_a.starts_with("trial,strategy,mean_psnr_db,mean_y_psnr_db,mean_ssim,agreement_rate"));

    // Full-depth agreement is exact in the flat table.
    for line in csv_a.lines().filter(|l| l.contains("select_t6")) {
        assert!(line.trim_end().ends_with("1.000000"), "line: {line}");
    }

    // Same config file, same output: the rerun must be byte-identical.
    run_ok(gsdiff()
        .args(["--config", config.to_str().unwrap()])
        .args(["--output-dir", out_dir.to_str().unwrap()])
        .arg("experiment"));
    let report_b = std::fs::read(out_dir.join("report.json")).unwrap();
    assert_eq!(report_a, report_b, "experiment reports must be byte-identical");
    let csv_b = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
}

#[test]
fn worker_count_never_changes_output_bytes() {
    let fx = select_fixture(None);
    let original = fx.dir.path().join("original.png");
    let single = fx.dir.path().join("single.gsds");
    run_ok(gsdiff()
        .args(["--config", fx.config.to_str().unwrap(), "--workers", "1", "select-seed"])
        .arg(&original)
        .arg(&fx.machine)
        .arg(&single));
    assert_eq!(
        std::fs::read(&fx.sidecar).unwrap(),
        std::fs::read(&single).unwrap()
    );
}

#[test]
fn one_image_one_candidate_equalizes_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(
        &config,
        r#"
[dataset]
kind = "synthetic"
count = 1
height = 12
width = 12

[schedule]
total_steps = 4
beta_end = 0.12

[selection]
num_candidates = 1
truncation_step = 2
truncation_sweep = [2, 4]
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run_ok(gsdiff()
        .args(["--config", config.to_str().unwrap()])
        .args(["--output-dir", out_dir.to_str().unwrap()])
        .arg("experiment"));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let aggregate = v["aggregate"].as_array().unwrap();
    let baseline = &aggregate[0];
    for row in aggregate {
        assert_eq!(row["mean_y_psnr_db"], baseline["mean_y_psnr_db"]);
        assert_eq!(row["mean_psnr_db"], baseline["mean_psnr_db"]);
        assert_eq!(row["mean_ssim"], baseline["mean_ssim"]);
    }
}
