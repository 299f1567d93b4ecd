//! Synthetic pattern datasets.
//!
//! Desk-scale stand-in for a large photographic corpus: structured images
//! (gradients, stripes, disks, and compositions) drawn deterministically
//! from a master seed. Each call yields an evaluation set and a disjoint
//! same-distribution reference set; the reference set backs the empirical
//! denoiser, so evaluation images are always held out.

use crate::denoiser::DenoiserSpec;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::TrajectoryRng;
use crate::select::derive_seed;

/// Derivation index of the evaluation stream under the master seed.
const EVAL_STREAM: u64 = 0;
/// Derivation index of the denoiser-reference stream.
const REFERENCE_STREAM: u64 = 1;

/// Pattern family to draw from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Gradient,
    Stripes,
    Disks,
    /// Gradient base with stripe and disk overlays; the default.
    #[default]
    Mixed,
}

/// A generated evaluation set plus the denoiser built from its disjoint
/// reference split.
pub struct SynthDataset {
    pub images: Vec<Image>,
    pub denoiser: DenoiserSpec,
}

/// Generate `count` evaluation images and a matching empirical denoiser
/// over `count` held-out references. Pure function of `master_seed`.
pub fn synth_dataset(
    kind: PatternKind,
    count: usize,
    height: usize,
    width: usize,
    noise_level: f64,
    master_seed: u64,
) -> Result<SynthDataset> {
    synth_dataset_with_refs(kind, count, count, height, width, noise_level, master_seed)
}

/// As [`synth_dataset`], with an explicit reference-set size.
pub fn synth_dataset_with_refs(
    kind: PatternKind,
    count: usize,
    reference_count: usize,
    height: usize,
    width: usize,
    noise_level: f64,
    master_seed: u64,
) -> Result<SynthDataset> {
    if count < 1 {
        return Err(Error::config("count", "must be at least 1"));
    }
    if reference_count < 1 {
        return Err(Error::config("reference_count", "must be at least 1"));
    }
    if height < 11 || width < 11 {
        return Err(Error::config(
            "geometry",
            format!("must be at least 11x11 for metric windows, got {height}x{width}"),
        ));
    }
    if !noise_level.is_finite() || noise_level < 0.0 {
        return Err(Error::config("noise_level", "must be finite and >= 0"));
    }

    let images = synth_images(
        kind,
        count,
        height,
        width,
        noise_level,
        derive_seed(master_seed, EVAL_STREAM),
    );
    let references = synth_references(kind, reference_count, height, width, noise_level, master_seed);
    Ok(SynthDataset {
        images,
        denoiser: DenoiserSpec::empirical(references)?,
    })
}

/// The reference split on its own, e.g. to rebuild the decoder-side
/// denoiser at the geometry of a loaded image. Uses a stream disjoint from
/// the evaluation images', so references are independent of the evaluation
/// count.
pub fn synth_references(
    kind: PatternKind,
    reference_count: usize,
    height: usize,
    width: usize,
    noise_level: f64,
    master_seed: u64,
) -> Vec<Image> {
    synth_images(
        kind,
        reference_count,
        height,
        width,
        noise_level,
        derive_seed(master_seed, REFERENCE_STREAM),
    )
}

/// One deterministic stream of pattern images.
fn synth_images(
    kind: PatternKind,
    count: usize,
    height: usize,
    width: usize,
    noise_level: f64,
    stream_seed: u64,
) -> Vec<Image> {
    let mut rng = TrajectoryRng::seed_from(stream_seed);
    (0..count)
        .map(|_| pattern_image(kind, height, width, noise_level, &mut rng))
        .collect()
}

fn pattern_image(
    kind: PatternKind,
    height: usize,
    width: usize,
    noise_level: f64,
    rng: &mut TrajectoryRng,
) -> Image {
    let mut img = match kind {
        PatternKind::Gradient => gradient(height, width, rng),
        PatternKind::Stripes => {
            let mut base = flat(height, width, rng);
            overlay_stripes(&mut base, rng);
            base
        }
        PatternKind::Disks => {
            let mut base = flat(height, width, rng);
            for _ in 0..2 + (rng.next_u64() % 3) {
                overlay_disk(&mut base, rng);
            }
            base
        }
        PatternKind::Mixed => {
            let mut base = gradient(height, width, rng);
            overlay_stripes(&mut base, rng);
            for _ in 0..1 + (rng.next_u64() % 3) {
                overlay_disk(&mut base, rng);
            }
            base
        }
    };
    if noise_level > 0.0 {
        let mut noise = vec![0.0; img.sample_count()];
        rng.fill_standard_normal(&mut noise);
        for (v, n) in img.data_mut().iter_mut().zip(noise.iter()) {
            *v += noise_level * n;
        }
    }
    img.clamp01()
}

fn random_color(rng: &mut TrajectoryRng) -> [f64; 3] {
    [
        rng.next_unit_open(),
        rng.next_unit_open(),
        rng.next_unit_open(),
    ]
}

fn flat(height: usize, width: usize, rng: &mut TrajectoryRng) -> Image {
    let color = random_color(rng);
    Image::from_fn(height, width, |c, _, _| color[c])
}

fn gradient(height: usize, width: usize, rng: &mut TrajectoryRng) -> Image {
    let a = random_color(rng);
    let b = random_color(rng);
    let angle = 2.0 * std::f64::consts::PI * rng.next_unit_open();
    let (dy, dx) = (angle.sin(), angle.cos());
    let diag = ((height * height + width * width) as f64).sqrt();
    Image::from_fn(height, width, |c, y, x| {
        let proj = (y as f64 * dy + x as f64 * dx) / diag + 0.5;
        let s = proj.clamp(0.0, 1.0);
        a[c] + (b[c] - a[c]) * s
    })
}

fn overlay_stripes(img: &mut Image, rng: &mut TrajectoryRng) {
    let color = random_color(rng);
    let freq = 0.2 + 0.8 * rng.next_unit_open();
    let phase = 2.0 * std::f64::consts::PI * rng.next_unit_open();
    let angle = 2.0 * std::f64::consts::PI * rng.next_unit_open();
    let (dy, dx) = (angle.sin(), angle.cos());
    let strength = 0.3 + 0.5 * rng.next_unit_open();
    let (h, w) = (img.height(), img.width());
    for y in 0..h {
        for x in 0..w {
            let wave = ((y as f64 * dy + x as f64 * dx) * freq + phase).sin();
            let alpha = strength * 0.5 * (1.0 + wave);
            for (c, &col) in color.iter().enumerate() {
                let v = img.get(c, y, x);
                img.set(c, y, x, v + alpha * (col - v));
            }
        }
    }
}

fn overlay_disk(img: &mut Image, rng: &mut TrajectoryRng) {
    let color = random_color(rng);
    let (h, w) = (img.height(), img.width());
    let cy = rng.next_unit_open() * h as f64;
    let cx = rng.next_unit_open() * w as f64;
    let radius = (0.1 + 0.25 * rng.next_unit_open()) * h.min(w) as f64;
    for y in 0..h {
        for x in 0..w {
            let d2 = (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2);
            if d2 <= radius * radius {
                for (c, &col) in color.iter().enumerate() {
                    img.set(c, y, x, col);
                }
            }
        }
    }
}
