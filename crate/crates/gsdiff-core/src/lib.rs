//! Seeded guided-diffusion reconstruction with early-step seed selection.
//!
//! Machine-oriented codecs keep what recognition models need and discard
//! what human viewers want. This crate reconstructs a human-viewable image
//! from the machine-oriented one by running a seeded reverse-diffusion
//! sampler conditioned on it, and improves quality at zero bitrate cost by
//! trying several seeds, scoring truncated intermediate outputs against
//! the original with luma PSNR, and transmitting only the winning seed in
//! a fixed-size sidecar. The decoder re-derives the seed, replays the full
//! trajectory, and restores color fidelity with a luminance-preserving
//! chroma merge.
//!
//! Everything is deterministic: trajectories are pure functions of their
//! seed, checkpoints resume bit-exactly, and parallel and sequential
//! evaluation produce identical bytes.

pub mod color;
pub mod config;
pub mod dataset;
pub mod degrade;
pub mod denoiser;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod guidance;
pub mod image;
pub mod metrics;
pub mod pngio;
pub mod rng;
pub mod sampler;
pub mod schedule;
pub mod select;
pub mod sidecar;
pub mod stats;

pub use error::{Error, Result};
pub use image::Image;
