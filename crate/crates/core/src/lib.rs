//! Difficulty-guided sampling (DGS) and difficulty-aware guidance (DAG) for
//! dataset distillation.
//!
//! The crate works on difficulty-annotated manifests: every item carries the
//! probability a pretrained classifier gives its true class, or the
//! difficulty `1 - p` directly.
//!
//! * [`distribution`] bins difficulties into ten intervals and turns
//!   histograms into per-class sampling plans.
//! * [`smoothing`] spreads clustered difficulty values with a clipped,
//!   variable-base log transform whose thresholds are picked by a KL search.
//! * [`sampler`] draws a distilled subset from an oversized image pool so
//!   that its difficulty histogram follows the plan.
//! * [`metrics`] scores representativeness, diversity and difficulty bias.
//! * [`dag`] clusters latents per difficulty interval and steers a toy
//!   reverse-diffusion sampler toward the cluster centers.
//!
//! The `examples/` directory has one runnable program per capability and the
//! `dgs` binary exposes the pipeline on files.

pub mod cli;
pub mod config;
pub mod dag;
pub mod distribution;
pub mod error;
pub mod manifest;
pub mod metrics;
pub mod plot;
pub mod rng;
pub mod sampler;
pub mod smoothing;
pub mod synthetic;

pub use error::{Error, Result};
pub use manifest::{load_manifest, write_manifest, Item, Manifest, Role};
