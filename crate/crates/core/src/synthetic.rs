//! Synthetic original/pool datasets with a known difficulty bias.
//!
//! Original difficulties follow `Beta(2, 5)`; pool difficulties follow the
//! much easier `Beta(1, 8)`, the typical shape of a generated image pool.

use rand::Rng as _;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::distribution::{histogram, DifficultyHistogram};
use crate::error::{Error, Result};
use crate::manifest::{Item, Manifest, Role};
use crate::rng::{substream, Rng, StreamKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub classes: usize,
    pub original_per_class: usize,
    pub ipc: u64,
    /// Pool size per class as a multiple of `ipc`.
    pub pool_factor: u64,
    pub original_beta: (f64, f64),
    pub pool_beta: (f64, f64),
    /// 0 for no latents.
    pub latent_dim: usize,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            classes: 10,
            original_per_class: 500,
            ipc: 50,
            pool_factor: 5,
            original_beta: (2.0, 5.0),
            pool_beta: (1.0, 8.0),
            latent_dim: 0,
            seed: 0,
        }
    }
}

/// Histograms recorded while generating, one per class in label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureTruth {
    pub spec: FixtureSpec,
    pub original: Vec<DifficultyHistogram>,
    pub pool: Vec<DifficultyHistogram>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub original: Manifest,
    pub pool: Manifest,
    pub truth: FixtureTruth,
}

pub fn class_label(c: usize) -> String {
    format!("class{c:02}")
}

/// Latent whose first axis tracks difficulty and whose remaining axes carry
/// a class offset plus noise.
fn latent(rng: &mut Rng, dim: usize, class: usize, difficulty: f64) -> Vec<f64> {
    (0..dim)
        .map(|axis| {
            let noise: f64 = rng.sample(StandardNormal);
            if axis == 0 {
                4.0 * difficulty + 0.2 * noise
            } else {
                let offset = if (class + axis).is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                offset + 0.5 * noise
            }
        })
        .collect()
}

fn draw_class(
    seed: u64,
    role: &str,
    class: usize,
    count: usize,
    shape: (f64, f64),
    dim: usize,
) -> Result<Vec<Item>> {
    let beta =
        Beta::new(shape.0, shape.1).map_err(|e| Error::domain(format!("beta{shape:?}: {e}")))?;
    let label = class_label(class);
    let mut rng = substream(
        seed,
        &StreamKey::new("fixture").part(role).index(class as u64),
    );
    (0..count)
        .map(|i| {
            let d: f64 = beta.sample(&mut rng);
            let mut item =
                Item::from_difficulty(format!("{role}/{label}/{i:05}"), label.clone(), d)?;
            if dim > 0 {
                item = item.with_latent(latent(&mut rng, dim, class, d));
            }
            Ok(item)
        })
        .collect()
}

pub fn generate(spec: &FixtureSpec) -> Result<Fixture> {
    if spec.classes == 0 || spec.original_per_class == 0 || spec.ipc == 0 || spec.pool_factor == 0 {
        return Err(Error::domain("fixture sizes must be positive"));
    }
    let pool_per_class = (spec.ipc * spec.pool_factor) as usize;
    let mut original = Vec::new();
    let mut pool = Vec::new();
    let mut truth_original = Vec::new();
    let mut truth_pool = Vec::new();
    for c in 0..spec.classes {
        let o = draw_class(
            spec.seed,
            "original",
            c,
            spec.original_per_class,
            spec.original_beta,
            spec.latent_dim,
        )?;
        let p = draw_class(
            spec.seed,
            "pool",
            c,
            pool_per_class,
            spec.pool_beta,
            spec.latent_dim,
        )?;
        truth_original.push(histogram(class_label(c), o.iter().map(|it| it.difficulty))?);
        truth_pool.push(histogram(class_label(c), p.iter().map(|it| it.difficulty))?);
        original.extend(o);
        pool.extend(p);
    }
    Ok(Fixture {
        original: Manifest::new(original, Role::Original)?,
        pool: Manifest::new(pool, Role::Pool)?,
        truth: FixtureTruth {
            spec: spec.clone(),
            original: truth_original,
            pool: truth_pool,
        },
    })
}
