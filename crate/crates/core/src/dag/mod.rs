//! Difficulty-aware guidance.
//!
//! Each class of the original dataset is split by difficulty interval and
//! clustered into as many centers as the scaled sampling plan gives that
//! interval. Every center then steers one reverse-diffusion run through
//!
//! ```text
//! ẑ = z + λ_gui · (z_c − z) · σ_t
//! ```
//!
//! applied while `t ≥ t_stop`. A Gaussian-mixture model with an exact
//! posterior-mean denoiser stands in for a trained diffusion network.

pub mod kmeans;
pub mod mixture;
pub mod schedule;

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng as _, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use kmeans::{
    interval_kmeans, kmeans, lloyd, Center, ClusterParams, IntervalCenters, KMeansFit,
};
pub use mixture::{gmm_posterior_mean, Component, Mixture};
pub use schedule::{forward_diffuse, NoiseSchedule};

use crate::distribution::{histogram, scale_to_ipc};
use crate::error::{Error, Result};
use crate::manifest::{Item, Manifest, Role};
use crate::rng::{substream, Rng, StreamKey};

/// Stop timestep used when none is given.
pub const DEFAULT_T_STOP: usize = 25;

/// Which noise level multiplies the guidance term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SigmaKind {
    /// Standard deviation of the reverse step.
    #[default]
    Posterior,
    /// `sqrt(1 - alpha_bar(t))`.
    Marginal,
}

impl FromStr for SigmaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "posterior" => Ok(SigmaKind::Posterior),
            "marginal" => Ok(SigmaKind::Marginal),
            _ => Err(Error::domain(format!("unknown sigma kind {s:?}"))),
        }
    }
}

/// What the guidance step moves toward the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GuidanceTarget {
    /// The denoiser's clean-sample prediction.
    #[default]
    Predicted,
    /// The noisy latent before denoising.
    Noisy,
}

impl FromStr for GuidanceTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predicted" => Ok(GuidanceTarget::Predicted),
            "noisy" => Ok(GuidanceTarget::Noisy),
            _ => Err(Error::domain(format!("unknown guidance target {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceSpec {
    pub center: Vec<f64>,
    pub lambda_gui: f64,
    /// Guidance runs for `t >= t_stop`; `T + 1` switches it off.
    pub t_stop: usize,
    #[serde(default)]
    pub sigma: SigmaKind,
    #[serde(default)]
    pub target: GuidanceTarget,
}

impl GuidanceSpec {
    pub fn new(center: Vec<f64>, lambda_gui: f64, t_stop: usize) -> Self {
        GuidanceSpec {
            center,
            lambda_gui,
            t_stop,
            sigma: SigmaKind::default(),
            target: GuidanceTarget::default(),
        }
    }

    pub fn active(&self, t: usize) -> bool {
        t >= self.t_stop
    }

    fn check(&self, schedule: &NoiseSchedule, dim: usize) -> Result<()> {
        if !(self.lambda_gui >= 0.0 && self.lambda_gui.is_finite()) {
            return Err(Error::domain(format!(
                "lambda_gui {} must be nonnegative",
                self.lambda_gui
            )));
        }
        if self.t_stop > schedule.steps() + 1 {
            return Err(Error::domain(format!(
                "t_stop {} outside 0..={}",
                self.t_stop,
                schedule.steps() + 1
            )));
        }
        if self.center.len() != dim {
            return Err(Error::domain(format!(
                "center has dimension {}, mixture {dim}",
                self.center.len()
            )));
        }
        Ok(())
    }

    fn sigma_at(&self, schedule: &NoiseSchedule, t: usize) -> f64 {
        match self.sigma {
            SigmaKind::Posterior => schedule.posterior_std(t),
            SigmaKind::Marginal => schedule.marginal_std(t),
        }
    }
}

/// `z + λ_gui·(z_c − z)·σ_t`.
pub fn guide(z: &[f64], spec: &GuidanceSpec, sigma_t: f64) -> Result<Vec<f64>> {
    if z.len() != spec.center.len() {
        return Err(Error::domain(format!(
            "dimension mismatch: {} vs {}",
            z.len(),
            spec.center.len()
        )));
    }
    let scale = spec.lambda_gui * sigma_t;
    Ok(z.iter()
        .zip(&spec.center)
        .map(|(x, c)| x + scale * (c - x))
        .collect())
}

/// States of one reverse run, from `t = T` down to `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<(usize, Vec<f64>)>,
}

impl Trajectory {
    pub fn final_sample(&self) -> &[f64] {
        &self.states.last().expect("non-empty trajectory").1
    }

    /// CSV with a `t` column followed by one column per coordinate.
    pub fn to_csv(&self) -> String {
        let dim = self.states.first().map_or(0, |s| s.1.len());
        let mut out = String::from("t");
        for i in 0..dim {
            write!(out, ",z{i}").expect("string write");
        }
        out.push('\n');
        for (t, z) in &self.states {
            write!(out, "{t}").expect("string write");
            for x in z {
                write!(out, ",{x}").expect("string write");
            }
            out.push('\n');
        }
        out
    }
}

fn gaussian(rng: &mut Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Ancestral sampling from pure noise with the mixture's exact denoiser and
/// optional guidance. Deterministic in `seed`.
pub fn reverse_sample(
    schedule: &NoiseSchedule,
    mixture: &Mixture,
    guidance: Option<&GuidanceSpec>,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = substream(seed, &StreamKey::new("dag/reverse"));
    reverse_sample_with(schedule, mixture, guidance, &mut rng)
}

pub fn reverse_sample_with(
    schedule: &NoiseSchedule,
    mixture: &Mixture,
    guidance: Option<&GuidanceSpec>,
    rng: &mut Rng,
) -> Result<Trajectory> {
    mixture.validate()?;
    if let Some(g) = guidance {
        g.check(schedule, mixture.dim)?;
    }
    let steps = schedule.steps();
    let mut z = gaussian(rng, mixture.dim);
    let mut states = Vec::with_capacity(steps + 1);
    states.push((steps, z.clone()));
    for t in (1..=steps).rev() {
        let active = guidance.filter(|g| g.active(t));
        if let Some(g) = active.filter(|g| g.target == GuidanceTarget::Noisy) {
            z = guide(&z, g, g.sigma_at(schedule, t))?;
        }
        let mut clean = gmm_posterior_mean(&z, t, mixture, schedule)?;
        if let Some(g) = active.filter(|g| g.target == GuidanceTarget::Predicted) {
            clean = guide(&clean, g, g.sigma_at(schedule, t))?;
        }
        let (a, b) = schedule.posterior_mean_coefs(t);
        let mut next: Vec<f64> = clean.iter().zip(&z).map(|(c, x)| a * c + b * x).collect();
        if t > 1 {
            let std = schedule.posterior_std(t);
            for (n, e) in next.iter_mut().zip(gaussian(rng, mixture.dim)) {
                *n += std * e;
            }
        }
        z = next;
        states.push((t - 1, z.clone()));
    }
    Ok(Trajectory { states })
}

/// Where the per-class denoising model comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MixtureSource {
    /// One mixture shared by every class.
    Shared(Mixture),
    /// Equal-weight components centred on each original latent of the class.
    Empirical { std: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DagConfig {
    pub ipc: u64,
    pub lambda_gui: f64,
    pub t_stop: usize,
    pub sigma: SigmaKind,
    pub target: GuidanceTarget,
    pub schedule: NoiseSchedule,
    pub mixture: MixtureSource,
    pub cluster: ClusterParams,
}

impl DagConfig {
    pub fn new(ipc: u64, lambda_gui: f64) -> Self {
        DagConfig {
            ipc,
            lambda_gui,
            t_stop: DEFAULT_T_STOP,
            sigma: SigmaKind::default(),
            target: GuidanceTarget::default(),
            schedule: NoiseSchedule::default(),
            mixture: MixtureSource::Empirical { std: 0.1 },
            cluster: ClusterParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassClusters {
    pub label: String,
    pub targets: [u64; crate::distribution::INTERVALS],
    pub intervals: Vec<IntervalCenters>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DagOutput {
    pub generated: Manifest,
    pub clusters: Vec<ClassClusters>,
}

/// Scaled plan and interval centers for every class of `original`.
pub fn cluster_dataset(
    original: &Manifest,
    ipc: u64,
    params: &ClusterParams,
) -> Result<Vec<ClassClusters>> {
    if original.latent_dim == 0 {
        return Err(Error::validation("manifest carries no latents"));
    }
    original
        .by_label()
        .into_iter()
        .map(|(label, items)| {
            let hist = histogram(label, items.iter().map(|it| it.difficulty))?;
            let plan = scale_to_ipc(&hist, ipc)?;
            Ok(ClassClusters {
                label: label.to_string(),
                targets: plan.targets,
                intervals: interval_kmeans(&items, &plan, params)?,
            })
        })
        .collect()
}

/// Generates `ipc` latents per class, one guided reverse run per center.
/// Each generated item records its interval, its center and, as its
/// difficulty, the mean difficulty of the center's members.
pub fn dag_run(original: &Manifest, config: &DagConfig) -> Result<DagOutput> {
    let clusters = cluster_dataset(original, config.ipc, &config.cluster)?;
    let by_label = original.by_label();
    let mut generated = Vec::new();
    for class in &clusters {
        let mixture = match &config.mixture {
            MixtureSource::Shared(m) => m.clone(),
            MixtureSource::Empirical { std } => {
                let points: Vec<Vec<f64>> = by_label[class.label.as_str()]
                    .iter()
                    .map(|it| it.latent.clone().expect("checked by clustering"))
                    .collect();
                Mixture::empirical(&points, *std)?
            }
        };
        for interval in &class.intervals {
            for (j, center) in interval.centers.iter().enumerate() {
                let spec = GuidanceSpec {
                    center: center.vector.clone(),
                    lambda_gui: config.lambda_gui,
                    t_stop: config.t_stop,
                    sigma: config.sigma,
                    target: config.target,
                };
                let run_seed = substream(
                    config.cluster.seed,
                    &StreamKey::new("dag/center")
                        .part(&class.label)
                        .index(interval.interval as u64)
                        .index(j as u64),
                )
                .next_u64();
                let trajectory = reverse_sample(&config.schedule, &mixture, Some(&spec), run_seed)?;
                let mut item = Item::from_difficulty(
                    format!("{}/dag/{}/{j}", class.label, interval.interval),
                    class.label.clone(),
                    center.mean_difficulty,
                )?
                .with_latent(trajectory.final_sample().to_vec());
                item.interval = Some(interval.interval);
                item.center = Some(center.id.clone());
                generated.push(item);
            }
        }
    }
    Ok(DagOutput {
        generated: Manifest::new(generated, Role::Distilled)?,
        clusters,
    })
}
