//! Isotropic Gaussian mixtures and their exact denoiser.
//!
//! With `z0` drawn from the mixture and `z_t = sqrt(ab)·z0 + sqrt(1 - ab)·ε`,
//! component `i` makes `z_t` Gaussian with mean `sqrt(ab)·μ_i` and per-axis
//! variance `v_i = ab·s_i² + 1 - ab`, and
//!
//! ```text
//! E[z0 | z_t, i] = (sqrt(ab)·s_i²·z_t + (1 - ab)·μ_i) / v_i
//! ```
//!
//! The posterior mean is the responsibility-weighted sum of those.

use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Per-axis standard deviation; 0 makes the component a point mass.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mixture {
    pub dim: usize,
    pub components: Vec<Component>,
}

impl Mixture {
    pub fn new(dim: usize, components: Vec<Component>) -> Result<Self> {
        let m = Mixture { dim, components };
        m.validate()?;
        Ok(m)
    }

    /// Equal-weight mixture with one component per point.
    pub fn empirical(points: &[Vec<f64>], std: f64) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        let weight = 1.0 / points.len() as f64;
        Mixture::new(
            dim,
            points
                .iter()
                .map(|p| Component {
                    weight,
                    mean: p.clone(),
                    std,
                })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::validation("mixture dimension must be positive"));
        }
        if self.components.is_empty() {
            return Err(Error::validation("mixture needs at least one component"));
        }
        for (i, c) in self.components.iter().enumerate() {
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::validation(format!(
                    "component {i}: weight must be positive"
                )));
            }
            if !(c.std >= 0.0 && c.std.is_finite()) {
                return Err(Error::validation(format!(
                    "component {i}: std must be finite and nonnegative"
                )));
            }
            if c.mean.len() != self.dim {
                return Err(Error::validation(format!(
                    "component {i}: mean has dimension {}, expected {}",
                    c.mean.len(),
                    self.dim
                )));
            }
            if c.mean.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(format!(
                    "component {i}: mean is not finite"
                )));
            }
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Mixture = serde_json::from_str(text)
            .map_err(|e| Error::validation(format!("mixture config: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// One draw from the mixture.
    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = self.components.last().expect("validated");
        for c in &self.components {
            acc += c.weight;
            if u < acc {
                chosen = c;
                break;
            }
        }
        chosen
            .mean
            .iter()
            .map(|&m| m + chosen.std * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// Mean of the mixture.
    pub fn mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for c in &self.components {
            for (o, m) in out.iter_mut().zip(&c.mean) {
                *o += c.weight * m;
            }
        }
        out
    }

    /// `E[z0 | z_t]` under the forward process at noise level `alpha_bar`.
    pub fn posterior_mean_at(&self, z_t: &[f64], alpha_bar: f64) -> Result<Vec<f64>> {
        if z_t.len() != self.dim {
            return Err(Error::domain(format!(
                "dimension mismatch: {} vs {}",
                z_t.len(),
                self.dim
            )));
        }
        let root = alpha_bar.sqrt();
        let d = self.dim as f64;
        let mut log_resp = Vec::with_capacity(self.components.len());
        let mut variances = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let var = alpha_bar * c.std * c.std + (1.0 - alpha_bar);
            if var <= 0.0 {
                return Err(Error::domain("noise-free point mass has no density"));
            }
            let sq: f64 = z_t
                .iter()
                .zip(&c.mean)
                .map(|(z, m)| (z - root * m).powi(2))
                .sum();
            log_resp.push(
                c.weight.ln() - 0.5 * d * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * sq / var,
            );
            variances.push(var);
        }
        let max = log_resp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_resp.iter().map(|l| (l - max).exp()).collect();
        let norm: f64 = weights.iter().sum();

        let mut out = vec![0.0; self.dim];
        for ((c, &w), &var) in self.components.iter().zip(&weights).zip(&variances) {
            let r = w / norm;
            if r == 0.0 {
                continue;
            }
            let gain = root * c.std * c.std / var;
            let prior = (1.0 - alpha_bar) / var;
            for ((o, z), m) in out.iter_mut().zip(z_t).zip(&c.mean) {
                *o += r * (gain * z + prior * m);
            }
        }
        Ok(out)
    }
}

/// Exact denoiser for step `t` of `schedule`.
pub fn gmm_posterior_mean(
    z_t: &[f64],
    t: usize,
    mixture: &Mixture,
    schedule: &NoiseSchedule,
) -> Result<Vec<f64>> {
    if t == 0 || t > schedule.steps() {
        return Err(Error::domain(format!(
            "step {t} outside 1..={}",
            schedule.steps()
        )));
    }
    mixture.posterior_mean_at(z_t, schedule.alpha_bar(t))
}
