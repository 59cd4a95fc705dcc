use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_STEPS: usize = 50;
pub const DEFAULT_TRAIN_STEPS: usize = 1000;
pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 0.02;

/// Discrete variance schedule indexed by step `t = 1..=T`, with `alpha_bar(0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    /// `steps` betas spaced linearly from `beta_start` to `beta_end`.
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        check_betas(steps, beta_start, beta_end)?;
        let betas = (0..steps)
            .map(|i| {
                if steps == 1 {
                    beta_start
                } else {
                    beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64
                }
            })
            .collect();
        Self::from_betas(betas)
    }

    /// A `train_steps` linear schedule sampled at `steps` evenly spaced
    /// timesteps, the usual way a model trained with many steps is run with
    /// few. Step `i` maps to training timestep `round(i · train_steps / steps)`,
    /// and its beta is chosen so the cumulative products agree there.
    pub fn respaced_linear(
        train_steps: usize,
        steps: usize,
        beta_start: f64,
        beta_end: f64,
    ) -> Result<Self> {
        if steps == 0 || steps > train_steps {
            return Err(Error::domain(format!(
                "cannot respace {train_steps} steps to {steps}"
            )));
        }
        let base = Self::linear(train_steps, beta_start, beta_end)?;
        let mut betas = Vec::with_capacity(steps);
        let mut prev = 1.0;
        for i in 1..=steps {
            let tau = ((i * train_steps) as f64 / steps as f64).round() as usize;
            let ab = base.alpha_bar[tau];
            betas.push(1.0 - ab / prev);
            prev = ab;
        }
        Self::from_betas(betas)
    }

    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::domain("schedule needs at least one step"));
        }
        if betas.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(Error::domain("every beta must lie in (0, 1)"));
        }
        let mut alpha_bar = Vec::with_capacity(betas.len() + 1);
        alpha_bar.push(1.0);
        for &b in &betas {
            let last = *alpha_bar.last().expect("non-empty");
            alpha_bar.push(last * (1.0 - b));
        }
        Ok(NoiseSchedule { betas, alpha_bar })
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.check_step(t);
        self.betas[t - 1]
    }

    /// Cumulative product of `1 - beta` up to step `t`; 1 at `t = 0`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        assert!(t <= self.steps(), "step {t} outside 0..={}", self.steps());
        self.alpha_bar[t]
    }

    /// Standard deviation of the reverse step `t -> t-1` given the clean sample.
    pub fn posterior_std(&self, t: usize) -> f64 {
        let var = self.beta(t) * (1.0 - self.alpha_bar[t - 1]) / (1.0 - self.alpha_bar[t]);
        var.max(0.0).sqrt()
    }

    /// `sqrt(1 - alpha_bar(t))`, the noise level of the forward marginal.
    pub fn marginal_std(&self, t: usize) -> f64 {
        self.check_step(t);
        (1.0 - self.alpha_bar[t]).sqrt()
    }

    /// Coefficients `(a, b)` with `E[z_{t-1} | z_t, z_0] = a·z_0 + b·z_t`.
    pub fn posterior_mean_coefs(&self, t: usize) -> (f64, f64) {
        let beta = self.beta(t);
        let ab = self.alpha_bar[t];
        let ab_prev = self.alpha_bar[t - 1];
        (
            ab_prev.sqrt() * beta / (1.0 - ab),
            (1.0 - beta).sqrt() * (1.0 - ab_prev) / (1.0 - ab),
        )
    }

    fn check_step(&self, t: usize) {
        assert!(
            (1..=self.steps()).contains(&t),
            "step {t} outside 1..={}",
            self.steps()
        );
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        NoiseSchedule::respaced_linear(
            DEFAULT_TRAIN_STEPS,
            DEFAULT_STEPS,
            DEFAULT_BETA_START,
            DEFAULT_BETA_END,
        )
        .expect("valid default schedule")
    }
}

fn check_betas(steps: usize, start: f64, end: f64) -> Result<()> {
    if steps == 0 {
        return Err(Error::domain("schedule needs at least one step"));
    }
    for b in [start, end] {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::domain(format!("beta {b} must lie in (0, 1)")));
        }
    }
    Ok(())
}

/// `sqrt(alpha_bar(t))·z0 + sqrt(1 - alpha_bar(t))·noise`.
pub fn forward_diffuse(
    z0: &[f64],
    t: usize,
    schedule: &NoiseSchedule,
    noise: &[f64],
) -> Result<Vec<f64>> {
    if t == 0 || t > schedule.steps() {
        return Err(Error::domain(format!(
            "step {t} outside 1..={}",
            schedule.steps()
        )));
    }
    diffuse_with(z0, schedule.alpha_bar(t), noise)
}

pub(crate) fn diffuse_with(z0: &[f64], alpha_bar: f64, noise: &[f64]) -> Result<Vec<f64>> {
    if z0.len() != noise.len() {
        return Err(Error::domain(format!(
            "dimension mismatch: {} vs {}",
            z0.len(),
            noise.len()
        )));
    }
    let (a, b) = (alpha_bar.sqrt(), (1.0 - alpha_bar).sqrt());
    Ok(z0.iter().zip(noise).map(|(x, e)| a * x + b * e).collect())
}
