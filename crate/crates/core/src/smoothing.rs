//! Distribution smoothing: rank clipping, a variable-base logarithmic
//! transform and a KL-guided search for the clipping thresholds.
//!
//! For a class with `N` items sorted by difficulty, a [`ClipSpec`] removes the
//! `bottom` easiest and `top` hardest items. The retained values are mapped
//! through `f(v) = ln(v / min) / ln(max / min)`, which sends the retained
//! minimum to 0 and maximum to 1; clipped items are pinned to 0 and 1. The
//! thresholds minimise
//!
//! ```text
//! λ·KL(hist(f) ‖ hist(original)) + (1 − λ)·KL(hist(f) ‖ uniform)
//! ```
//!
//! over a grid of percent-of-N clip sizes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::distribution::{histogram, DifficultyHistogram, INTERVALS};
use crate::error::{Error, Result};
use crate::manifest::{Item, Manifest};

/// Values below this are raised to it before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-9;
/// Added to every histogram bin before normalising in [`kl_divergence`].
pub const KL_EPSILON: f64 = 1e-12;
pub const DEFAULT_LAMBDA: f64 = 0.5;
pub const DEFAULT_GRID_MAX_PERCENT: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClipSpec {
    /// Number of lowest-ranked items removed.
    pub bottom: usize,
    /// Number of highest-ranked items removed.
    pub top: usize,
}

impl ClipSpec {
    pub const NONE: ClipSpec = ClipSpec { bottom: 0, top: 0 };

    pub fn new(bottom: usize, top: usize) -> Self {
        ClipSpec { bottom, top }
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.bottom + self.top >= n {
            return Err(Error::domain(format!(
                "clipping {} + {} items leaves nothing of {n}",
                self.bottom, self.top
            )));
        }
        Ok(())
    }
}

/// Indices of `values` sorted ascending; equal values are ordered by id.
pub fn rank_order<S: AsRef<str>>(values: &[f64], ids: &[S]) -> Vec<usize> {
    assert_eq!(values.len(), ids.len(), "values and ids must align");
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .total_cmp(&values[b])
            .then_with(|| ids[a].as_ref().cmp(ids[b].as_ref()))
    });
    order
}

/// Retained flag per item, in input order.
pub fn clip<S: AsRef<str>>(values: &[f64], ids: &[S], spec: ClipSpec) -> Result<Vec<bool>> {
    spec.check(values.len())?;
    let order = rank_order(values, ids);
    let mut retained = vec![false; values.len()];
    for &i in &order[spec.bottom..values.len() - spec.top] {
        retained[i] = true;
    }
    Ok(retained)
}

fn floored(v: f64) -> Result<f64> {
    if v.is_nan() || v < 0.0 {
        return Err(Error::domain(format!(
            "log transform needs nonnegative values, got {v}"
        )));
    }
    Ok(v.max(LOG_FLOOR))
}

/// Variable-base logarithmic transform of `values` onto `[0, 1]`.
pub fn log_transform(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::degenerate("log transform needs at least two values"));
    }
    let floored: Vec<f64> = values.iter().map(|&v| floored(v)).collect::<Result<_>>()?;
    let min = floored.iter().copied().fold(f64::INFINITY, f64::min);
    let max = floored.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = LogScale::new(min, max)?;
    Ok(floored.into_iter().map(|v| scale.apply(v)).collect())
}

#[derive(Debug, Clone, Copy)]
struct LogScale {
    min: f64,
    denom: f64,
}

impl LogScale {
    fn new(min: f64, max: f64) -> Result<Self> {
        if max <= min {
            return Err(Error::degenerate(format!(
                "retained values span no range (min = max = {min})"
            )));
        }
        Ok(LogScale {
            min,
            denom: (max / min).ln(),
        })
    }

    fn apply(&self, v: f64) -> f64 {
        ((v / self.min).ln() / self.denom).clamp(0.0, 1.0)
    }
}

/// `KL(p ‖ q)` between two histograms after adding [`KL_EPSILON`] to each bin
/// and normalising.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::domain(format!(
            "histograms must have equal nonzero length ({} vs {})",
            p.len(),
            q.len()
        )));
    }
    for &x in p.iter().chain(q) {
        if x.is_nan() || x < 0.0 {
            return Err(Error::domain(format!("histogram bin {x} is negative")));
        }
    }
    let p_total: f64 = p.iter().sum();
    let q_total: f64 = q.iter().sum();
    if p_total <= 0.0 || q_total <= 0.0 {
        return Err(Error::degenerate("histogram has zero total"));
    }
    let n = p.len() as f64;
    let p_norm = p_total + n * KL_EPSILON;
    let q_norm = q_total + n * KL_EPSILON;
    let kl: f64 = p
        .iter()
        .zip(q)
        .map(|(&pk, &qk)| {
            let pk = (pk + KL_EPSILON) / p_norm;
            let qk = (qk + KL_EPSILON) / q_norm;
            pk * (pk / qk).ln()
        })
        .sum();
    // Rounding can leave a tiny negative sum for nearly equal inputs.
    Ok(kl.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingResult {
    pub label: String,
    pub clip: ClipSpec,
    /// Smoothed difficulty per item, aligned with the input order.
    pub transformed: Vec<f64>,
    pub objective: f64,
    pub kl_to_original: f64,
    pub kl_to_uniform: f64,
    pub lambda: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda {lambda} is outside [0, 1]")));
    }
    Ok(())
}

/// Precomputed per-class state shared by every grid point of a search.
struct ClassState<'a> {
    label: &'a str,
    values: &'a [f64],
    order: Vec<usize>,
    original: [f64; INTERVALS],
}

impl<'a> ClassState<'a> {
    fn new<S: AsRef<str>>(label: &'a str, values: &'a [f64], ids: &[S]) -> Result<Self> {
        let original = histogram(label, values.iter().copied())?.as_f64();
        Ok(ClassState {
            label,
            values,
            order: rank_order(values, ids),
            original,
        })
    }

    fn transform(&self, spec: ClipSpec) -> Result<Vec<f64>> {
        let n = self.values.len();
        spec.check(n)?;
        let kept = &self.order[spec.bottom..n - spec.top];
        let min = floored(self.values[kept[0]])?;
        let max = floored(self.values[kept[kept.len() - 1]])?;
        let scale = LogScale::new(min, max)?;

        let mut out = vec![0.0; n];
        for &i in &self.order[n - spec.top..] {
            out[i] = 1.0;
        }
        for &i in kept {
            out[i] = scale.apply(floored(self.values[i])?);
        }
        Ok(out)
    }

    fn evaluate(&self, spec: ClipSpec, lambda: f64) -> Result<SmoothingResult> {
        let transformed = self.transform(spec)?;
        let hist = histogram(self.label, transformed.iter().copied())?.as_f64();
        let kl_to_original = kl_divergence(&hist, &self.original)?;
        let kl_to_uniform = kl_divergence(&hist, &[1.0; INTERVALS])?;
        Ok(SmoothingResult {
            label: self.label.to_string(),
            clip: spec,
            transformed,
            objective: lambda * kl_to_original + (1.0 - lambda) * kl_to_uniform,
            kl_to_original,
            kl_to_uniform,
            lambda,
        })
    }
}

/// Evaluates one clipping choice: clip, transform, histogram and score.
pub fn smoothing_objective<S: AsRef<str>>(
    label: &str,
    values: &[f64],
    ids: &[S],
    spec: ClipSpec,
    lambda: f64,
) -> Result<SmoothingResult> {
    check_lambda(lambda)?;
    ClassState::new(label, values, ids)?.evaluate(spec, lambda)
}

/// Clip sizes considered per side, as percentages of the class size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    pub percents: Vec<u32>,
}

impl ThresholdGrid {
    /// `0, step, 2·step, ..` up to and including `max_percent`.
    pub fn percent_steps(max_percent: u32, step: u32) -> Result<Self> {
        if step == 0 {
            return Err(Error::domain("grid step must be positive"));
        }
        if max_percent >= 100 {
            return Err(Error::domain("grid maximum must be below 100 percent"));
        }
        Ok(ThresholdGrid {
            percents: (0..=max_percent).step_by(step as usize).collect(),
        })
    }

    /// Item count corresponding to `percent` of `n`, rounded down.
    pub fn count(percent: u32, n: usize) -> usize {
        n * percent as usize / 100
    }

    /// Distinct `(bottom, top)` pairs for a class of `n` items, ascending.
    pub fn specs(&self, n: usize) -> Vec<ClipSpec> {
        let mut counts: Vec<usize> = self.percents.iter().map(|&p| Self::count(p, n)).collect();
        counts.sort_unstable();
        counts.dedup();
        let mut specs = Vec::with_capacity(counts.len() * counts.len());
        for &b in &counts {
            for &t in &counts {
                if b + t < n {
                    specs.push(ClipSpec::new(b, t));
                }
            }
        }
        specs
    }
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        ThresholdGrid::percent_steps(DEFAULT_GRID_MAX_PERCENT, 1).expect("valid default grid")
    }
}

/// Exhaustive threshold search. Ties in the objective keep the smaller
/// bottom count, then the smaller top count.
pub fn search_thresholds<S: AsRef<str>>(
    label: &str,
    values: &[f64],
    ids: &[S],
    lambda: f64,
    grid: &ThresholdGrid,
) -> Result<SmoothingResult> {
    check_lambda(lambda)?;
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::degenerate(format!(
            "class {label:?} has {} distinct difficulty values, need 3",
            distinct.len()
        )));
    }
    let state = ClassState::new(label, values, ids)?;
    let mut best: Option<SmoothingResult> = None;
    for spec in grid.specs(values.len()) {
        let candidate = match state.evaluate(spec, lambda) {
            Ok(c) => c,
            Err(Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        };
        let better = match &best {
            None => true,
            Some(b) => {
                candidate.objective < b.objective
                    || (candidate.objective == b.objective
                        && (candidate.clip.bottom, candidate.clip.top)
                            < (b.clip.bottom, b.clip.top))
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    best.ok_or_else(|| {
        Error::degenerate(format!(
            "every grid point is degenerate for class {label:?}"
        ))
    })
}

/// Smoothing outcome for one class of a manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSmoothing {
    pub label: String,
    pub ids: Vec<String>,
    /// Smoothed difficulties aligned with `ids`. Raw difficulties when the
    /// class was degenerate.
    pub transformed: Vec<f64>,
    pub result: Option<SmoothingResult>,
    pub warning: Option<String>,
}

impl ClassSmoothing {
    pub fn degenerate(&self) -> bool {
        self.result.is_none()
    }
}

/// One row of the smoothing report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRow {
    pub label: String,
    pub b: usize,
    pub t: usize,
    pub lambda: f64,
    pub objective: Option<f64>,
    pub kl_to_original: Option<f64>,
    pub kl_to_uniform: Option<f64>,
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingReport {
    pub lambda: f64,
    /// Sorted by label.
    pub classes: Vec<ClassSmoothing>,
}

impl SmoothingReport {
    pub fn class(&self, label: &str) -> Option<&ClassSmoothing> {
        self.classes.iter().find(|c| c.label == label)
    }

    pub fn rows(&self) -> Vec<SmoothingRow> {
        self.classes
            .iter()
            .map(|c| match &c.result {
                Some(r) => SmoothingRow {
                    label: c.label.clone(),
                    b: r.clip.bottom,
                    t: r.clip.top,
                    lambda: r.lambda,
                    objective: Some(r.objective),
                    kl_to_original: Some(r.kl_to_original),
                    kl_to_uniform: Some(r.kl_to_uniform),
                    degenerate: false,
                    warning: None,
                },
                None => SmoothingRow {
                    label: c.label.clone(),
                    b: 0,
                    t: 0,
                    lambda: self.lambda,
                    objective: None,
                    kl_to_original: None,
                    kl_to_uniform: None,
                    degenerate: true,
                    warning: c.warning.clone(),
                },
            })
            .collect()
    }

    /// Smoothed difficulty keyed by item id.
    pub fn smoothed_by_id(&self) -> HashMap<&str, f64> {
        self.classes
            .iter()
            .flat_map(|c| {
                c.ids
                    .iter()
                    .map(String::as_str)
                    .zip(c.transformed.iter().copied())
            })
            .collect()
    }

    /// Copy of `manifest` with `difficulty_smoothed` set on every item.
    pub fn augment(&self, manifest: &Manifest) -> Result<Manifest> {
        let by_id = self.smoothed_by_id();
        let items = manifest
            .items
            .iter()
            .map(|it| {
                let smoothed = by_id.get(it.id.as_str()).copied().ok_or_else(|| {
                    Error::validation(format!("no smoothed value for {:?}", it.id))
                })?;
                Ok(Item {
                    difficulty_smoothed: Some(smoothed),
                    ..it.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Manifest {
            items,
            role: manifest.role,
            latent_dim: manifest.latent_dim,
        })
    }
}

/// Smooths every class of `manifest` independently. Classes whose search is
/// degenerate pass through with raw difficulties and a warning.
pub fn smooth_dataset(
    manifest: &Manifest,
    lambda: f64,
    grid: &ThresholdGrid,
) -> Result<SmoothingReport> {
    check_lambda(lambda)?;
    let mut classes = Vec::new();
    for (label, items) in manifest.by_label() {
        let ids: Vec<String> = items.iter().map(|it| it.id.clone()).collect();
        let values: Vec<f64> = items.iter().map(|it| it.difficulty).collect();
        let class = match search_thresholds(label, &values, &ids, lambda, grid) {
            Ok(result) => ClassSmoothing {
                label: label.to_string(),
                ids,
                transformed: result.transformed.clone(),
                result: Some(result),
                warning: None,
            },
            Err(Error::Degenerate(msg)) => ClassSmoothing {
                label: label.to_string(),
                ids,
                transformed: values,
                result: None,
                warning: Some(format!("left untransformed: {msg}")),
            },
            Err(e) => return Err(e),
        };
        classes.push(class);
    }
    Ok(SmoothingReport { lambda, classes })
}

/// Histogram of the smoothed difficulties of one class.
pub fn smoothed_histogram(class: &ClassSmoothing) -> Result<DifficultyHistogram> {
    histogram(class.label.clone(), class.transformed.iter().copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::Role;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("i{i:03}")).collect()
    }

    #[test]
    fn identity_clip_keeps_everything() {
        let v = [0.3, 0.1, 0.2];
        assert_eq!(clip(&v, &ids(3), ClipSpec::NONE).unwrap(), vec![true; 3]);
    }

    #[test]
    fn clip_removes_ranks() {
        let v = [0.5, 0.1, 0.4, 0.2, 0.3];
        let kept = clip(&v, &ids(5), ClipSpec::new(1, 2)).unwrap();
        let retained: Vec<f64> = v
            .iter()
            .zip(&kept)
            .filter(|(_, &k)| k)
            .map(|(&x, _)| x)
            .collect();
        assert_eq!(retained, vec![0.2, 0.3]);
        assert!(matches!(
            clip(&[0.1, 0.2, 0.3], &ids(3), ClipSpec::new(2, 1)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn clip_ties_break_by_id() {
        let v = [0.2, 0.2, 0.2];
        let names = ["c", "a", "b"];
        let kept = clip(&v, &names, ClipSpec::new(1, 1)).unwrap();
        // "a" is lowest, "c" highest; only "b" survives.
        assert_eq!(kept, vec![false, false, true]);
    }

    #[test]
    fn log_transform_endpoints() {
        let (m, mx) = (0.04, 0.64);
        let out = log_transform(&[mx, m, (m * mx).sqrt()]).unwrap();
        assert_eq!(out[0], 1.0);
        assert_eq!(out[1], 0.0);
        assert!((out[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn log_transform_errors_and_floor() {
        assert!(matches!(
            log_transform(&[0.3, 0.3]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(log_transform(&[0.3]), Err(Error::Degenerate(_))));
        assert!(matches!(log_transform(&[-0.1, 0.3]), Err(Error::Domain(_))));
        // Zero is floored rather than producing ln(0).
        let out = log_transform(&[0.0, 0.5, 1e-10]).unwrap();
        assert_eq!(out, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn kl_examples() {
        let p = [3.0, 1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 4.0];
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let mut point = [0.0; 10];
        point[0] = 1.0;
        let kl = kl_divergence(&point, &[1.0; 10]).unwrap();
        assert!((kl - 10f64.ln()).abs() < 1e-6, "{kl}");
        assert!(matches!(
            kl_divergence(&[-1.0, 2.0], &[1.0, 1.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            kl_divergence(&[0.0, 0.0], &[1.0, 1.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(kl_divergence(&[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn objective_endpoints() {
        let v: Vec<f64> = (1..=30).map(|i| (i as f64 / 31.0).powi(2)).collect();
        let names = ids(v.len());
        let spec = ClipSpec::new(2, 1);
        let r1 = smoothing_objective("c", &v, &names, spec, 1.0).unwrap();
        assert_eq!(r1.objective, r1.kl_to_original);
        let r0 = smoothing_objective("c", &v, &names, spec, 0.0).unwrap();
        assert_eq!(r0.objective, r0.kl_to_uniform);
        let half = smoothing_objective("c", &v, &names, spec, DEFAULT_LAMBDA).unwrap();
        assert_eq!(
            half.objective,
            0.5 * half.kl_to_original + 0.5 * half.kl_to_uniform
        );
        assert!(smoothing_objective("c", &v, &names, spec, 1.5).is_err());
    }

    #[test]
    fn clipped_items_are_pinned() {
        let v = [0.05, 0.2, 0.3, 0.4, 0.9];
        let r = smoothing_objective("c", &v, &ids(5), ClipSpec::new(1, 1), 0.5).unwrap();
        assert_eq!(r.transformed[0], 0.0);
        assert_eq!(r.transformed[4], 1.0);
        assert_eq!(r.transformed[1], 0.0);
        assert_eq!(r.transformed[3], 1.0);
        assert!((r.transformed[2] - (1.5f64).ln() / 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn search_rejects_constant_class() {
        let v = [0.4; 12];
        let err = search_thresholds("c", &v, &ids(12), 0.5, &ThresholdGrid::default()).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn search_never_worse_than_no_clip() {
        let v: Vec<f64> = (0..50)
            .map(|i| ((i * 37 % 50) as f64 / 50.0).powi(3))
            .collect();
        let names = ids(v.len());
        for lambda in [0.0, 0.3, 0.5, 1.0] {
            let best =
                search_thresholds("c", &v, &names, lambda, &ThresholdGrid::default()).unwrap();
            let base = smoothing_objective("c", &v, &names, ClipSpec::NONE, lambda).unwrap();
            assert!(best.objective <= base.objective);
        }
    }

    #[test]
    fn grid_specs_skip_infeasible_points() {
        let grid = ThresholdGrid {
            percents: vec![0, 50, 60],
        };
        let specs = grid.specs(10);
        assert!(specs.iter().all(|s| s.bottom + s.top < 10));
        assert!(specs.contains(&ClipSpec::new(5, 0)));
        assert!(!specs.contains(&ClipSpec::new(5, 5)));
        assert!(ThresholdGrid::percent_steps(20, 0).is_err());
        assert_eq!(ThresholdGrid::default().percents.len(), 21);
    }

    #[test]
    fn dataset_smoothing_flags_degenerate_classes() {
        let mut items = Vec::new();
        for i in 0..20 {
            items.push(
                Item::from_difficulty(format!("a{i}"), "a", (i as f64 + 1.0) / 25.0).unwrap(),
            );
            items.push(Item::from_difficulty(format!("b{i}"), "b", 0.3).unwrap());
        }
        let m = Manifest::new(items, Role::Original).unwrap();
        let report = smooth_dataset(&m, 0.5, &ThresholdGrid::default()).unwrap();
        assert_eq!(report.classes.len(), 2);
        assert!(!report.class("a").unwrap().degenerate());
        let b = report.class("b").unwrap();
        assert!(b.degenerate());
        assert_eq!(b.transformed, vec![0.3; 20]);
        let rows = report.rows();
        assert!(rows[1].degenerate && rows[1].objective.is_none());
        let aug = report.augment(&m).unwrap();
        assert!(aug.items.iter().all(|it| it.difficulty_smoothed.is_some()));
    }
}
