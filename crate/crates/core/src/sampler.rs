//! Difficulty-guided sampling from an image pool.
//!
//! Per class, the pool is bucketed by (smoothed) difficulty interval and each
//! interval contributes as many items as the sampling plan asks for. Demand an
//! interval cannot meet is a deficit, handled by the policy's
//! [`DeficitRule`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::distribution::{
    bin_index, histogram, interval_midpoint, predefined_plan_with, scale_to_ipc, SamplingPlan,
    Shape, ShapeTemplates, INTERVALS,
};
use crate::error::{Error, Result};
use crate::manifest::{Item, Manifest, Role};
use crate::rng::{substream, StreamKey};
use crate::smoothing::{
    smooth_dataset, SmoothingReport, SmoothingRow, ThresholdGrid, DEFAULT_LAMBDA,
};

macro_rules! kebab_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $name {
            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(Error::domain(format!(concat!("unknown ", stringify!($name), " {:?}"), s))),
                }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Uniform draws without replacement from the interval.
    #[default]
    SeededRandom,
    /// Items closest to the interval midpoint first, id breaking ties.
    CenterNearest,
}

kebab_enum!(Strategy { SeededRandom => "seeded-random", CenterNearest => "center-nearest" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DeficitRule {
    /// Move unmet demand to the nearest interval with spare items, preferring
    /// the easier side on equal distance.
    #[default]
    AdjacentSpill,
    /// Draw the missing items uniformly from everything not yet selected.
    RandomFill,
    Fail,
}

kebab_enum!(DeficitRule { AdjacentSpill => "adjacent-spill", RandomFill => "random-fill", Fail => "fail" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SamplingPolicy {
    pub strategy: Strategy,
    pub seed: u64,
    pub deficit_rule: DeficitRule,
}

/// Demand for interval `from` served from interval `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpillEntry {
    pub from: usize,
    pub to: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassReport {
    pub label: String,
    pub ipc: u64,
    pub targets: [u64; INTERVALS],
    pub supply: [u64; INTERVALS],
    /// Selected items per interval they actually fall in.
    pub achieved: [u64; INTERVALS],
    /// Target minus what the interval itself could supply.
    pub deficit: [u64; INTERVALS],
    pub spills: Vec<SpillEntry>,
    /// Selected ids in pool order.
    pub selected: Vec<String>,
}

impl ClassReport {
    pub fn total_deficit(&self) -> u64 {
        self.deficit.iter().sum()
    }
}

/// One candidate of a class pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate<'a> {
    pub id: &'a str,
    /// Difficulty used for bucketing, smoothed when smoothing is on.
    pub difficulty: f64,
}

fn bucket_key(label: &str, k: usize) -> StreamKey {
    StreamKey::new("dgs/interval").part(label).index(k as u64)
}

/// Samples `plan.ipc` items of one class from `pool`.
pub fn sample_class(
    pool: &[Candidate<'_>],
    plan: &SamplingPlan,
    policy: &SamplingPolicy,
) -> Result<ClassReport> {
    let label = plan.label.as_str();
    if plan.ipc == 0 {
        return Err(Error::domain("ipc must be positive"));
    }
    if (pool.len() as u64) < plan.ipc {
        return Err(Error::InsufficientSupply(format!(
            "class {label:?} has {} pool items, needs {}",
            pool.len(),
            plan.ipc
        )));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = pool.iter().find(|c| !seen.insert(c.id)) {
        return Err(Error::validation(format!("duplicate pool id {:?}", dup.id)));
    }

    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); INTERVALS];
    for (i, c) in pool.iter().enumerate() {
        buckets[bin_index(c.difficulty)?].push(i);
    }
    for (k, bucket) in buckets.iter_mut().enumerate() {
        match policy.strategy {
            Strategy::SeededRandom => {
                bucket.sort_by(|&a, &b| pool[a].id.cmp(pool[b].id));
                bucket.shuffle(&mut substream(policy.seed, &bucket_key(label, k)));
            }
            Strategy::CenterNearest => order_by_distance(bucket, pool, interval_midpoint(k)),
        }
    }

    let supply: [u64; INTERVALS] = std::array::from_fn(|k| buckets[k].len() as u64);
    let mut used = [0usize; INTERVALS];
    let mut deficit = [0u64; INTERVALS];
    let mut chosen: Vec<usize> = Vec::with_capacity(plan.ipc as usize);
    for k in 0..INTERVALS {
        let take = plan.targets[k].min(supply[k]);
        chosen.extend_from_slice(&buckets[k][..take as usize]);
        used[k] = take as usize;
        deficit[k] = plan.targets[k] - take;
    }

    let total_deficit: u64 = deficit.iter().sum();
    let mut spills: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    if total_deficit > 0 {
        match policy.deficit_rule {
            DeficitRule::Fail => {
                return Err(Error::Deficit(format!(
                    "class {label:?} is short by {total_deficit} items (per interval {deficit:?})"
                )))
            }
            DeficitRule::AdjacentSpill => {
                for k in 0..INTERVALS {
                    let mut need = deficit[k] as usize;
                    let mut donors: Vec<usize> = (0..INTERVALS).filter(|&j| j != k).collect();
                    donors.sort_by_key(|&j| (j.abs_diff(k), j));
                    for j in donors {
                        if need == 0 {
                            break;
                        }
                        let spare = buckets[j].len() - used[j];
                        let take = need.min(spare);
                        if take == 0 {
                            continue;
                        }
                        if policy.strategy == Strategy::CenterNearest {
                            // Closest to the interval whose demand is being served.
                            order_by_distance(
                                &mut buckets[j][used[j]..],
                                pool,
                                interval_midpoint(k),
                            );
                        }
                        chosen.extend_from_slice(&buckets[j][used[j]..used[j] + take]);
                        used[j] += take;
                        need -= take;
                        *spills.entry((k, j)).or_default() += take as u64;
                    }
                }
            }
            DeficitRule::RandomFill => {
                let taken: HashSet<usize> = chosen.iter().copied().collect();
                let mut rest: Vec<usize> = (0..pool.len()).filter(|i| !taken.contains(i)).collect();
                rest.sort_by(|&a, &b| pool[a].id.cmp(pool[b].id));
                let mut rng = substream(policy.seed, &StreamKey::new("dgs/fill").part(label));
                let draws = index::sample(&mut rng, rest.len(), total_deficit as usize);
                let sources =
                    (0..INTERVALS).flat_map(|k| std::iter::repeat_n(k, deficit[k] as usize));
                for (from, pick) in sources.zip(draws.iter()) {
                    let idx = rest[pick];
                    chosen.push(idx);
                    let to = bin_index(pool[idx].difficulty)?;
                    *spills.entry((from, to)).or_default() += 1;
                }
            }
        }
    }

    chosen.sort_unstable();
    let mut achieved = [0u64; INTERVALS];
    for &i in &chosen {
        achieved[bin_index(pool[i].difficulty)?] += 1;
    }
    Ok(ClassReport {
        label: label.to_string(),
        ipc: plan.ipc,
        targets: plan.targets,
        supply,
        achieved,
        deficit,
        spills: spills
            .into_iter()
            .map(|((from, to), count)| SpillEntry { from, to, count })
            .collect(),
        selected: chosen.iter().map(|&i| pool[i].id.to_string()).collect(),
    })
}

fn order_by_distance(indices: &mut [usize], pool: &[Candidate<'_>], center: f64) {
    indices.sort_by(|&a, &b| {
        (pool[a].difficulty - center)
            .abs()
            .total_cmp(&(pool[b].difficulty - center).abs())
            .then_with(|| pool[a].id.cmp(pool[b].id))
    });
}

/// Where the per-class sampling plan comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlanShape {
    /// Scale the original class histogram to the budget.
    #[default]
    Scale,
    Predefined(Shape),
}

impl fmt::Display for PlanShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanShape::Scale => f.write_str("scale"),
            PlanShape::Predefined(s) => s.fmt(f),
        }
    }
}

impl FromStr for PlanShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "scale" {
            Ok(PlanShape::Scale)
        } else {
            s.parse().map(PlanShape::Predefined)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgsConfig {
    pub ipc: u64,
    pub lambda: f64,
    pub grid: ThresholdGrid,
    pub shape: PlanShape,
    pub templates: ShapeTemplates,
    pub policy: SamplingPolicy,
    /// Sample on raw difficulties when false.
    pub smoothing: bool,
}

impl DgsConfig {
    pub fn new(ipc: u64) -> Self {
        DgsConfig {
            ipc,
            lambda: DEFAULT_LAMBDA,
            grid: ThresholdGrid::default(),
            shape: PlanShape::Scale,
            templates: ShapeTemplates::default(),
            policy: SamplingPolicy::default(),
            smoothing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub classes: Vec<ClassReport>,
    pub total_deficit: u64,
    pub original_smoothing: Vec<SmoothingRow>,
    pub pool_smoothing: Vec<SmoothingRow>,
}

impl SamplingReport {
    pub fn class(&self, label: &str) -> Option<&ClassReport> {
        self.classes.iter().find(|c| c.label == label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgsOutput {
    pub distilled: Manifest,
    pub report: SamplingReport,
}

/// Difficulty per item id: smoothed values when a report is given, raw otherwise.
fn class_difficulties<'a>(
    items: &[&'a Item],
    smoothing: Option<&SmoothingReport>,
) -> Vec<Candidate<'a>> {
    let smoothed = smoothing.map(SmoothingReport::smoothed_by_id);
    items
        .iter()
        .map(|it| Candidate {
            id: it.id.as_str(),
            difficulty: smoothed
                .as_ref()
                .and_then(|m| m.get(it.id.as_str()).copied())
                .unwrap_or(it.difficulty),
        })
        .collect()
}

/// Runs the full pipeline: smooth both datasets, derive per-class plans and
/// sample the distilled dataset from the pool.
pub fn dgs_run(original: &Manifest, pool: &Manifest, config: &DgsConfig) -> Result<DgsOutput> {
    let labels = original.labels();
    if labels != pool.labels() {
        return Err(Error::validation(format!(
            "label sets differ: original {:?}, pool {:?}",
            labels,
            pool.labels()
        )));
    }
    if config.ipc == 0 {
        return Err(Error::domain("ipc must be positive"));
    }

    let (original_smoothing, pool_smoothing) = if config.smoothing {
        (
            Some(smooth_dataset(original, config.lambda, &config.grid)?),
            Some(smooth_dataset(pool, config.lambda, &config.grid)?),
        )
    } else {
        (None, None)
    };

    let original_classes = original.by_label();
    let pool_classes = pool.by_label();
    let mut classes = Vec::with_capacity(labels.len());
    let mut distilled = Vec::new();
    for label in &labels {
        let plan = match config.shape {
            PlanShape::Scale => {
                let source = class_difficulties(
                    &original_classes[label.as_str()],
                    original_smoothing.as_ref(),
                );
                let hist = histogram(label.clone(), source.iter().map(|c| c.difficulty))?;
                scale_to_ipc(&hist, config.ipc)?
            }
            PlanShape::Predefined(shape) => {
                predefined_plan_with(&config.templates, label.clone(), shape, config.ipc)?
            }
        };
        let pool_items = &pool_classes[label.as_str()];
        let candidates = class_difficulties(pool_items, pool_smoothing.as_ref());
        let report = sample_class(&candidates, &plan, &config.policy)?;

        let picked: HashSet<&str> = report.selected.iter().map(String::as_str).collect();
        for (item, cand) in pool_items.iter().zip(&candidates) {
            if picked.contains(item.id.as_str()) {
                distilled.push(Item {
                    difficulty_smoothed: config.smoothing.then_some(cand.difficulty),
                    interval: Some(bin_index(cand.difficulty)?),
                    ..(*item).clone()
                });
            }
        }
        classes.push(report);
    }

    let total_deficit = classes.iter().map(ClassReport::total_deficit).sum();
    let distilled = Manifest::new(distilled, Role::Distilled)?;
    Ok(DgsOutput {
        distilled,
        report: SamplingReport {
            classes,
            total_deficit,
            original_smoothing: original_smoothing.map(|r| r.rows()).unwrap_or_default(),
            pool_smoothing: pool_smoothing.map(|r| r.rows()).unwrap_or_default(),
        },
    })
}
