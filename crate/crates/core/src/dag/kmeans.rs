//! Lloyd's k-means with k-means++ seeding, and its per-interval use for
//! finding guidance centers.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::distribution::{bin_index, SamplingPlan, INTERVALS};
use crate::error::{Error, Result};
use crate::manifest::Item;
use crate::rng::{substream, Rng, StreamKey};

pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centers: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squares after every assignment step.
    pub cost_history: Vec<f64>,
}

impl KMeansFit {
    pub fn cost(&self) -> f64 {
        *self
            .cost_history
            .last()
            .expect("at least one assignment step")
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// k-means++ seeding: the first center uniformly, then each next center with
/// probability proportional to squared distance from the closest chosen one.
pub fn kmeans_pp_init(points: &[Vec<f64>], k: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let mut chosen = vec![rng.gen_range(0..points.len())];
    let mut nearest: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, &d) in nearest.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(i);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            pick.expect("positive total has a positive entry")
        } else {
            // Every point coincides with a chosen center.
            (0..points.len()).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (n, p) in nearest.iter_mut().zip(points) {
            *n = n.min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut cost = 0.0;
    let assignment = points
        .iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (j, c) in centers.iter().enumerate() {
                let d = sq_dist(p, c);
                if d < best.1 {
                    best = (j, d);
                }
            }
            cost += best.1;
            best.0
        })
        .collect();
    (assignment, cost)
}

fn update(points: &[Vec<f64>], assignment: &mut [usize], centers: &mut [Vec<f64>]) {
    let k = centers.len();
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignment.iter()) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += x;
        }
    }
    for j in 0..k {
        if counts[j] > 0 {
            centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
        }
    }
    // An empty cluster takes the point of the largest cluster lying farthest
    // from that cluster's center.
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let largest = (0..k)
            .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
            .expect("k > 0");
        if counts[largest] < 2 {
            break;
        }
        let far = (0..points.len())
            .filter(|&i| assignment[i] == largest)
            .max_by(|&a, &b| {
                sq_dist(&points[a], &centers[largest])
                    .total_cmp(&sq_dist(&points[b], &centers[largest]))
                    .then(b.cmp(&a))
            })
            .expect("largest cluster is not empty");
        assignment[far] = j;
        counts[largest] -= 1;
        counts[j] = 1;
        centers[j] = points[far].clone();
    }
}

/// One run of Lloyd's algorithm from k-means++ seeds. Stops when an
/// assignment step changes nothing or after `max_iters` update steps.
pub fn lloyd(points: &[Vec<f64>], k: usize, rng: &mut Rng, max_iters: usize) -> Result<KMeansFit> {
    check_points(points, k)?;
    let centers = kmeans_pp_init(points, k, rng);
    Ok(lloyd_from(points, centers, max_iters))
}

/// Lloyd's algorithm from the given initial centers.
pub fn lloyd_from(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iters: usize) -> KMeansFit {
    let (mut assignment, cost) = assign(points, &centers);
    let mut cost_history = vec![cost];
    for _ in 0..max_iters {
        update(points, &mut assignment, &mut centers);
        let (next, cost) = assign(points, &centers);
        cost_history.push(cost);
        if next == assignment {
            break;
        }
        assignment = next;
    }
    KMeansFit {
        centers,
        assignment,
        cost_history,
    }
}

/// Inputs with at most this many k-subsets are also seeded from every subset.
pub const SUBSET_SEEDING_LIMIT: u64 = 256;

fn subset_count(n: usize, k: usize) -> Option<u64> {
    let mut c: u64 = 1;
    for i in 0..k.min(n - k) as u64 {
        c = c.checked_mul(n as u64 - i)? / (i + 1);
        if c > SUBSET_SEEDING_LIMIT {
            return None;
        }
    }
    Some(c)
}

/// Visits every k-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Hartigan refinement: moves single points between clusters while a move
/// strictly lowers the total cost, then refreshes the cost history.
pub fn refine(points: &[Vec<f64>], fit: &mut KMeansFit, max_passes: usize) {
    let k = fit.centers.len();
    let dim = points[0].len();
    let mut counts = vec![0usize; k];
    for &a in &fit.assignment {
        counts[a] += 1;
    }
    let mut moved_any = false;
    for _ in 0..max_passes {
        let mut moved = false;
        for i in 0..points.len() {
            let from = fit.assignment[i];
            if counts[from] < 2 {
                continue;
            }
            let n_from = counts[from] as f64;
            let removal_gain = n_from / (n_from - 1.0) * sq_dist(&points[i], &fit.centers[from]);
            let mut best: Option<(usize, f64)> = None;
            for to in (0..k).filter(|&j| j != from) {
                let n_to = counts[to] as f64;
                let cost = n_to / (n_to + 1.0) * sq_dist(&points[i], &fit.centers[to]);
                if cost < removal_gain && best.is_none_or(|(_, c)| cost < c) {
                    best = Some((to, cost));
                }
            }
            let Some((to, _)) = best else { continue };
            let (n_from, n_to) = (counts[from] as f64, counts[to] as f64);
            for d in 0..dim {
                let x = points[i][d];
                fit.centers[from][d] = (fit.centers[from][d] * n_from - x) / (n_from - 1.0);
                fit.centers[to][d] = (fit.centers[to][d] * n_to + x) / (n_to + 1.0);
            }
            counts[from] -= 1;
            counts[to] += 1;
            fit.assignment[i] = to;
            moved = true;
            moved_any = true;
        }
        if !moved {
            break;
        }
    }
    if moved_any {
        // Recompute exactly rather than trusting the incremental updates.
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &a) in points.iter().zip(&fit.assignment) {
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for j in 0..k {
            fit.centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
        }
        let cost: f64 = points
            .iter()
            .zip(&fit.assignment)
            .map(|(p, &a)| sq_dist(p, &fit.centers[a]))
            .sum();
        if cost < fit.cost() {
            fit.cost_history.push(cost);
        }
    }
}

/// Best of `restarts` k-means++ Lloyd runs by final cost; earlier runs win
/// ties. Every run is finished with [`refine`]. Small inputs (see
/// [`SUBSET_SEEDING_LIMIT`]) additionally start from every k-subset of
/// distinct points.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    rng: &mut Rng,
    max_iters: usize,
    restarts: usize,
) -> Result<KMeansFit> {
    let mut best: Option<KMeansFit> = None;
    let mut offer = |mut fit: KMeansFit| {
        refine(points, &mut fit, max_iters);
        if best.as_ref().is_none_or(|b| fit.cost() < b.cost()) {
            best = Some(fit);
        }
    };
    for _ in 0..restarts.max(1) {
        offer(lloyd(points, k, rng, max_iters)?);
    }
    if subset_count(points.len(), k).is_some() {
        for_each_subset(points.len(), k, |idx| {
            let seeds: Vec<Vec<f64>> = idx.iter().map(|&i| points[i].clone()).collect();
            if seeds
                .iter()
                .enumerate()
                .all(|(a, s)| seeds[..a].iter().all(|o| o != s))
            {
                offer(lloyd_from(points, seeds, max_iters));
            }
        });
    }
    Ok(best.expect("at least one run"))
}

fn check_points(points: &[Vec<f64>], k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::domain("k must be positive"));
    }
    if points.len() < k {
        return Err(Error::InsufficientSupply(format!(
            "{} points for {k} clusters",
            points.len()
        )));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::validation(
            "points need one shared positive dimension",
        ));
    }
    Ok(())
}

/// A guidance center and the items it summarises.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub id: String,
    pub interval: usize,
    pub vector: Vec<f64>,
    pub members: Vec<String>,
    pub mean_difficulty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCenters {
    pub interval: usize,
    pub centers: Vec<Center>,
    pub cost_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterParams {
    pub seed: u64,
    pub max_iters: usize,
    pub restarts: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            seed: 0,
            max_iters: DEFAULT_MAX_ITERS,
            restarts: DEFAULT_RESTARTS,
        }
    }
}

/// Clusters the items of each difficulty interval into as many centers as
/// the plan allots to it. Intervals with no target are skipped.
pub fn interval_kmeans(
    items: &[&Item],
    plan: &SamplingPlan,
    params: &ClusterParams,
) -> Result<Vec<IntervalCenters>> {
    let mut buckets: Vec<Vec<&Item>> = vec![Vec::new(); INTERVALS];
    for it in items {
        if it.latent.is_none() {
            return Err(Error::validation(format!("item {:?} has no latent", it.id)));
        }
        buckets[bin_index(it.difficulty)?].push(it);
    }
    let short: Vec<String> = (0..INTERVALS)
        .filter(|&k| (buckets[k].len() as u64) < plan.targets[k])
        .map(|k| {
            format!(
                "interval {k}: {} items for {} centers",
                buckets[k].len(),
                plan.targets[k]
            )
        })
        .collect();
    if !short.is_empty() {
        return Err(Error::InsufficientSupply(format!(
            "class {:?}: {}",
            plan.label,
            short.join(", ")
        )));
    }

    let mut out = Vec::new();
    for (k, bucket) in buckets.iter().enumerate() {
        let target = plan.targets[k] as usize;
        if target == 0 {
            continue;
        }
        let points: Vec<Vec<f64>> = bucket
            .iter()
            .map(|it| it.latent.clone().expect("checked"))
            .collect();
        let mut rng = substream(
            params.seed,
            &StreamKey::new("dag/kmeans")
                .part(&plan.label)
                .index(k as u64),
        );
        let fit = kmeans(&points, target, &mut rng, params.max_iters, params.restarts)?;
        let centers = fit
            .centers
            .iter()
            .enumerate()
            .map(|(j, vector)| {
                let members: Vec<&Item> = bucket
                    .iter()
                    .zip(&fit.assignment)
                    .filter(|(_, &a)| a == j)
                    .map(|(it, _)| *it)
                    .collect();
                let mean_difficulty = if members.is_empty() {
                    crate::distribution::interval_midpoint(k)
                } else {
                    members.iter().map(|it| it.difficulty).sum::<f64>() / members.len() as f64
                };
                Center {
                    id: format!("{}/{k}/{j}", plan.label),
                    interval: k,
                    vector: vector.clone(),
                    members: members.iter().map(|it| it.id.clone()).collect(),
                    mean_difficulty: mean_difficulty.clamp(0.0, 1.0),
                }
            })
            .collect();
        out.push(IntervalCenters {
            interval: k,
            centers,
            cost_history: fit.cost_history,
        });
    }
    Ok(out)
}
