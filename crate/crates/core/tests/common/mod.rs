//! Independently coded reference computations used by the integration and
//! acceptance tests.

#![allow(dead_code)]

use dgs::dag::{Mixture, NoiseSchedule};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Interval of a value by scanning the edges from the top.
pub fn interval_of(v: f64) -> usize {
    (1..10).rev().find(|&k| v >= k as f64 / 10.0).unwrap_or(0)
}

pub fn counts_of(values: &[f64]) -> [f64; 10] {
    let mut h = [0.0; 10];
    for &v in values {
        h[interval_of(v)] += 1.0;
    }
    h
}

pub fn kl(p: &[f64; 10], q: &[f64; 10]) -> f64 {
    let eps = 1e-12;
    let ps: f64 = p.iter().sum::<f64>() + 10.0 * eps;
    let qs: f64 = q.iter().sum::<f64>() + 10.0 * eps;
    let mut total = 0.0;
    for k in 0..10 {
        let a = (p[k] + eps) / ps;
        let b = (q[k] + eps) / qs;
        total += a * (a / b).ln();
    }
    total.max(0.0)
}

/// Exhaustive threshold search written from the definitions: returns
/// `(bottom, top, objective)` of the first minimum in `(bottom, top)` order.
pub fn exhaustive_search(
    values: &[f64],
    ids: &[String],
    lambda: f64,
    percents: &[u32],
) -> Option<(usize, usize, f64)> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap()
            .then(ids[a].cmp(&ids[b]))
    });
    let original = counts_of(values);
    let mut sizes: Vec<usize> = percents.iter().map(|&p| n * p as usize / 100).collect();
    sizes.sort();
    sizes.dedup();

    let mut best: Option<(usize, usize, f64)> = None;
    for &b in &sizes {
        for &t in &sizes {
            if b + t >= n {
                continue;
            }
            let kept = &order[b..n - t];
            let lo = values[kept[0]].max(1e-9);
            let hi = values[kept[kept.len() - 1]].max(1e-9);
            if hi <= lo {
                continue;
            }
            let mut out = vec![0.0; n];
            for &i in &order[n - t..] {
                out[i] = 1.0;
            }
            for &i in kept {
                let v = values[i].max(1e-9);
                out[i] = ((v / lo).ln() / (hi / lo).ln()).clamp(0.0, 1.0);
            }
            let h = counts_of(&out);
            let objective = lambda * kl(&h, &original) + (1.0 - lambda) * kl(&h, &[1.0; 10]);
            if best.is_none_or(|(_, _, o)| objective < o) {
                best = Some((b, t, objective));
            }
        }
    }
    best
}

/// Every allocation of `seats` over the support of `weights` that minimises
/// the largest deviation `|target/seats − weight/total|`, in lexicographic
/// order of the target vectors, descending.
pub fn min_max_deviation_allocations(weights: &[u64], seats: u64) -> Vec<Vec<u64>> {
    let total: u64 = weights.iter().sum();
    let mut best = f64::INFINITY;
    let mut found: Vec<Vec<u64>> = Vec::new();
    let mut current = vec![0u64; weights.len()];
    fn walk(
        k: usize,
        left: u64,
        w: &[u64],
        total: u64,
        seats: u64,
        cur: &mut Vec<u64>,
        best: &mut f64,
        found: &mut Vec<Vec<u64>>,
    ) {
        if k == w.len() {
            if left != 0 {
                return;
            }
            let dev = w
                .iter()
                .zip(cur.iter())
                .map(|(&wi, &ti)| (ti as f64 / seats as f64 - wi as f64 / total as f64).abs())
                .fold(0.0, f64::max);
            if dev < *best - 1e-15 {
                *best = dev;
                found.clear();
            }
            if (dev - *best).abs() <= 1e-15 {
                found.push(cur.clone());
            }
            return;
        }
        let top = if w[k] == 0 { 0 } else { left };
        for x in (0..=top).rev() {
            cur[k] = x;
            walk(k + 1, left - x, w, total, seats, cur, best, found);
        }
        cur[k] = 0;
    }
    walk(
        0,
        seats,
        weights,
        total,
        seats,
        &mut current,
        &mut best,
        &mut found,
    );
    found
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity through explicitly normalised vectors.
pub fn cos(a: &[f64], b: &[f64]) -> f64 {
    let na: Vec<f64> = a.iter().map(|x| x / dot(a, a).sqrt()).collect();
    let nb: Vec<f64> = b.iter().map(|x| x / dot(b, b).sqrt()).collect();
    dot(&na, &nb)
}

/// Lowest similarity of each generated vector to any memory vector.
pub fn brute_representativeness(gen: &[Vec<f64>], mem: &[Vec<f64>]) -> Vec<f64> {
    gen.iter()
        .map(|g| mem.iter().map(|m| cos(g, m)).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Highest similarity of each vector to any other, over ordered pairs.
pub fn brute_diversity(gen: &[Vec<f64>]) -> Vec<f64> {
    (0..gen.len())
        .map(|i| {
            (0..gen.len())
                .filter(|&j| j != i)
                .map(|j| cos(&gen[i], &gen[j]))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Minimum within-cluster sum of squares over all 2-partitions.
pub fn best_two_partition_cost(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let dim = points[0].len();
    let cost = |members: &[&Vec<f64>]| -> f64 {
        let mut mean = vec![0.0; dim];
        for p in members {
            for d in 0..dim {
                mean[d] += p[d] / members.len() as f64;
            }
        }
        members
            .iter()
            .map(|p| (0..dim).map(|d| (p[d] - mean[d]).powi(2)).sum::<f64>())
            .sum()
    };
    let mut best = f64::INFINITY;
    // point 0 always in the first group
    for mask in 0u32..(1 << (n - 1)) {
        let mut a = vec![&points[0]];
        let mut b = Vec::new();
        for i in 1..n {
            if mask & (1 << (i - 1)) != 0 {
                a.push(&points[i]);
            } else {
                b.push(&points[i]);
            }
        }
        if b.is_empty() {
            continue;
        }
        best = best.min(cost(&a) + cost(&b));
    }
    best
}

/// Self-normalised importance-sampling estimate of `E[z0 | z_t]` with its
/// per-coordinate standard error, drawing `z0` from the mixture prior.
pub fn monte_carlo_posterior_mean(
    z_t: &[f64],
    t: usize,
    mixture: &Mixture,
    schedule: &NoiseSchedule,
    draws: usize,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    let ab = schedule.alpha_bar(t);
    let var = 1.0 - ab;
    let dim = mixture.dim;
    let mut r = rng(seed);
    let mut samples = Vec::with_capacity(draws);
    let mut log_w = Vec::with_capacity(draws);
    let cumulative: Vec<f64> = mixture
        .components
        .iter()
        .scan(0.0, |acc, c| {
            *acc += c.weight;
            Some(*acc)
        })
        .collect();
    let total_weight = *cumulative.last().unwrap();
    for _ in 0..draws {
        let u: f64 = r.gen::<f64>() * total_weight;
        let c = &mixture.components[cumulative
            .iter()
            .position(|&x| u < x)
            .unwrap_or(cumulative.len() - 1)];
        let z0: Vec<f64> = (0..dim)
            .map(|d| c.mean[d] + c.std * r.sample::<f64, _>(StandardNormal))
            .collect();
        let sq: f64 = (0..dim).map(|d| (z_t[d] - ab.sqrt() * z0[d]).powi(2)).sum();
        log_w.push(-sq / (2.0 * var));
        samples.push(z0);
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = w.iter().sum();
    let mean: Vec<f64> = (0..dim)
        .map(|d| w.iter().zip(&samples).map(|(wi, s)| wi * s[d]).sum::<f64>() / sum)
        .collect();
    let se: Vec<f64> = (0..dim)
        .map(|d| {
            let s: f64 = w
                .iter()
                .zip(&samples)
                .map(|(wi, x)| (wi * (x[d] - mean[d])).powi(2))
                .sum();
            s.sqrt() / sum
        })
        .collect();
    (mean, se)
}

/// One-sided sign-test p-value: probability of at least `wins` successes in
/// `n` fair coin flips.
pub fn sign_test_p(wins: u64, n: u64) -> f64 {
    let ln_choose = |k: u64| -> f64 { (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum() };
    (wins..=n)
        .map(|k| (ln_choose(k) - n as f64 * std::f64::consts::LN_2).exp())
        .sum()
}
