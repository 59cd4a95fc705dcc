mod common;

use dgs::dag::kmeans::{interval_kmeans, kmeans, lloyd, ClusterParams};
use dgs::dag::{
    gmm_posterior_mean, reverse_sample, Component, GuidanceSpec, Mixture, NoiseSchedule,
};
use dgs::distribution::{
    apportion, histogram, kde_curve_on, predefined_plan, scale_to_ipc, Bandwidth, Shape,
};
use dgs::manifest::{Item, Manifest, Role};
use dgs::metrics::{bias_report, diversity, representativeness, VectorSet};
use dgs::rng::{substream, StreamKey};
use dgs::sampler::{dgs_run, DgsConfig};
use dgs::smoothing::{kl_divergence, search_thresholds, ThresholdGrid, DEFAULT_LAMBDA};
use dgs::synthetic::{generate, FixtureSpec};
use rand::Rng;

use common::*;

#[test]
fn hamilton_equal_quotas_break_ties_low() {
    let mut counts = [0u64; 10];
    counts[..3].copy_from_slice(&[1, 1, 1]);
    let plan = scale_to_ipc(
        &dgs::distribution::DifficultyHistogram::from_counts("c", counts),
        2,
    )
    .unwrap();
    assert_eq!(plan.targets, [1, 1, 0, 0, 0, 0, 0, 0, 0, 0]);
}

#[test]
fn hamilton_agrees_with_min_max_deviation_oracle() {
    let optimal = min_max_deviation_allocations(&[5, 0, 5], 7);
    assert_eq!(optimal, vec![vec![4, 0, 3], vec![3, 0, 4]]);
    assert_eq!(apportion(&[5, 0, 5], 7).unwrap(), optimal[0]);

    let mut r = rng(11);
    for _ in 0..300 {
        let len = r.gen_range(1..=4);
        let weights: Vec<u64> = (0..len).map(|_| r.gen_range(0..6)).collect();
        if weights.iter().all(|&w| w == 0) {
            continue;
        }
        let seats = r.gen_range(1..=9);
        let got = apportion(&weights, seats).unwrap();
        let optimal = min_max_deviation_allocations(&weights, seats);
        assert!(
            optimal.contains(&got),
            "{weights:?} {seats}: {got:?} not in {optimal:?}"
        );
    }
}

#[test]
fn slope_with_exact_proportions() {
    assert_eq!(
        predefined_plan("c", Shape::Slope, 55).unwrap().targets,
        [10, 9, 8, 7, 6, 5, 4, 3, 2, 1]
    );
}

#[test]
fn kde_mass_by_trapezoid_quadrature() {
    let mut r = rng(3);
    for n in [1, 5, 40] {
        let values: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
        for bw in [
            Bandwidth::Auto,
            Bandwidth::Fixed(0.05),
            Bandwidth::Fixed(0.3),
        ] {
            let curve = kde_curve_on(&values, bw, -3.0, 4.0, 4001).unwrap();
            let mass: f64 = curve
                .windows(2)
                .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
                .sum();
            assert!((mass - 1.0).abs() < 1e-2, "mass {mass}");
        }
    }
}

#[test]
fn point_mass_against_uniform_is_ln_10() {
    let mut p = [0.0; 10];
    p[0] = 1.0;
    let kl = kl_divergence(&p, &[1.0; 10]).unwrap();
    assert!((kl - 10f64.ln()).abs() < 1e-6);
}

#[test]
fn threshold_search_matches_exhaustive_oracle_on_40_values() {
    let mut r = rng(40);
    let values: Vec<f64> = (0..40).map(|_| r.gen::<f64>()).collect();
    let ids: Vec<String> = (0..40).map(|i| format!("x{i:02}")).collect();
    let percents = [0, 5, 10, 15, 20];
    let grid = ThresholdGrid {
        percents: percents.to_vec(),
    };
    let got = search_thresholds("c", &values, &ids, DEFAULT_LAMBDA, &grid).unwrap();
    let (b, t, objective) = exhaustive_search(&values, &ids, DEFAULT_LAMBDA, &percents).unwrap();
    assert_eq!((got.clip.bottom, got.clip.top), (b, t));
    assert_eq!(got.objective, objective);
}

#[test]
fn metrics_match_pairwise_brute_force() {
    let mut r = rng(5);
    let draw = |r: &mut rand_chacha::ChaCha8Rng, n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..3).map(|_| r.gen_range(-1.0..1.0)).collect())
            .collect()
    };
    let set = |v: &[Vec<f64>]| {
        VectorSet::new((0..v.len()).map(|i| format!("v{i}")).collect(), v.to_vec()).unwrap()
    };

    let gen = draw(&mut r, 3);
    let mem = draw(&mut r, 3);
    let rep = representativeness(&set(&gen), &set(&mem)).unwrap();
    for (a, b) in rep
        .per_item
        .iter()
        .zip(brute_representativeness(&gen, &mem))
    {
        assert!((a - b).abs() < 1e-12);
    }

    let four = draw(&mut r, 4);
    let div = diversity(&set(&four)).unwrap();
    for (a, b) in div.per_item.iter().zip(brute_diversity(&four)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn fixture_pool_shows_easy_bias() {
    let fixture = generate(&FixtureSpec::default()).unwrap();
    for bias in bias_report(&fixture.original, &fixture.pool).unwrap() {
        assert!(bias.mean_gap < 0.0, "{}: gap {}", bias.label, bias.mean_gap);
        assert!(bias.easiest_share_ratio.unwrap() > 1.0);
    }
}

#[test]
fn smoothing_reduces_deficit_on_fixture() {
    let fixture = generate(&FixtureSpec::default()).unwrap();
    let mut config = DgsConfig::new(50);
    let smoothed = dgs_run(&fixture.original, &fixture.pool, &config).unwrap();
    config.smoothing = false;
    let raw = dgs_run(&fixture.original, &fixture.pool, &config).unwrap();
    assert!(raw.report.classes.iter().any(|c| !c.spills.is_empty()));
    assert!(smoothed.report.total_deficit < raw.report.total_deficit);
}

#[test]
fn six_point_kmeans_matches_partition_oracle() {
    let mut r = rng(6);
    for case in 0..50 {
        let points: Vec<Vec<f64>> = (0..6)
            .map(|_| vec![r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)])
            .collect();
        let mut stream = substream(case, &StreamKey::new("test/kmeans"));
        let fit = kmeans(&points, 2, &mut stream, 100, 10).unwrap();
        let oracle = best_two_partition_cost(&points);
        assert!(
            (fit.cost() - oracle).abs() <= 1e-9 * oracle.max(1.0),
            "case {case}: {} vs {oracle}",
            fit.cost()
        );
    }
}

#[test]
fn lloyd_cost_never_increases() {
    let mut r = rng(7);
    let points: Vec<Vec<f64>> = (0..80)
        .map(|_| (0..3).map(|_| r.gen::<f64>()).collect())
        .collect();
    let mut stream = substream(0, &StreamKey::new("test/lloyd"));
    let fit = lloyd(&points, 5, &mut stream, 100).unwrap();
    for w in fit.cost_history.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12));
    }
}

#[test]
fn interval_centers_follow_plan_targets() {
    let spec = FixtureSpec {
        classes: 2,
        original_per_class: 150,
        latent_dim: 3,
        ..FixtureSpec::default()
    };
    let fixture = generate(&spec).unwrap();
    for (label, items) in fixture.original.by_label() {
        let plan = scale_to_ipc(
            &histogram(label, items.iter().map(|it| it.difficulty)).unwrap(),
            10,
        )
        .unwrap();
        let centers = interval_kmeans(&items, &plan, &ClusterParams::default()).unwrap();
        let mut counts = [0u64; 10];
        for ic in &centers {
            counts[ic.interval] = ic.centers.len() as u64;
        }
        assert_eq!(counts, plan.targets);
    }
}

#[test]
fn one_dimensional_posterior_mean_matches_monte_carlo() {
    let mixture = Mixture::new(
        1,
        vec![
            Component {
                weight: 0.3,
                mean: vec![-1.0],
                std: 0.4,
            },
            Component {
                weight: 0.7,
                mean: vec![1.5],
                std: 0.6,
            },
        ],
    )
    .unwrap();
    let schedule = NoiseSchedule::default();
    let t = schedule.steps() / 2;
    let z_t = [0.3];
    let exact = gmm_posterior_mean(&z_t, t, &mixture, &schedule).unwrap();
    let (mc, se) = monte_carlo_posterior_mean(&z_t, t, &mixture, &schedule, 1_000_000, 1);
    assert!(
        (exact[0] - mc[0]).abs() < 3.0 * se[0],
        "{} vs {} ± {}",
        exact[0],
        mc[0],
        se[0]
    );
}

#[test]
fn zero_guidance_matches_unguided_distribution() {
    let mixture = Mixture::new(
        2,
        vec![
            Component {
                weight: 0.5,
                mean: vec![-2.0, 0.0],
                std: 0.3,
            },
            Component {
                weight: 0.5,
                mean: vec![2.0, 0.0],
                std: 0.3,
            },
        ],
    )
    .unwrap();
    let schedule = NoiseSchedule::default();
    let spec = GuidanceSpec::new(vec![2.0, 0.0], 0.0, 25);
    let finals = |guided: bool, offset: u64| -> Vec<Vec<f64>> {
        (0..500)
            .map(|s| {
                reverse_sample(&schedule, &mixture, guided.then_some(&spec), offset + s)
                    .unwrap()
                    .final_sample()
                    .to_vec()
            })
            .collect()
    };
    let a = finals(true, 0);
    let b = finals(false, 10_000);
    for d in 0..2 {
        let stats = |xs: &[Vec<f64>]| {
            let n = xs.len() as f64;
            let m = xs.iter().map(|x| x[d]).sum::<f64>() / n;
            let v = xs.iter().map(|x| (x[d] - m).powi(2)).sum::<f64>() / (n - 1.0);
            (m, v / n)
        };
        let (ma, va) = stats(&a);
        let (mb, vb) = stats(&b);
        let z = (ma - mb) / (va + vb).sqrt();
        assert!(z.abs() < 2.576, "axis {d}: z = {z}");
    }
}

#[test]
fn manifest_items_survive_dataset_round_trip() {
    let items: Vec<Item> = (0..30)
        .map(|i| Item::from_prob_true(format!("i{i}"), "c", (i as f64 * 0.0337).fract()).unwrap())
        .collect();
    let m = Manifest::new(items, Role::Original).unwrap();
    let text = m.to_jsonl().unwrap();
    let back = dgs::manifest::parse_manifest(&text, Role::Original).unwrap();
    assert_eq!(back.to_jsonl().unwrap(), text);
}

fn energy_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let d = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mean = |u: &[Vec<f64>], v: &[Vec<f64>]| {
        u.iter()
            .flat_map(|x| v.iter().map(move |y| d(x, y)))
            .sum::<f64>()
            / (u.len() * v.len()) as f64
    };
    2.0 * mean(a, b) - mean(a, a) - mean(b, b)
}

// Independent direct-draw pairs of this size land between 0.002 and 0.008.
const ENERGY_THRESHOLD: f64 = 0.02;

#[test]
fn unguided_samples_follow_the_mixture() {
    let mixture = Mixture::new(
        2,
        vec![
            Component {
                weight: 0.3,
                mean: vec![-2.0, 0.5],
                std: 0.4,
            },
            Component {
                weight: 0.7,
                mean: vec![1.5, -0.5],
                std: 0.6,
            },
        ],
    )
    .unwrap();
    let schedule = NoiseSchedule::default();
    let generated: Vec<Vec<f64>> = (0..1000)
        .map(|s| {
            reverse_sample(&schedule, &mixture, None, s)
                .unwrap()
                .final_sample()
                .to_vec()
        })
        .collect();
    let mut stream = substream(0, &StreamKey::new("test/direct"));
    let direct: Vec<Vec<f64>> = (0..1000).map(|_| mixture.sample(&mut stream)).collect();
    let e = energy_distance(&generated, &direct);
    assert!(e < ENERGY_THRESHOLD, "energy distance {e}");
}

#[test]
fn forward_diffusion_keeps_unit_second_moment() {
    let schedule = NoiseSchedule::default();
    let dim = 4;
    let mut r = rng(9);
    for t in [1, 10, 25, 50] {
        let draws = 1_000_000 / dim;
        let mut total = 0.0;
        for _ in 0..draws {
            let z0: Vec<f64> = (0..dim)
                .map(|_| r.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let noise: Vec<f64> = (0..dim)
                .map(|_| r.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let z = dgs::dag::forward_diffuse(&z0, t, &schedule, &noise).unwrap();
            total += z.iter().map(|x| x * x).sum::<f64>();
        }
        let m = total / draws as f64;
        assert!((m - dim as f64).abs() < 0.01 * dim as f64, "t {t}: {m}");
    }
}
