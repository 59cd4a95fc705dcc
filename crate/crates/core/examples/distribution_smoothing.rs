//! Smooth one class of a synthetic dataset and compare the histograms before
//! and after, for a few values of lambda.

use dgs::distribution::histogram;
use dgs::smoothing::{search_thresholds, ThresholdGrid};
use dgs::synthetic::{generate, FixtureSpec};

pub fn run_example() -> dgs::Result<()> {
    let fixture = generate(&FixtureSpec {
        classes: 1,
        original_per_class: 400,
        ..FixtureSpec::default()
    })?;
    let items = fixture.original.class_items("class00");
    let values: Vec<f64> = items.iter().map(|it| it.difficulty).collect();
    let ids: Vec<&str> = items.iter().map(|it| it.id.as_str()).collect();

    println!(
        "raw            {:?}",
        histogram("class00", values.iter().copied())?.counts
    );
    let grid = ThresholdGrid::default();
    for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let best = search_thresholds("class00", &values, &ids, lambda, &grid)?;
        let smoothed = histogram("class00", best.transformed.iter().copied())?;
        println!(
            "lambda={lambda:<4} b={:<3} t={:<3} {:?} objective {:.4}",
            best.clip.bottom, best.clip.top, smoothed.counts, best.objective
        );
    }
    Ok(())
}

fn main() -> dgs::Result<()> {
    run_example()
}
