//! Write KDE curves and an SVG chart comparing original, pool and smoothed
//! difficulty distributions of one class.

use dgs::distribution::{histogram, kde_curve, Bandwidth};
use dgs::plot::{curve_csv, render_svg, Series};
use dgs::smoothing::{smooth_dataset, ThresholdGrid, DEFAULT_LAMBDA};
use dgs::synthetic::{generate, FixtureSpec};

pub fn run_example() -> dgs::Result<()> {
    let fixture = generate(&FixtureSpec {
        classes: 1,
        ..FixtureSpec::default()
    })?;
    let smoothing = smooth_dataset(&fixture.original, DEFAULT_LAMBDA, &ThresholdGrid::default())?;

    let original: Vec<f64> = fixture
        .original
        .items
        .iter()
        .map(|it| it.difficulty)
        .collect();
    let pool: Vec<f64> = fixture.pool.items.iter().map(|it| it.difficulty).collect();
    let smoothed = smoothing
        .class("class00")
        .expect("one class")
        .transformed
        .clone();

    let inputs = [
        ("original", "#1f77b4", original),
        ("pool", "#d62728", pool),
        ("smoothed", "#2ca02c", smoothed),
    ];
    let mut hists = Vec::new();
    let mut curves = Vec::new();
    for (_, _, values) in &inputs {
        hists.push(histogram("class00", values.iter().copied())?);
        curves.push(kde_curve(values, Bandwidth::Auto, 101)?);
    }
    let series: Vec<Series> = inputs
        .iter()
        .zip(hists.iter().zip(&curves))
        .map(|((name, color, _), (h, c))| Series {
            name,
            color,
            histogram: h,
            curve: c,
        })
        .collect();

    let dir = std::env::temp_dir().join("dgs-kde-report");
    std::fs::create_dir_all(&dir).map_err(|e| dgs::Error::io(&dir, e))?;
    for ((name, _, _), curve) in inputs.iter().zip(&curves) {
        let path = dir.join(format!("class00_{name}.csv"));
        std::fs::write(&path, curve_csv(curve)).map_err(|e| dgs::Error::io(&path, e))?;
    }
    let svg = dir.join("class00.svg");
    std::fs::write(&svg, render_svg("class00", &series)).map_err(|e| dgs::Error::io(&svg, e))?;
    println!("wrote {}", svg.display());
    Ok(())
}

fn main() -> dgs::Result<()> {
    run_example()
}
