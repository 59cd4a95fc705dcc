//! End to end: sample a distilled set from an easy-biased pool so that its
//! difficulty profile follows the original dataset.

use dgs::distribution::histogram;
use dgs::sampler::{dgs_run, DeficitRule, DgsConfig, Strategy};
use dgs::synthetic::{generate, FixtureSpec};

pub fn run_example() -> dgs::Result<()> {
    let spec = FixtureSpec {
        classes: 3,
        original_per_class: 300,
        ipc: 20,
        ..FixtureSpec::default()
    };
    let fixture = generate(&spec)?;

    let mut config = DgsConfig::new(spec.ipc);
    config.policy.strategy = Strategy::SeededRandom;
    config.policy.deficit_rule = DeficitRule::AdjacentSpill;
    let smoothed = dgs_run(&fixture.original, &fixture.pool, &config)?;
    config.smoothing = false;
    let raw = dgs_run(&fixture.original, &fixture.pool, &config)?;

    for class in &smoothed.report.classes {
        println!("{}", class.label);
        println!("  targets  {:?}", class.targets);
        println!("  supply   {:?}", class.supply);
        println!(
            "  achieved {:?}  spills {}",
            class.achieved,
            class.spills.len()
        );
        let picked = smoothed.distilled.class_items(&class.label);
        let hist = histogram(class.label.clone(), picked.iter().map(|it| it.difficulty))?;
        println!("  raw difficulty of picks {:?}", hist.counts);
    }
    println!(
        "unresolved deficit: smoothed {} vs raw {}",
        smoothed.report.total_deficit, raw.report.total_deficit
    );
    println!("distilled items: {}", smoothed.distilled.items.len());
    Ok(())
}

fn main() -> dgs::Result<()> {
    run_example()
}
