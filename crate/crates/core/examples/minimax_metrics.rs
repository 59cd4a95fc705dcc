//! Score a distilled set with the minimax representativeness and diversity
//! metrics and summarise the pool's difficulty bias.

use dgs::metrics::{bias_report, diversity, representativeness, VectorSet};
use dgs::sampler::{dgs_run, DgsConfig};
use dgs::synthetic::{generate, FixtureSpec};

pub fn run_example() -> dgs::Result<()> {
    let spec = FixtureSpec {
        classes: 2,
        original_per_class: 200,
        ipc: 10,
        latent_dim: 8,
        ..FixtureSpec::default()
    };
    let fixture = generate(&spec)?;
    let distilled = dgs_run(&fixture.original, &fixture.pool, &DgsConfig::new(spec.ipc))?.distilled;

    let originals = fixture.original.by_label();
    for (label, picked) in distilled.by_label() {
        let gen = VectorSet::from_items(&picked)?;
        let memory = VectorSet::from_items(&originals[label])?;
        let rep = representativeness(&gen, &memory)?;
        let div = diversity(&gen)?;
        // higher representativeness and lower diversity score are better
        println!(
            "{label}: representativeness {:.4}  diversity {:.4}",
            rep.aggregate, div.aggregate
        );
    }

    for bias in bias_report(&fixture.original, &fixture.pool)? {
        let delta: Vec<String> = bias
            .interval_delta
            .iter()
            .map(|d| format!("{d:+.2}"))
            .collect();
        println!(
            "{} pool-original share [{}] mean gap {:+.3}",
            bias.label,
            delta.join(" "),
            bias.mean_gap
        );
    }
    Ok(())
}

fn main() -> dgs::Result<()> {
    run_example()
}
