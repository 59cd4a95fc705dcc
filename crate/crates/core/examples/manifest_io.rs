//! Build a manifest in memory, write it as JSON Lines, load it back and see
//! how the loader reports malformed input.

use dgs::manifest::{parse_manifest, Item, Manifest, Role};
use dgs::{load_manifest, write_manifest};

pub fn run_example() -> dgs::Result<()> {
    let items = vec![
        Item::from_prob_true("img-0001", "tench", 0.92)?
            .with_latent(vec![0.5, 0.5, 0.1])
            .with_path("train/tench/0001.jpg"),
        Item::from_prob_true("img-0002", "tench", 0.35)?.with_latent(vec![-0.2, 0.9, 0.0]),
        Item::from_difficulty("img-0003", "goldfish", 0.4)?.with_latent(vec![0.1, -0.3, 0.7]),
        Item::from_difficulty("img-0004", "goldfish", 0.05)?.with_latent(vec![0.0, 0.2, 0.4]),
    ];
    // latents are all-or-nothing with one dimension per manifest
    let manifest = Manifest::new(items, Role::Original)?;

    let dir = tempfile::tempdir().map_err(|e| dgs::Error::io("tempdir", e))?;
    let path = dir.path().join("original.jsonl");
    write_manifest(&manifest, &path)?;
    let text = std::fs::read_to_string(&path).map_err(|e| dgs::Error::io(&path, e))?;
    print!("{text}");

    let back = load_manifest(&path)?;
    assert_eq!(back.items, manifest.items);
    for (label, items) in back.by_label() {
        let mean = items.iter().map(|it| it.difficulty).sum::<f64>() / items.len() as f64;
        println!("{label}: {} items, mean difficulty {mean:.3}", items.len());
    }

    let broken = concat!(
        "{\"id\":\"a\",\"label\":\"x\",\"prob_true\":0.5}\n",
        "{\"id\":\"a\",\"label\":\"x\",\"prob_true\":0.4}\n",
        "{\"id\":\"b\",\"label\":\"x\",\"prob_true\":1.5}\n",
        "{\"id\":\"c\",\"label\":\"x\",\"score\":0.2}\n",
        "{\"id\":\"d\",\"label\":\"x\",\"difficulty\":0.2,\"latent\":[1.0]}\n",
    );
    match parse_manifest(broken, Role::Original) {
        Ok(_) => unreachable!("the input above is invalid"),
        Err(problems) => {
            for p in problems {
                println!("rejected: {p}");
            }
        }
    }
    Ok(())
}

fn main() -> dgs::Result<()> {
    run_example()
}
