//! Turn a difficulty histogram into per-interval budgets, either by scaling
//! it or by imposing one of the built-in shapes.

use dgs::distribution::{apportion, histogram, predefined_plan, scale_to_ipc, Shape};

pub fn run_example() -> dgs::Result<()> {
    let difficulties = [
        0.02, 0.05, 0.08, 0.11, 0.14, 0.19, 0.23, 0.31, 0.33, 0.47, 0.52, 0.68, 0.91, 1.0,
    ];
    let hist = histogram("demo", difficulties)?;
    println!("counts  {:?} (total {})", hist.counts, hist.total);

    for ipc in [1, 5, 10, 50] {
        let plan = scale_to_ipc(&hist, ipc)?;
        println!("scale   ipc={ipc:<3} {:?}", plan.targets);
    }
    for shape in Shape::ALL {
        let plan = predefined_plan("demo", shape, 20)?;
        println!("{:<7} ipc=20  {:?}", shape.name(), plan.targets);
    }

    // largest remainders win; equal remainders go to the lower interval
    println!("apportion([5, 0, 5], 7) = {:?}", apportion(&[5, 0, 5], 7)?);
    println!("apportion([1, 1, 1], 2) = {:?}", apportion(&[1, 1, 1], 2)?);
    Ok(())
}

fn main() -> dgs::Result<()> {
    run_example()
}
