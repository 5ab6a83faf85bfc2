//! Archetypoids are observations: the medoid for k = 1, and the generators
//! of a planted mixture for larger k.
//!
//! cargo run --example archetypoids

use funarch::{fit_archetypoids, FitOptions};
use ndarray::{array, Array2};

fn main() -> funarch::Result<()> {
    let generators = array![[0.0, 0.0, 0.0], [5.0, 0.0, 1.0], [0.0, 4.0, 2.0]];
    let mut rows = generators.clone().into_raw_vec();
    for (a, b) in [(0.2, 0.3), (0.5, 0.1), (0.3, 0.3), (0.1, 0.6), (0.4, 0.4)] {
        let w = [1.0 - a - b, a, b];
        for c in 0..3 {
            rows.push((0..3).map(|g| w[g] * generators[[g, c]]).sum());
        }
    }
    let x = Array2::from_shape_vec((rows.len() / 3, 3), rows).unwrap();

    let opts = FitOptions::default();
    let medoid = fit_archetypoids(x.view(), 1, &opts, None)?;
    println!("k = 1: medoid is row {}", medoid.indices[0]);

    let model = fit_archetypoids(x.view(), 3, &opts, None)?;
    println!("k = 3: rows {:?}, rss = {:.2e}", model.indices, model.rss);
    println!("      chosen from {:?} after {} swaps", model.init_used, model.swap_steps);
    for c in &model.candidates {
        println!("      {:<10} start {:?} -> {:?} (rss {:.2e})", c.which.as_str(), c.init, c.indices, c.rss);
    }
    Ok(())
}
