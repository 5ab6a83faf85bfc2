//! Archetypes of points scattered in a square sit on the corners.
//!
//! cargo run --example aa_square

use funarch::{fit_archetypes, FitOptions};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> funarch::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = Array2::from_shape_fn((300, 2), |_| rng.gen_range(0.0..1.0));

    for k in 1..=4 {
        let model = fit_archetypes(x.view(), k, &FitOptions::default(), None)?;
        println!("k = {k}: rss = {:.4}, converged = {}", model.rss, model.converged);
        for z in model.archetypes.rows() {
            println!("    ({:.3}, {:.3})", z[0], z[1]);
        }
    }
    Ok(())
}
