//! RSS against k for data mixed from three generators, with the elbow plot
//! written as SVG.
//!
//! cargo run --example elbow

use funarch::render::elbow_svg;
use funarch::{elbow_scan, FitOptions};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> funarch::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gens = [[0.0, 0.0, 1.0], [3.0, 1.0, 0.0], [1.0, 4.0, 2.0]];
    let mut x = Array2::<f64>::zeros((60, 3));
    for mut row in x.rows_mut() {
        let mut w: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0f64).powi(3)).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        for c in 0..3 {
            row[c] = (0..3).map(|g| w[g] * gens[g][c]).sum::<f64>() + rng.gen_range(-0.01..0.01);
        }
    }
    let report = elbow_scan(x.view(), &[1, 2, 3, 4, 5, 6], &FitOptions::default(), None)?;
    let mut points = Vec::new();
    for row in &report.rows {
        let rss = row.rss.unwrap_or(f64::NAN);
        println!("k = {}: rss = {rss:.4}", row.k);
        points.push((row.k, rss));
    }
    let out = std::env::temp_dir().join("funarch_elbow.svg");
    std::fs::write(&out, elbow_svg(&points))?;
    println!("plot written to {}", out.display());
    Ok(())
}
