//! Archetypoids need not be vertices of the convex hull: x4 = (x2 + x3) / 2
//! is chosen together with x1.
//!
//! cargo run --example four_functions

use funarch::{fada, BasisSpec, FitOptions, FunctionalDataset};
use ndarray::array;

fn main() -> funarch::Result<()> {
    // step functions on [0, 1] with a break at 0.5
    let basis = BasisSpec::bspline_with_knots(0.0, 1.0, 1, vec![0.5])?;
    let coef = array![[0.0, 0.0], [1.0, 0.8], [0.8, 1.0], [0.9, 0.9]];
    let ids = ["x1", "x2", "x3", "x4"].map(String::from).to_vec();
    let fd = FunctionalDataset::new(basis, coef, ids, "x")?;

    let model = fada(&fd, 2, &FitOptions::default())?;
    let names: Vec<&str> = model.indices.iter().map(|&i| fd.ids[i].as_str()).collect();
    println!("archetypoids: {names:?}, rss = {:.4}", model.rss);
    for (id, row) in fd.ids.iter().zip(model.alpha.rows()) {
        println!("  {id}: {:.3}", row);
    }
    Ok(())
}
