//! Writes an SVG overlay of curves with their archetypes (solid) and
//! archetypoids (dashed).
//!
//! cargo run --example render_curves

use funarch::basis::uniform_grid;
use funarch::render::{curves_svg, Panel};
use funarch::{faa, fada, BasisSpec, FitOptions, FunctionalDataset};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> funarch::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let basis = BasisSpec::bspline(0.0, 1.0, 8, 4)?;
    let coef = Array2::from_shape_fn((25, 8), |_| rng.gen_range(-1.0..1.0));
    let ids = (0..25).map(|i| format!("c{i}")).collect();
    let fd = FunctionalDataset::new(basis.clone(), coef, ids, "signal")?;

    let opts = FitOptions::default();
    let aa = faa(&fd, 3, &opts)?;
    let ada = fada(&fd, 3, &opts)?;

    let grid = uniform_grid(0.0, 1.0, 101);
    let rows = |m: Array2<f64>| -> Vec<Vec<f64>> {
        m.dot(&basis.design_matrix(&grid).unwrap().t()).rows().into_iter().map(|r| r.to_vec()).collect()
    };
    let panel = Panel {
        title: "signal".into(),
        data: rows(fd.coefficients.clone()),
        archetypes: rows(aa.archetype_coefficients.clone()),
        archetypoids: rows(fd.coefficients.select(ndarray::Axis(0), &ada.indices)),
        grid,
    };
    let out = std::env::temp_dir().join("funarch_curves.svg");
    std::fs::write(&out, curves_svg(&[panel]))?;
    println!("archetypoids {:?}; overlay written to {}", ada.indices, out.display());
    Ok(())
}
