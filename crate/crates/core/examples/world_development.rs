//! Fertility and life expectancy curves, 1960-2013: bivariate standardized
//! archetypoids in 32 cubic B-splines. Pass `--scan` for k = 3..=6.
//!
//! cargo run --release --example world_development [-- --scan]

use std::fs::File;
use std::path::Path;

use funarch::functional::{k_scan_archetypoids, DEFAULT_STANDARDIZE_GRID};
use funarch::io::read_wide;
use funarch::{fada, standardize, BasisSpec, FitOptions, FunctionalDataset, MultivariateFunctionalDataset};

fn load(name: &str, basis: &BasisSpec) -> funarch::Result<FunctionalDataset> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(format!("world_{name}.csv"));
    let curves = read_wide(File::open(path)?, name)?;
    let fd = FunctionalDataset::from_curves(basis.clone(), &curves.curves, name)?;
    standardize(&fd, DEFAULT_STANDARDIZE_GRID)
}

fn main() -> funarch::Result<()> {
    let basis = BasisSpec::bspline(1960.0, 2013.0, 32, 4)?;
    let mfd = MultivariateFunctionalDataset::new(vec![load("tfr", &basis)?, load("leb", &basis)?])?;
    let ids = mfd.ids().to_vec();
    let opts = FitOptions::default();

    let model = fada(&mfd, 5, &opts)?;
    let names: Vec<&str> = model.indices.iter().map(|&i| ids[i].as_str()).collect();
    println!("archetypoids (k = 5): {names:?}");
    for country in ["Turkey", "Morocco", "Japan", "Botswana"] {
        if let Some(i) = ids.iter().position(|c| c == country) {
            println!("  {country:<10} {:.2}", model.alpha.row(i));
        }
    }

    if std::env::args().any(|a| a == "--scan") {
        for row in k_scan_archetypoids(&mfd, &[3, 4, 5, 6], &opts)? {
            println!("k = {}: {:?} (rss {:.1})", row.k, row.ids, row.rss);
        }
    }
    Ok(())
}
