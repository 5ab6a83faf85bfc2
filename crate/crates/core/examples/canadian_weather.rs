//! Monthly mean temperatures of 35 Canadian stations in a 12-term Fourier
//! basis: functional archetypes and archetypoids for k = 4.
//!
//! cargo run --release --example canadian_weather

use std::fs::File;
use std::path::Path;

use funarch::io::read_wide;
use funarch::{faa, fada, BasisSpec, FitOptions, FunctionalDataset};

fn main() -> funarch::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/canadian_monthly_temp.csv");
    let temp = read_wide(File::open(path)?, "temperature")?;
    let basis = BasisSpec::fourier(0.0, 12.0, 12)?;
    let fd = FunctionalDataset::from_curves(basis, &temp.curves, "temperature")?;
    let opts = FitOptions::default();

    let aa = faa(&fd, 4, &opts)?;
    println!("archetypes: rss = {:.2}", aa.rss());
    for (j, b) in aa.model.beta.rows().into_iter().enumerate() {
        let mut top: Vec<(usize, f64)> = b.iter().copied().enumerate().filter(|(_, w)| *w > 0.05).collect();
        top.sort_by(|a, b| b.1.total_cmp(&a.1));
        let parts: Vec<String> = top.iter().map(|(i, w)| format!("{:.2} {}", w, fd.ids[*i])).collect();
        println!("  a{}: {}", j + 1, parts.join(" + "));
    }

    let ada = fada(&fd, 4, &opts)?;
    let names: Vec<&str> = ada.indices.iter().map(|&i| fd.ids[i].as_str()).collect();
    println!("archetypoids: {names:?}, rss = {:.2}", ada.rss);
    println!("\nshares of each station:");
    println!("{:<12} {}", "", names.iter().map(|n| format!("{n:>9}")).collect::<String>());
    for (id, row) in fd.ids.iter().zip(ada.alpha.rows()) {
        println!("{id:<12} {}", row.iter().map(|v| format!("{v:>9.2}")).collect::<String>());
    }
    Ok(())
}
