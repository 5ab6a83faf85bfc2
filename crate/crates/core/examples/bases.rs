//! Basis expansions: evaluation, Gram matrices and least-squares fits of
//! sampled curves, including one with missing observations.
//!
//! cargo run --example bases

use funarch::basis::uniform_grid;
use funarch::{evaluate_curve, fit_coefficients, gram_matrix, BasisSpec, SampledCurve};

fn main() -> funarch::Result<()> {
    let fourier = BasisSpec::fourier(0.0, 12.0, 5)?;
    let bspline = BasisSpec::bspline(0.0, 12.0, 7, 4)?;
    println!("B-spline knots: {:?}", bspline.knot_vector().unwrap());
    println!("B-spline values at t = 5: {:.4}", bspline.evaluate(5.0)?);

    let g = gram_matrix(&bspline)?;
    println!("B-spline Gram matrix (sums to {:.6}):\n{:.4}", g.values.sum(), g.values);
    println!("Fourier Gram matrix is the identity: {}", gram_matrix(&fourier)?.values == ndarray::Array2::<f64>::eye(5));

    // a seasonal curve observed on 10 of 12 months
    let t: Vec<f64> = (0..12).filter(|m| *m != 3 && *m != 7).map(|m| m as f64 + 0.5).collect();
    let y: Vec<f64> = t.iter().map(|t| 5.0 - 12.0 * (std::f64::consts::PI * t / 6.0).cos()).collect();
    let curve = SampledCurve::new("station", t, y)?;
    for spec in [&fourier, &bspline] {
        let c = fit_coefficients(spec, &curve)?;
        let grid = uniform_grid(0.0, 12.0, 7);
        let v = evaluate_curve(spec, c.view(), &grid)?;
        println!("{:?}: {:.2?}", spec.kind, v);
    }
    Ok(())
}
