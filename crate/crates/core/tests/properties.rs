mod common;

use std::collections::BTreeMap;

use common::*;
use funarch::functional::metric_transform;
use funarch::io::read_long;
use funarch::linalg::{nnls_solve, simplex_ls};
use funarch::{
    fit_archetypes, fit_archetypoids, gram_matrix, rss, standardize, swap_optimize, BasisSpec, FitOptions,
    FunctionalDataset, SolverOptions,
};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn matrix(rows: std::ops::RangeInclusive<usize>, cols: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Array2<f64>> {
    (rows, cols).prop_flat_map(|(n, m)| {
        proptest::collection::vec(-10.0..10.0f64, n * m)
            .prop_map(move |v| Array2::from_shape_vec((n, m), v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nnls_satisfies_kkt(t in matrix(2..=8, 1..=5), seed in any::<u64>()) {
        let u: Array1<f64> = Array1::from_shape_fn(t.nrows(), |i| ((seed >> (i % 60)) & 0xff) as f64 / 25.0 - 5.0);
        let w = nnls_solve(t.view(), u.view(), &SolverOptions::default()).unwrap();
        prop_assert!(w.iter().all(|&v| v >= 0.0));
        let grad = t.t().dot(&(&u - &t.dot(&w)));
        let scale = 1.0 + t.iter().fold(0.0f64, |a, v| a.max(v.abs())) * (1.0 + u.dot(&u).sqrt());
        for (g, wv) in grad.iter().zip(&w) {
            prop_assert!(*g <= 1e-7 * scale, "gradient {g} would improve");
            if *wv > 0.0 {
                prop_assert!(g.abs() <= 1e-7 * scale, "gradient {g} on a free coordinate");
            }
        }
    }

    // the penalty row is sized for unit-scale inputs; fits rescale first
    #[test]
    fn simplex_weights_are_feasible(t in matrix(1..=6, 1..=6), u in proptest::collection::vec(-1.0..1.0f64, 6)) {
        let t = t / 10.0;
        let u = Array1::from(u[..t.nrows()].to_vec());
        let w = simplex_ls(t.view(), u.view(), &SolverOptions::default()).unwrap();
        prop_assert!(w.iter().all(|&v| v >= 0.0));
        prop_assert!((w.sum() - 1.0).abs() <= 1e-3, "sum {}", w.sum());
    }

    #[test]
    fn bspline_partition_of_unity(size in 1usize..20, order in 1usize..6, t in 0.0..=1.0f64) {
        prop_assume!(size >= order);
        let spec = BasisSpec::bspline(-2.0, 3.0, size, order).unwrap();
        let v = spec.evaluate(-2.0 + 5.0 * t).unwrap();
        prop_assert!(v.iter().all(|&b| b >= -1e-15));
        prop_assert!((v.sum() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn bspline_gram_is_symmetric_and_sums_to_length(size in 1usize..25, order in 1usize..6, a in -5.0..5.0f64, len in 0.1..20.0f64) {
        prop_assume!(size >= order);
        let g = gram_matrix(&BasisSpec::bspline(a, a + len, size, order).unwrap()).unwrap().values;
        prop_assert_eq!(&g, &g.t());
        prop_assert!((g.sum() - len).abs() <= 1e-10 * len.max(1.0));
    }

    #[test]
    fn metric_rss_equals_transformed_rss(x in matrix(3..=8, 4..=4), seed in 0u64..1000) {
        let w = gram_matrix(&BasisSpec::bspline(0.0, 1.0, 4, 3).unwrap()).unwrap();
        let model = fit_archetypes(x.view(), 2, &FitOptions { seed, restarts: 2, ..Default::default() }, Some(&w)).unwrap();
        let direct = rss(x.view(), model.alpha.view(), model.archetypes.view(), Some(&w)).unwrap();
        let y = metric_transform(x.view(), &w).unwrap();
        let zy = metric_transform(model.archetypes.view(), &w).unwrap();
        let via = rss(y.view(), model.alpha.view(), zy.view(), None).unwrap();
        prop_assert!((direct - via).abs() <= 1e-9 * (1.0 + direct));
        prop_assert!((direct - model.rss).abs() <= 1e-6 * (1.0 + direct));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn archetype_fit_invariants(x in matrix(4..=20, 1..=4), k in 2usize..5, seed in 0u64..1000) {
        prop_assume!(k <= x.nrows());
        let model = fit_archetypes(x.view(), k, &FitOptions { seed, restarts: 3, ..Default::default() }, None).unwrap();
        for m in [&model.alpha, &model.beta] {
            prop_assert!(m.iter().all(|&v| v >= 0.0));
            prop_assert!(row_sums(m.view()).iter().all(|s| (s - 1.0).abs() <= 1e-3));
        }
        let z = model.beta.dot(&x);
        prop_assert!((&z - &model.archetypes).iter().all(|d| d.abs() <= 1e-8 * (1.0 + z.iter().fold(0.0f64, |a, v| a.max(v.abs())))));
        prop_assert!(model.rss >= 0.0);
    }

    #[test]
    fn archetypoid_fit_invariants(x in matrix(4..=14, 1..=3), k in 1usize..4, seed in 0u64..1000) {
        prop_assume!(k <= x.nrows());
        let opts = FitOptions { seed, restarts: 3, ..Default::default() };
        let model = fit_archetypoids(x.view(), k, &opts, None).unwrap();
        let mut idx = model.indices.clone();
        idx.sort_unstable();
        idx.dedup();
        prop_assert_eq!(idx.len(), k);
        prop_assert!(idx.iter().all(|&i| i < x.nrows()));
        prop_assert!(model.rss >= model.aa_rss.unwrap() - 1e-9);
        prop_assert!(model.rss_path.windows(2).all(|w| w[1] <= w[0]));
        // no single exchange improves the result
        let again = swap_optimize(x.view(), &model.indices, None, &opts.solver).unwrap();
        prop_assert_eq!(again.swap_steps, 0);
    }

    #[test]
    fn standardization_ignores_common_shift_and_scale(
        coef in matrix(3..=8, 5..=5),
        shift in proptest::collection::vec(-5.0..5.0f64, 5),
        factor in 0.1..10.0f64,
    ) {
        let basis = BasisSpec::bspline(0.0, 1.0, 5, 3).unwrap();
        let ids: Vec<String> = (0..coef.nrows()).map(|i| i.to_string()).collect();
        let base = FunctionalDataset::new(basis.clone(), coef.clone(), ids.clone(), "x").unwrap();
        let moved_coef = coef.mapv(|v| v * factor) + &Array1::from(shift);
        let moved = FunctionalDataset::new(basis, moved_coef, ids, "x").unwrap();
        let (Ok(a), Ok(b)) = (standardize(&base, 101), standardize(&moved, 101)) else {
            return Ok(());
        };
        let d = (&a.coefficients - &b.coefficients).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(d <= 1e-6 * (1.0 + a.coefficients.iter().fold(0.0f64, |m, v| m.max(v.abs()))), "{}", d);
    }

    #[test]
    fn long_ingest_matches_sorted_grouping(records in proptest::collection::vec((0u8..4, 0u8..3, 0u16..50, -100i32..100), 1..60)) {
        let mut csv = String::from("id,variable,t,value\n");
        let mut seen = std::collections::HashSet::new();
        let mut kept = Vec::new();
        for (id, var, t, v) in records {
            if seen.insert((id, var, t)) {
                csv.push_str(&format!("s{id},v{var},{t},{v}\n"));
                kept.push((id, var, t, v));
            }
        }
        let parsed = read_long(csv.as_bytes()).unwrap();
        // reference: sort by variable, then id, then t
        let mut reference: BTreeMap<String, BTreeMap<String, Vec<(f64, f64)>>> = BTreeMap::new();
        for (id, var, t, v) in &kept {
            reference.entry(format!("v{var}")).or_default().entry(format!("s{id}")).or_default().push((*t as f64, *v as f64));
        }
        prop_assert_eq!(parsed.len(), reference.len());
        for group in &parsed {
            let r = &reference[&group.variable];
            prop_assert_eq!(group.curves.len(), r.len());
            for c in &group.curves {
                let mut pts = r[&c.id].clone();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                let got: Vec<(f64, f64)> = c.arguments.iter().copied().zip(c.values.iter().copied()).collect();
                prop_assert_eq!(got, pts);
            }
        }
        // ids in order of first appearance within each variable
        for group in &parsed {
            let first: Vec<String> = {
                let mut order = Vec::new();
                for (id, var, _, _) in &kept {
                    let (id, var) = (format!("s{id}"), format!("v{var}"));
                    if var == group.variable && !order.contains(&id) {
                        order.push(id);
                    }
                }
                order
            };
            prop_assert_eq!(group.ids(), first);
        }
    }
}

#[test]
fn functional_medoid_matches_exhaustive_scan() {
    // k = 1 under a non-trivial Gram metric
    let basis = BasisSpec::bspline(0.0, 2.0, 6, 3).unwrap();
    let w = gram_matrix(&basis).unwrap();
    for seed in 0..10u64 {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((15, 6), |_| gaussian(&mut rng));
        let model = fit_archetypoids(x.view(), 1, &FitOptions::default(), Some(&w)).unwrap();
        let (best, _) = exhaustive_archetypoids(x.view(), 1, Some(&w.values));
        assert_eq!(model.indices, best, "seed {seed}");
    }
}
