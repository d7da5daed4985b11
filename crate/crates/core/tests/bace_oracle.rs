//! Gibbs posteriors against exact quadrature on oracle-sized instances.

mod common;

use bace_core::{bace_exact_posterior_small, bace_fit, BacePriors, GibbsConfig};

const TOL: f64 = 0.03;

fn max_entry_error(m: &bace_core::AnnotationMatrix, seed: u64) -> f64 {
    let fit = bace_fit::<f64>(m, &GibbsConfig::with_seed(seed)).unwrap();
    let exact: Vec<Vec<f64>> =
        bace_exact_posterior_small(m, &BacePriors::weakly_informative(m.n_labels()), 24).unwrap();
    fit.labels
        .iter()
        .zip(&exact)
        .flat_map(|(l, e)| l.pmf.iter().zip(e).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn gibbs_matches_quadrature_on_random_instances() {
    let mut rng = common::rng(20);
    for case in 0..20 {
        let m = common::small_instance(&mut rng);
        let err = max_entry_error(&m, case);
        assert!(err <= TOL, "case {case}: max error {err}");
    }
}

#[test]
fn unanimous_items_match_quadrature() {
    let m = common::matrix(3, vec![vec![Some(0); 3], vec![Some(1); 3], vec![Some(2); 3]]);
    assert!(max_entry_error(&m, 3) <= TOL);
    let fit = bace_fit::<f64>(&m, &GibbsConfig::with_seed(3)).unwrap();
    assert_eq!(fit.map_labels(), vec![0, 1, 2]);
}

#[test]
fn quadrature_is_stable_in_resolution() {
    let mut rng = common::rng(5);
    for _ in 0..5 {
        let m = common::small_instance(&mut rng);
        let priors = BacePriors::weakly_informative(m.n_labels());
        let a: Vec<Vec<f64>> = bace_exact_posterior_small(&m, &priors, 16).unwrap();
        let b: Vec<Vec<f64>> = bace_exact_posterior_small(&m, &priors, 40).unwrap();
        for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn label_permutation_is_equivariant_on_average() {
    let (a, b, c) = (Some(0), Some(1), Some(2));
    let m = common::matrix(
        3,
        vec![vec![a, a, b], vec![b, b, b], vec![c, a, c], vec![a, None, a], vec![b, c, c], vec![c, c, c]],
    );
    let mapping = [2, 0, 1];
    let permuted = m.relabel(&mapping);
    let seeds = [1u64, 2, 3, 4];
    let mean_pmfs = |mat: &bace_core::AnnotationMatrix| {
        let mut acc = vec![vec![0.0; 3]; mat.n_items()];
        for &s in &seeds {
            let fit = bace_fit::<f64>(mat, &GibbsConfig::with_seed(s)).unwrap();
            for (row, l) in acc.iter_mut().zip(&fit.labels) {
                for (x, p) in row.iter_mut().zip(&l.pmf) {
                    *x += p / seeds.len() as f64;
                }
            }
        }
        acc
    };
    let base = mean_pmfs(&m);
    let moved = mean_pmfs(&permuted);
    for (i, row) in base.iter().enumerate() {
        for (l, &p) in row.iter().enumerate() {
            assert!((p - moved[i][mapping[l]]).abs() <= 0.02, "item {i} label {l}");
        }
    }
}

#[test]
fn gamma_rows_are_distributions() {
    let mut rng = common::rng(9);
    for seed in 0..5 {
        let m = common::small_instance(&mut rng);
        let fit = bace_fit::<f64>(&m, &GibbsConfig::with_seed(seed)).unwrap();
        for p in &fit.profiles {
            assert!((p.gamma_mean.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!((0.0..=1.0).contains(&p.beta_mean));
            assert!(p.beta_interval_95.0 <= p.beta_mean && p.beta_mean <= p.beta_interval_95.1);
        }
        for l in &fit.labels {
            assert!((l.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let (lo, hi) = l.map_probability_interval_95;
            assert!(0.0 <= lo && lo <= hi && hi <= 1.0);
        }
    }
}
