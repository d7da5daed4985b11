//! Independent reference computations used by the acceptance criteria.

use bace_core::{AnnotationMatrix, LabelSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn matrix(k: usize, rows: Vec<Vec<Option<usize>>>) -> AnnotationMatrix {
    let m = rows[0].len();
    AnnotationMatrix::from_rows(
        (0..rows.len()).map(|i| format!("i{i}")).collect(),
        (0..m).map(|j| format!("c{j}")).collect(),
        LabelSet::new((0..k).map(|l| format!("L{l}"))).unwrap(),
        rows,
    )
    .unwrap()
}

/// Random matrix whose cells are present with probability `fill`; every item
/// keeps at least one annotation.
pub fn random_matrix(
    rng: &mut ChaCha8Rng,
    k: usize,
    m: usize,
    n: usize,
    fill: f64,
) -> AnnotationMatrix {
    let rows = (0..n)
        .map(|_| {
            let mut row: Vec<Option<usize>> =
                (0..m).map(|_| (rng.random::<f64>() < fill).then(|| rng.random_range(0..k))).collect();
            if row.iter().all(Option::is_none) {
                row[rng.random_range(0..m)] = Some(rng.random_range(0..k));
            }
            row
        })
        .collect();
    matrix(k, rows)
}

/// Maximum log-likelihood of the two-coder, two-label Dawid-Skene model on
/// `data`, by grid search followed by coordinate-wise golden-section ascent.
pub fn ds_brute_force(data: &[(usize, usize)]) -> f64 {
    const EPS: f64 = 1e-13;
    let log_lik = |t: &[f64; 5]| -> f64 {
        let pi = [t[0], 1.0 - t[0]];
        let conf = |coder: usize, truth: usize, said: usize| {
            let stay = t[1 + 2 * coder + truth];
            if truth == said { stay } else { 1.0 - stay }
        };
        data.iter()
            .map(|&(a, b)| (0..2).map(|s| pi[s] * conf(0, s, a) * conf(1, s, b)).sum::<f64>().ln())
            .sum()
    };
    let grid: Vec<f64> = (0..=10).map(|g| (g as f64 / 10.0).clamp(EPS, 1.0 - EPS)).collect();
    let mut starts = Vec::new();
    for idx in 0..grid.len().pow(5) {
        let mut t = [0.0; 5];
        let mut r = idx;
        for x in t.iter_mut() {
            *x = grid[r % grid.len()];
            r /= grid.len();
        }
        starts.push((log_lik(&t), t));
    }
    starts.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = f64::NEG_INFINITY;
    for (_, mut theta) in starts.into_iter().take(40) {
        for _ in 0..200 {
            for d in 0..5 {
                let (mut lo, mut hi) = (EPS, 1.0 - EPS);
                for _ in 0..100 {
                    let (x1, x2) = (hi - golden * (hi - lo), lo + golden * (hi - lo));
                    let (mut t1, mut t2) = (theta, theta);
                    t1[d] = x1;
                    t2[d] = x2;
                    if log_lik(&t1) < log_lik(&t2) {
                        lo = x1;
                    } else {
                        hi = x2;
                    }
                }
                theta[d] = (lo + hi) / 2.0;
            }
        }
        best = best.max(log_lik(&theta));
    }
    best
}
