#![allow(dead_code)]

use bace_core::{AnnotationMatrix, LabelSet};
use rand::{Rng, SeedableRng};
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

/// Random instance within the exact-oracle limits; every item keeps at least
/// one annotation.
pub fn small_instance(rng: &mut ChaCha8Rng) -> AnnotationMatrix {
    let k = rng.random_range(2..=3);
    let m = rng.random_range(1..=3);
    let n = rng.random_range(1..=3);
    let rows = (0..n)
        .map(|_| {
            let mut row: Vec<Option<usize>> = (0..m)
                .map(|_| (rng.random::<f64>() < 0.8).then(|| rng.random_range(0..k)))
                .collect();
            if row.iter().all(Option::is_none) {
                let j = rng.random_range(0..m);
                row[j] = Some(rng.random_range(0..k));
            }
            row
        })
        .collect();
    matrix(k, rows)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
