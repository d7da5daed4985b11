//! Plurality vote with dataset-frequency tie-breaking.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{AnnotationMatrix, LabelCode};
use crate::error::{Error, Result};
use crate::scalar::sample_categorical;

/// How to resolve items whose top vote count is shared by several labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieMode {
    /// Most frequent label in the whole dataset, then the lowest code.
    #[default]
    Deterministic,
    /// Draw from the dataset label distribution restricted to the tied labels.
    Sampled,
}

impl std::str::FromStr for TieMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "deterministic" => Ok(Self::Deterministic),
            "sampled" => Ok(Self::Sampled),
            other => Err(format!("unknown tie mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MajorityItem {
    pub label: LabelCode,
    pub votes: Vec<usize>,
    pub tie_broken: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MajorityResult {
    pub items: Vec<MajorityItem>,
}

impl MajorityResult {
    pub fn labels(&self) -> Vec<LabelCode> {
        self.items.iter().map(|i| i.label).collect()
    }
}

pub fn majority_vote(matrix: &AnnotationMatrix, tie_mode: TieMode, seed: u64) -> Result<MajorityResult> {
    let freq = matrix.label_frequencies();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(matrix.n_items());
    for i in 0..matrix.n_items() {
        let votes = matrix.vote_counts(i);
        let top = votes.iter().copied().max().unwrap_or(0);
        if top == 0 {
            return Err(Error::UnannotatedItem(matrix.items()[i].clone()));
        }
        let tied: Vec<LabelCode> = (0..votes.len()).filter(|&l| votes[l] == top).collect();
        let label = if tied.len() == 1 {
            tied[0]
        } else {
            match tie_mode {
                TieMode::Deterministic => *tied
                    .iter()
                    .max_by(|&&x, &&y| freq[x].cmp(&freq[y]).then(y.cmp(&x)))
                    .expect("non-empty"),
                TieMode::Sampled => {
                    let weights: Vec<f64> = tied.iter().map(|&l| freq[l] as f64).collect();
                    tied[sample_categorical(&mut rng, &weights)]
                }
            }
        };
        items.push(MajorityItem {
            label,
            tie_broken: tied.len() > 1,
            votes,
        });
    }
    Ok(MajorityResult { items })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabelSet;

    fn matrix(k: usize, rows: Vec<Vec<Option<usize>>>) -> AnnotationMatrix {
        let m = rows[0].len();
        AnnotationMatrix::from_rows(
            (0..rows.len()).map(|i| format!("i{i}")).collect(),
            (0..m).map(|j| format!("c{j}")).collect(),
            LabelSet::new((0..k).map(|l| format!("L{l}"))).unwrap(),
            rows,
        )
        .unwrap()
    }

    /// Dataset frequencies A:10, B:5, C:5 including the final, fully tied item.
    fn tie_fixture() -> AnnotationMatrix {
        let (a, b, c) = (Some(0), Some(1), Some(2));
        let mut rows = vec![
            vec![a, a, a],
            vec![a, a, a],
            vec![a, a, a],
            vec![b, b, None],
            vec![c, c, None],
            vec![b, b, None],
            vec![c, c, None],
        ];
        rows.push(vec![a, b, c]);
        let m = matrix(3, rows);
        assert_eq!(m.label_frequencies(), vec![10, 5, 5]);
        m
    }

    #[test]
    fn plurality_wins() {
        let m = matrix(2, vec![vec![Some(0), Some(0), Some(1)]]);
        let r = majority_vote(&m, TieMode::Deterministic, 0).unwrap();
        assert_eq!(r.items[0].label, 0);
        assert!(!r.items[0].tie_broken);
        assert_eq!(r.items[0].votes, vec![2, 1]);
    }

    #[test]
    fn deterministic_tie_uses_dataset_frequency() {
        let r = majority_vote(&tie_fixture(), TieMode::Deterministic, 0).unwrap();
        let last = r.items.last().unwrap();
        assert!(last.tie_broken);
        assert_eq!(last.label, 0);
    }

    #[test]
    fn deterministic_tie_falls_back_to_lowest_code() {
        let m = matrix(3, vec![vec![Some(2), Some(1)], vec![Some(1), Some(2)]]);
        let r = majority_vote(&m, TieMode::Deterministic, 0).unwrap();
        assert_eq!(r.labels(), vec![1, 1]);
    }

    #[test]
    fn sampled_tie_is_reproducible() {
        let m = tie_fixture();
        let a = majority_vote(&m, TieMode::Sampled, 99).unwrap();
        let b = majority_vote(&m, TieMode::Sampled, 99).unwrap();
        assert_eq!(a, b);
        assert!([0, 1, 2].contains(&a.items.last().unwrap().label));
        let draws: Vec<usize> = (0..200)
            .map(|s| majority_vote(&m, TieMode::Sampled, s).unwrap().items.last().unwrap().label)
            .collect();
        assert!(draws.contains(&0) && draws.contains(&1) && draws.contains(&2));
    }

    #[test]
    fn unannotated_item_errors() {
        let m = matrix(2, vec![vec![Some(0), Some(1)], vec![None, None]]);
        assert_eq!(
            majority_vote(&m, TieMode::Deterministic, 0).unwrap_err(),
            Error::UnannotatedItem("i1".into())
        );
    }

    #[test]
    fn coder_order_does_not_matter() {
        let m = tie_fixture();
        let p = m.permute_coders(&[2, 0, 1]);
        assert_eq!(
            majority_vote(&m, TieMode::Deterministic, 0).unwrap().labels(),
            majority_vote(&p, TieMode::Deterministic, 0).unwrap().labels()
        );
    }
}
