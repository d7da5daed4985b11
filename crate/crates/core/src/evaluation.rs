//! Gold-set evaluation with the clear / ambiguous split.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bace::{bace_fit, GibbsConfig};
use crate::data::{AnnotationMatrix, GoldSet, LabelCode};
use crate::dawid_skene::{ds_fit, DsConfig};
use crate::error::{Error, Result};
use crate::majority::{majority_vote, TieMode};
use crate::scalar::Scalar;

/// Gold items split by whether their coders agreed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GoldPartition {
    /// At least two annotations, all identical.
    pub clear: BTreeSet<String>,
    /// At least two annotations, not all identical.
    pub ambiguous: BTreeSet<String>,
    /// Fewer than two annotations.
    pub excluded: BTreeSet<String>,
}

pub fn partition_gold(matrix: &AnnotationMatrix, gold: &GoldSet) -> Result<GoldPartition> {
    let mut part = GoldPartition::default();
    for item in gold.entries().keys() {
        let i = matrix
            .item_index(item)
            .ok_or_else(|| Error::GoldItemMissing(item.clone()))?;
        let votes = matrix.vote_counts(i);
        let total: usize = votes.iter().sum();
        let bucket = if total < 2 {
            &mut part.excluded
        } else if votes.contains(&total) {
            &mut part.clear
        } else {
            &mut part.ambiguous
        };
        bucket.insert(item.clone());
    }
    Ok(part)
}

/// Fraction of `subset` whose prediction matches the gold label.
pub fn accuracy<T: Scalar>(
    predictions: &BTreeMap<String, LabelCode>,
    gold: &GoldSet,
    subset: &BTreeSet<String>,
) -> Result<T> {
    let (correct, total) = count_correct(predictions, gold, subset)?;
    if total == 0 {
        return Err(Error::EmptySubset);
    }
    Ok(T::from_count(correct) / T::from_count(total))
}

fn count_correct(
    predictions: &BTreeMap<String, LabelCode>,
    gold: &GoldSet,
    subset: &BTreeSet<String>,
) -> Result<(usize, usize)> {
    let mut correct = 0;
    for item in subset {
        let pred = predictions
            .get(item)
            .ok_or_else(|| Error::MissingPrediction(item.clone()))?;
        let truth = gold.get(item).ok_or_else(|| Error::GoldItemMissing(item.clone()))?;
        correct += usize::from(*pred == truth);
    }
    Ok((correct, subset.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Bace,
    Majority,
    Ds,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Bace, Model::Majority, Model::Ds];

    pub fn display_name(self) -> &'static str {
        match self {
            Model::Bace => "BACE model",
            Model::Majority => "Majority model",
            Model::Ds => "DS model",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Model::Bace => "bace",
            Model::Majority => "majority",
            Model::Ds => "ds",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "bace" => Ok(Model::Bace),
            "majority" => Ok(Model::Majority),
            "ds" => Ok(Model::Ds),
            other => Err(format!("unknown model `{other}` (expected bace, ds or majority)")),
        }
    }
}

/// Accuracy on one gold subset. `accuracy` is `None` when the subset is empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyCell<T> {
    pub accuracy: Option<T>,
    pub correct: usize,
    pub n_items: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow<T> {
    pub model: Model,
    pub name: &'static str,
    pub ambiguous: AccuracyCell<T>,
    pub clear: AccuracyCell<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyTable<T> {
    pub rows: Vec<AccuracyRow<T>>,
    pub partition: GoldPartition,
}

impl<T> AccuracyTable<T> {
    pub fn row(&self, model: Model) -> Option<&AccuracyRow<T>> {
        self.rows.iter().find(|r| r.model == model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig<T> {
    pub models: Vec<Model>,
    pub bace: GibbsConfig<T>,
    pub ds: DsConfig<T>,
    pub tie_mode: TieMode,
    pub tie_seed: u64,
}

impl<T: Scalar> Default for ComparisonConfig<T> {
    fn default() -> Self {
        Self {
            models: Model::ALL.to_vec(),
            bace: GibbsConfig::default(),
            ds: DsConfig::default(),
            tie_mode: TieMode::Deterministic,
            tie_seed: 0,
        }
    }
}

/// MAP labels of one model on the full matrix.
pub fn predict<T: Scalar>(
    matrix: &AnnotationMatrix,
    model: Model,
    config: &ComparisonConfig<T>,
) -> Result<Vec<LabelCode>> {
    match model {
        Model::Bace => Ok(bace_fit(matrix, &config.bace)?.map_labels()),
        Model::Majority => Ok(majority_vote(matrix, config.tie_mode, config.tie_seed)?.labels()),
        Model::Ds => Ok(ds_fit(matrix, &config.ds)?.map_labels),
    }
}

/// Item id → label map for a prediction vector in matrix item order.
pub fn predictions_by_item(matrix: &AnnotationMatrix, labels: &[LabelCode]) -> BTreeMap<String, LabelCode> {
    matrix.items().iter().cloned().zip(labels.iter().copied()).collect()
}

fn cell<T: Scalar>(
    predictions: &BTreeMap<String, LabelCode>,
    gold: &GoldSet,
    subset: &BTreeSet<String>,
) -> Result<AccuracyCell<T>> {
    let (correct, n_items) = count_correct(predictions, gold, subset)?;
    Ok(AccuracyCell {
        accuracy: (n_items > 0).then(|| T::from_count(correct) / T::from_count(n_items)),
        correct,
        n_items,
    })
}

/// Fits every requested model on the whole matrix and scores it on both gold subsets.
pub fn model_comparison<T: Scalar>(
    matrix: &AnnotationMatrix,
    gold: &GoldSet,
    config: &ComparisonConfig<T>,
) -> Result<AccuracyTable<T>> {
    let partition = partition_gold(matrix, gold)?;
    let mut models = config.models.clone();
    models.sort();
    models.dedup();
    let fits: Vec<Result<Vec<LabelCode>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = models
            .iter()
            .map(|&model| scope.spawn(move || predict(matrix, model, config)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("model thread panicked"))
            .collect()
    });
    let mut rows = Vec::with_capacity(models.len());
    for (model, labels) in models.into_iter().zip(fits) {
        let predictions = predictions_by_item(matrix, &labels?);
        rows.push(AccuracyRow {
            model,
            name: model.display_name(),
            ambiguous: cell(&predictions, gold, &partition.ambiguous)?,
            clear: cell(&predictions, gold, &partition.clear)?,
        });
    }
    Ok(AccuracyTable { rows, partition })
}
