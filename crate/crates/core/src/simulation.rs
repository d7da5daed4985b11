//! Synthetic annotation data from known coder parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{AnnotationMatrix, LabelCode, LabelSet};
use crate::error::{Error, Result};
use crate::scalar::{argmax, sample_categorical, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCoder<T> {
    pub coder_id: String,
    pub beta: T,
    pub gamma: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<T> {
    pub labels: Vec<String>,
    pub n_items: usize,
    pub coders: Vec<SimCoder<T>>,
    pub pi: Vec<T>,
    #[serde(default)]
    pub missing_rate: T,
    #[serde(default)]
    pub seed: u64,
}

/// A generated dataset and the true label of every item.
#[derive(Debug, Clone, PartialEq)]
pub struct SimDataset {
    pub matrix: AnnotationMatrix,
    pub truth: Vec<LabelCode>,
}

impl<T: Scalar> SimConfig<T> {
    /// Three coders over (Negative, Neutral, Positive) with competences
    /// 0.784 / 0.728 / 0.755 and bias rows dominated by the neutral label.
    pub fn three_coder_valence(n_items: usize, seed: u64) -> Self {
        let coder = |id: &str, beta: f64, gamma: [f64; 3]| SimCoder {
            coder_id: id.to_string(),
            beta: T::lit(beta),
            gamma: gamma.iter().map(|&g| T::lit(g)).collect(),
        };
        Self {
            labels: vec!["Negative".into(), "Neutral".into(), "Positive".into()],
            n_items,
            coders: vec![
                coder("coder1", 0.784, [0.085, 0.693, 0.222]),
                coder("coder2", 0.728, [0.192, 0.614, 0.194]),
                coder("coder3", 0.755, [0.177, 0.649, 0.174]),
            ],
            pi: vec![T::lit(0.25), T::lit(0.40), T::lit(0.35)],
            missing_rate: T::zero(),
            seed,
        }
    }

    pub fn label_set(&self) -> Result<LabelSet> {
        LabelSet::new(self.labels.iter().cloned())
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.label_set()?.len();
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_items == 0 {
            return bad("n_items must be at least 1".into());
        }
        if self.coders.is_empty() {
            return bad("at least one coder is required".into());
        }
        if !(self.missing_rate >= T::zero() && self.missing_rate < T::one()) {
            return bad(format!("missing_rate {} outside [0, 1)", self.missing_rate));
        }
        check_pmf(&self.pi, k, "pi")?;
        for c in &self.coders {
            if !(c.beta >= T::zero() && c.beta <= T::one()) {
                return bad(format!("beta {} of `{}` outside [0, 1]", c.beta, c.coder_id));
            }
            check_pmf(&c.gamma, k, &format!("gamma of `{}`", c.coder_id))?;
        }
        Ok(())
    }
}

fn check_pmf<T: Scalar>(p: &[T], k: usize, what: &str) -> Result<()> {
    if p.len() != k {
        return Err(Error::InvalidConfig(format!("{what} has {} entries, expected {k}", p.len())));
    }
    let total = p.iter().copied().fold(T::zero(), |a, b| a + b);
    if p.iter().any(|&x| !(x >= T::zero())) || (total - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(16.0)) {
        return Err(Error::InvalidConfig(format!("{what} is not a probability vector")));
    }
    Ok(())
}

/// Runs the generative process forward. Items whose annotations were all
/// dropped get a fresh missingness mask until at least one survives.
pub fn simulate_dataset<T: Scalar>(config: &SimConfig<T>) -> Result<SimDataset> {
    config.validate()?;
    let label_set = config.label_set()?;
    let m = config.coders.len();
    let width = config.n_items.to_string().len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut truth = Vec::with_capacity(config.n_items);
    let mut rows = Vec::with_capacity(config.n_items);
    let mut keep = vec![false; m];
    for _ in 0..config.n_items {
        let t = sample_categorical(&mut rng, &config.pi);
        loop {
            for k in keep.iter_mut() {
                *k = config.missing_rate == T::zero() || T::sample_open01(&mut rng) >= config.missing_rate;
            }
            if keep.contains(&true) {
                break;
            }
        }
        let row = config
            .coders
            .iter()
            .zip(&keep)
            .map(|(c, &kept)| {
                kept.then(|| {
                    if T::sample_open01(&mut rng) < c.beta {
                        t
                    } else {
                        sample_categorical(&mut rng, &c.gamma)
                    }
                })
            })
            .collect();
        truth.push(t);
        rows.push(row);
    }
    let matrix = AnnotationMatrix::from_rows(
        (0..config.n_items).map(|i| format!("item{:0width$}", i + 1)).collect(),
        config.coders.iter().map(|c| c.coder_id.clone()).collect(),
        label_set,
        rows,
    )?;
    Ok(SimDataset { matrix, truth })
}

/// Posterior over the truth of one item under known parameters.
pub fn true_posterior<T: Scalar>(config: &SimConfig<T>, row: &[Option<LabelCode>]) -> Vec<T> {
    let mut post: Vec<T> = config.pi.clone();
    for (c, cell) in config.coders.iter().zip(row) {
        if let Some(l) = *cell {
            for (t, p) in post.iter_mut().enumerate() {
                let hit = if t == l { c.beta } else { T::zero() };
                *p = *p * (hit + (T::one() - c.beta) * c.gamma[l]);
            }
        }
    }
    let total = post.iter().copied().fold(T::zero(), |a, b| a + b);
    post.iter_mut().for_each(|p| *p = *p / total);
    post
}

/// Accuracy of the exact posterior argmax under the generating parameters.
pub fn bayes_oracle_accuracy<T: Scalar>(
    config: &SimConfig<T>,
    matrix: &AnnotationMatrix,
    truth: &[LabelCode],
) -> Result<T> {
    config.validate()?;
    if matrix.n_coders() != config.coders.len()
        || matrix.n_labels() != config.labels.len()
        || truth.len() != matrix.n_items()
        || matrix.n_items() == 0
    {
        return Err(Error::Mismatch(format!(
            "config has {} coders / {} labels, matrix {} coders / {} labels / {} items, truth {} items",
            config.coders.len(),
            config.labels.len(),
            matrix.n_coders(),
            matrix.n_labels(),
            matrix.n_items(),
            truth.len()
        )));
    }
    let correct = (0..matrix.n_items())
        .filter(|&i| argmax(&true_posterior(config, matrix.row(i))) == truth[i])
        .count();
    Ok(T::from_count(correct) / T::from_count(matrix.n_items()))
}

/// Fraction of items where `predictions` equals the truth.
pub fn truth_accuracy<T: Scalar>(predictions: &[LabelCode], truth: &[LabelCode]) -> T {
    let correct = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    T::from_count(correct) / T::from_count(truth.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(k: usize) -> Vec<f64> {
        vec![1.0 / k as f64; k]
    }

    fn config(betas: &[f64], gamma: Vec<f64>, pi: Vec<f64>, n: usize, seed: u64) -> SimConfig<f64> {
        let k = pi.len();
        SimConfig {
            labels: (0..k).map(|l| format!("L{l}")).collect(),
            n_items: n,
            coders: betas
                .iter()
                .enumerate()
                .map(|(j, &b)| SimCoder { coder_id: format!("c{j}"), beta: b, gamma: gamma.clone() })
                .collect(),
            pi,
            missing_rate: 0.0,
            seed,
        }
    }

    #[test]
    fn perfect_coders_copy_truth() {
        let cfg = config(&[1.0, 1.0, 1.0], uniform(3), uniform(3), 200, 3);
        let ds = simulate_dataset(&cfg).unwrap();
        for i in 0..200 {
            assert!(ds.matrix.row(i).iter().all(|c| *c == Some(ds.truth[i])));
        }
        assert_eq!(bayes_oracle_accuracy(&cfg, &ds.matrix, &ds.truth).unwrap(), 1.0);
    }

    #[test]
    fn pure_noise_coders_follow_gamma() {
        let gamma = vec![0.6, 0.3, 0.1];
        let cfg = config(&[0.0, 0.0], gamma.clone(), uniform(3), 10_000, 17);
        let ds = simulate_dataset(&cfg).unwrap();
        for j in 0..2 {
            let mut freq = [0.0; 3];
            for i in 0..10_000 {
                freq[ds.matrix.get(i, j).unwrap()] += 1.0 / 10_000.0;
            }
            let tv: f64 = freq.iter().zip(&gamma).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
            assert!(tv < 0.02, "{freq:?}");
        }
    }

    #[test]
    fn pure_noise_oracle_predicts_prior_mode() {
        let cfg = config(&[0.0, 0.0, 0.0], uniform(2), vec![0.7, 0.3], 10_000, 4);
        let ds = simulate_dataset(&cfg).unwrap();
        let acc: f64 = bayes_oracle_accuracy(&cfg, &ds.matrix, &ds.truth).unwrap();
        let base = ds.truth.iter().filter(|&&t| t == 0).count() as f64 / 10_000.0;
        assert_eq!(acc, base);
        assert!((acc - 0.7).abs() < 0.02);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = SimConfig::<f64>::three_coder_valence(300, 7);
        assert_eq!(simulate_dataset(&cfg).unwrap(), simulate_dataset(&cfg).unwrap());
        let other = SimConfig { seed: 8, ..cfg.clone() };
        assert_ne!(simulate_dataset(&cfg).unwrap(), simulate_dataset(&other).unwrap());
    }

    #[test]
    fn missing_cells_never_empty_an_item() {
        let cfg = SimConfig { missing_rate: 0.9, ..SimConfig::<f64>::three_coder_valence(2000, 1) };
        let ds = simulate_dataset(&cfg).unwrap();
        assert!((0..2000).all(|i| ds.matrix.item_annotation_count(i) >= 1));
        assert!(ds.matrix.n_missing() > 0);
    }

    #[test]
    fn agreement_with_truth_matches_expectation() {
        let cfg = SimConfig::<f64>::three_coder_valence(10_000, 21);
        let ds = simulate_dataset(&cfg).unwrap();
        for (j, c) in cfg.coders.iter().enumerate() {
            let expected = c.beta + (1.0 - c.beta) * cfg.pi.iter().zip(&c.gamma).map(|(p, g)| p * g).sum::<f64>();
            let agree = (0..10_000).filter(|&i| ds.matrix.get(i, j) == Some(ds.truth[i])).count() as f64 / 10_000.0;
            assert!((agree - expected).abs() < 0.02, "coder {j}: {agree} vs {expected}");
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let good = SimConfig::<f64>::three_coder_valence(10, 0);
        let mut c = good.clone();
        c.missing_rate = 1.0;
        assert!(simulate_dataset(&c).is_err());
        let mut c = good.clone();
        c.coders[0].gamma = vec![0.5, 0.5, 0.5];
        assert!(simulate_dataset(&c).is_err());
        let mut c = good.clone();
        c.n_items = 0;
        assert!(simulate_dataset(&c).is_err());
        let mut c = good;
        c.coders[1].beta = 1.5;
        assert!(simulate_dataset(&c).is_err());
    }

    #[test]
    fn oracle_rejects_mismatched_inputs() {
        let cfg = SimConfig::<f64>::three_coder_valence(10, 0);
        let ds = simulate_dataset(&cfg).unwrap();
        assert!(matches!(
            bayes_oracle_accuracy(&cfg, &ds.matrix, &ds.truth[..5]),
            Err(Error::Mismatch(_))
        ));
    }
}
