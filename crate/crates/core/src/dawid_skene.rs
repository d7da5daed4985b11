//! Dawid-Skene latent-class model fitted by expectation maximization.
//!
//! Each coder `j` has a confusion matrix whose row `k` is the distribution of
//! the labels the coder emits when the true label is `k`. EM starts from soft
//! majority votes (each item's normalized vote histogram). The M-step adds
//! `smoothing` pseudo-counts to every prior and confusion cell.
//!
//! With `smoothing > 0`, the M-step maximizes the log-likelihood plus
//! `smoothing · Σ ln θ` over every prior and confusion entry, and that sum is
//! what EM provably never decreases. The recorded trace therefore holds this
//! penalized objective; with `smoothing = 0` it is the plain observed-data
//! log-likelihood.

use serde::{Deserialize, Serialize};

use crate::data::{AnnotationMatrix, LabelCode};
use crate::error::{Error, Result};
use crate::scalar::{argmax, normalize_log_weights, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DsConfig<T> {
    pub max_iters: usize,
    /// Relative change in the objective below which EM stops.
    pub tol: T,
    /// Pseudo-count added to every M-step count.
    pub smoothing: T,
}

impl<T: Scalar> Default for DsConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            tol: T::lit(1e-7),
            smoothing: T::lit(0.01),
        }
    }
}

/// One coder's `K × K` matrix; `rows[k][l]` = P(coder says `l` | truth `k`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix<T> {
    pub coder_id: String,
    pub rows: Vec<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DawidSkeneResult<T> {
    pub confusions: Vec<ConfusionMatrix<T>>,
    pub prior: Vec<T>,
    pub posteriors: Vec<Vec<T>>,
    pub map_labels: Vec<LabelCode>,
    /// Objective after each iteration; non-decreasing.
    pub log_likelihood_trace: Vec<T>,
    /// Observed-data log-likelihood at the final parameters.
    pub log_likelihood: T,
    pub iterations: usize,
    pub converged: bool,
}

struct Params<T> {
    prior: Vec<T>,
    // coder-major, then truth row, then emitted label
    confusion: Vec<T>,
}

fn validate<T: Scalar>(matrix: &AnnotationMatrix, config: &DsConfig<T>) -> Result<()> {
    if matrix.n_items() == 0 || matrix.n_decisions() == 0 {
        return Err(Error::Empty);
    }
    if config.max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
    }
    if !(config.tol > T::zero()) {
        return Err(Error::InvalidConfig("tol must be positive".into()));
    }
    if !(config.smoothing >= T::zero()) {
        return Err(Error::InvalidConfig("smoothing must be non-negative".into()));
    }
    Ok(())
}

fn soft_majority<T: Scalar>(matrix: &AnnotationMatrix) -> Vec<Vec<T>> {
    let k = matrix.n_labels();
    (0..matrix.n_items())
        .map(|i| {
            let votes = matrix.vote_counts(i);
            let total: usize = votes.iter().sum();
            if total == 0 {
                vec![T::one() / T::from_count(k); k]
            } else {
                votes
                    .iter()
                    .map(|&v| T::from_count(v) / T::from_count(total))
                    .collect()
            }
        })
        .collect()
}

fn m_step<T: Scalar>(matrix: &AnnotationMatrix, q: &[Vec<T>], smoothing: T) -> Params<T> {
    let k = matrix.n_labels();
    let m = matrix.n_coders();
    let mut prior = vec![smoothing; k];
    let mut confusion = vec![smoothing; m * k * k];
    for (i, qi) in q.iter().enumerate() {
        for (p, &w) in prior.iter_mut().zip(qi) {
            *p = *p + w;
        }
        for (j, l) in matrix.annotations(i) {
            for (t, &w) in qi.iter().enumerate() {
                let cell = &mut confusion[(j * k + t) * k + l];
                *cell = *cell + w;
            }
        }
    }
    let total = prior.iter().copied().fold(T::zero(), |a, b| a + b);
    prior.iter_mut().for_each(|p| *p = *p / total);
    for row in confusion.chunks_mut(k) {
        let total = row.iter().copied().fold(T::zero(), |a, b| a + b);
        row.iter_mut().for_each(|c| *c = *c / total);
    }
    Params { prior, confusion }
}

/// Posterior class memberships and the observed-data log-likelihood.
fn e_step<T: Scalar>(matrix: &AnnotationMatrix, params: &Params<T>, q: &mut [Vec<T>]) -> T {
    let k = matrix.n_labels();
    let mut ll = T::zero();
    for (i, qi) in q.iter_mut().enumerate() {
        for t in 0..k {
            let mut lw = params.prior[t].ln();
            for (j, l) in matrix.annotations(i) {
                lw = lw + params.confusion[(j * k + t) * k + l].ln();
            }
            qi[t] = lw;
        }
        ll = ll + normalize_log_weights(qi);
    }
    ll
}

fn penalty<T: Scalar>(params: &Params<T>, smoothing: T) -> T {
    if smoothing == T::zero() {
        return T::zero();
    }
    let sum_ln = params
        .prior
        .iter()
        .chain(&params.confusion)
        .map(|p| p.ln())
        .fold(T::zero(), |a, b| a + b);
    smoothing * sum_ln
}

pub fn ds_fit<T: Scalar>(matrix: &AnnotationMatrix, config: &DsConfig<T>) -> Result<DawidSkeneResult<T>> {
    validate(matrix, config)?;
    let k = matrix.n_labels();
    let mut q = soft_majority::<T>(matrix);
    let mut trace: Vec<T> = Vec::new();
    let mut converged = false;
    let mut params = m_step(matrix, &q, config.smoothing);
    let mut ll = T::zero();
    for iter in 1..=config.max_iters {
        if iter > 1 {
            params = m_step(matrix, &q, config.smoothing);
        }
        ll = e_step(matrix, &params, &mut q);
        let objective = ll + penalty(&params, config.smoothing);
        if !objective.is_finite() {
            return Err(Error::NonFiniteLikelihood(iter));
        }
        let previous = trace.last().copied();
        trace.push(objective);
        if let Some(prev) = previous {
            if (objective - prev).abs() <= config.tol * prev.abs() {
                converged = true;
                break;
            }
        }
    }
    let confusions = matrix
        .coders()
        .iter()
        .enumerate()
        .map(|(j, id)| ConfusionMatrix {
            coder_id: id.clone(),
            rows: (0..k)
                .map(|t| params.confusion[(j * k + t) * k..(j * k + t + 1) * k].to_vec())
                .collect(),
        })
        .collect();
    Ok(DawidSkeneResult {
        confusions,
        prior: params.prior,
        map_labels: q.iter().map(|qi| argmax(qi)).collect(),
        posteriors: q,
        iterations: trace.len(),
        log_likelihood_trace: trace,
        log_likelihood: ll,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabelSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

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

    fn random_matrix(rng: &mut ChaCha8Rng) -> AnnotationMatrix {
        let k = rng.random_range(2..5);
        let m = rng.random_range(2..6);
        let n = rng.random_range(3..40);
        let rows = (0..n)
            .map(|_| {
                let mut row: Vec<Option<usize>> = (0..m)
                    .map(|_| (rng.random::<f64>() > 0.2).then(|| rng.random_range(0..k)))
                    .collect();
                if row.iter().all(Option::is_none) {
                    row[0] = Some(0);
                }
                row
            })
            .collect();
        matrix(k, rows)
    }

    #[test]
    fn unanimous_data_recovered() {
        let rows = (0..12).map(|i| vec![Some(i % 3); 3]).collect();
        let m = matrix(3, rows);
        let cfg = DsConfig::<f64>::default();
        let fit = ds_fit(&m, &cfg).unwrap();
        for i in 0..12 {
            assert_eq!(fit.map_labels[i], i % 3);
        }
        for c in &fit.confusions {
            for (t, row) in c.rows.iter().enumerate() {
                assert!(row[t] >= 1.0 - 10.0 * cfg.smoothing, "{row:?}");
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn objective_never_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = random_matrix(&mut rng);
            let fit = ds_fit(&m, &DsConfig::<f64>::default()).unwrap();
            for w in fit.log_likelihood_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "{:?}", fit.log_likelihood_trace);
            }
            for p in &fit.posteriors {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn label_permutation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let m = random_matrix(&mut rng);
            let k = m.n_labels();
            let mapping: Vec<usize> = (0..k).map(|l| (l + 1) % k).collect();
            let a = ds_fit(&m, &DsConfig::<f64>::default()).unwrap();
            let b = ds_fit(&m.relabel(&mapping), &DsConfig::<f64>::default()).unwrap();
            for l in 0..k {
                assert!((a.prior[l] - b.prior[mapping[l]]).abs() < 1e-9);
                for (pa, pb) in a.posteriors.iter().zip(&b.posteriors) {
                    assert!((pa[l] - pb[mapping[l]]).abs() < 1e-9);
                }
            }
            assert_eq!(a.iterations, b.iterations);
        }
    }

    #[test]
    fn single_coder_first_update_is_smoothed_agreement() {
        // One EM step from the coder's own labels: prior_k ∝ n_k + s and
        // confusion(k, l) = (n_k·1{k=l} + s) / (n_k + K·s).
        let labels = [0, 1, 1, 2, 1];
        let rows = labels.iter().map(|&l| vec![Some(l)]).collect();
        let cfg = DsConfig { max_iters: 1, ..DsConfig::<f64>::default() };
        let fit = ds_fit(&matrix(3, rows), &cfg).unwrap();
        let s = cfg.smoothing;
        let n_k = [1.0, 3.0, 1.0];
        for (i, &a) in labels.iter().enumerate() {
            let un: Vec<f64> = (0..3)
                .map(|k| {
                    let prior = (n_k[k] + s) / (5.0 + 3.0 * s);
                    let hit = if k == a { n_k[k] } else { 0.0 };
                    prior * (hit + s) / (n_k[k] + 3.0 * s)
                })
                .collect();
            let z: f64 = un.iter().sum();
            for k in 0..3 {
                assert!((fit.posteriors[i][k] - un[k] / z).abs() < 1e-12);
            }
            assert_eq!(fit.map_labels[i], a);
        }
    }

    #[test]
    fn zero_smoothing_with_empty_class_is_non_finite() {
        // Label 2 never appears, so its confusion rows have no mass.
        let rows = vec![vec![Some(0), Some(0)], vec![Some(1), Some(1)]];
        let cfg = DsConfig {
            smoothing: 0.0,
            ..DsConfig::<f64>::default()
        };
        assert_eq!(ds_fit(&matrix(3, rows), &cfg).unwrap_err(), Error::NonFiniteLikelihood(1));
    }

    #[test]
    fn rejects_bad_config() {
        let m = matrix(2, vec![vec![Some(0), Some(1)]]);
        let bad = [
            DsConfig { max_iters: 0, ..DsConfig::<f64>::default() },
            DsConfig { tol: 0.0, ..DsConfig::default() },
            DsConfig { smoothing: -1.0, ..DsConfig::default() },
        ];
        for cfg in bad {
            assert!(matches!(ds_fit(&m, &cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn single_precision_fit() {
        let rows = (0..9).map(|i| vec![Some(i % 3), Some(i % 3), Some((i + 1) % 3)]).collect();
        let fit = ds_fit(&matrix(3, rows), &DsConfig::<f32>::default()).unwrap();
        assert_eq!(fit.map_labels[4], 1);
    }
}
