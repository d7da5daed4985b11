//! Biased-annotator competence estimation.
//!
//! Every item has a latent true label `T_i ~ Categorical(π)`. Coder `j`
//! reports the true label with probability `β_j` (competence). Otherwise the
//! coder draws a label from a personal bias distribution `γ_j`. The model is
//! fitted by Gibbs sampling with conjugate Beta/Dirichlet priors:
//!
//! 1. `T_i` from its conditional with the honesty indicators collapsed,
//!    `P(T_i = k) ∝ π_k Π_j [β_j·1{a_ij = k} + (1 − β_j)·γ_j(a_ij)]`;
//! 2. each honesty indicator `S_ij`, which is 0 whenever `a_ij ≠ T_i` and
//!    otherwise Bernoulli(`β_j / (β_j + (1 − β_j)·γ_j(a_ij))`);
//! 3. `β_j`, `γ_j` and `π` from their conjugate updates.
//!
//! An item's reported pmf is the average over all kept sweeps of all chains
//! of `P(T_i = k | T_-i, β, γ)`, the step-1 conditional with `π` integrated
//! out against the other items' current labels (the Rao-Blackwellized
//! estimate). It targets the same posterior as counting the `T_i` draws.
//!
//! Chains are seeded with `seed + chain_index` from [`ChaCha8Rng`], a
//! portable generator with a fixed output stream, so a given seed reproduces
//! the same result on every platform.
//!
//! [`ChaCha8Rng`]: rand_chacha::ChaCha8Rng

mod exact;
mod sampler;

pub use exact::{bace_exact_posterior_small, ExactLimits};

use serde::{Deserialize, Serialize};

use crate::data::{AnnotationMatrix, LabelCode};
use crate::error::{Error, Result};
use crate::scalar::{argmax, quantile_sorted, Scalar};
use sampler::{run_chain, Prepared};

/// Conjugate prior pseudo-counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacePriors<T> {
    /// Beta(a, b) on each coder's competence.
    pub beta: (T, T),
    /// Dirichlet on each coder's bias distribution, one entry per label.
    pub gamma: Vec<T>,
    /// Dirichlet on the truth distribution, one entry per label.
    pub pi: Vec<T>,
}

impl<T: Scalar> BacePriors<T> {
    /// Beta(2, 2) competence, flat Dirichlet bias and truth priors.
    pub fn weakly_informative(k: usize) -> Self {
        Self {
            beta: (T::lit(2.0), T::lit(2.0)),
            gamma: vec![T::one(); k],
            pi: vec![T::one(); k],
        }
    }

    pub(crate) fn validate(&self, k: usize) -> Result<()> {
        let ok = |x: T| x > T::zero() && x.is_finite();
        if self.gamma.len() != k || self.pi.len() != k {
            return Err(Error::InvalidConfig(format!(
                "prior vectors must have {k} entries"
            )));
        }
        let all = [self.beta.0, self.beta.1]
            .into_iter()
            .chain(self.gamma.iter().copied())
            .chain(self.pi.iter().copied());
        for x in all {
            if !ok(x) {
                return Err(Error::InvalidConfig(format!(
                    "prior pseudo-counts must be positive, got {x}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig<T> {
    pub burn_in: usize,
    pub samples: usize,
    pub chains: usize,
    pub seed: u64,
    /// `None` selects [`BacePriors::weakly_informative`] for the label count.
    pub priors: Option<BacePriors<T>>,
}

impl<T> Default for GibbsConfig<T> {
    fn default() -> Self {
        Self {
            burn_in: 500,
            samples: 2000,
            chains: 2,
            seed: 0,
            priors: None,
        }
    }
}

impl<T: Scalar> GibbsConfig<T> {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn resolved_priors(&self, k: usize) -> BacePriors<T> {
        self.priors
            .clone()
            .unwrap_or_else(|| BacePriors::weakly_informative(k))
    }
}

/// Posterior summary of one coder (competence β and bias γ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoderProfile<T> {
    pub coder_id: String,
    pub beta_mean: T,
    pub beta_interval_95: (T, T),
    pub gamma_mean: Vec<T>,
    pub gamma_interval_95: Vec<(T, T)>,
}

/// Posterior over one item's true label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorLabel<T> {
    pub item_id: String,
    pub pmf: Vec<T>,
    pub map_label: LabelCode,
    /// 95% band of the conditional probability of `map_label` across kept sweeps.
    pub map_probability_interval_95: (T, T),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    pub draws_per_chain: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaceResult<T> {
    pub profiles: Vec<CoderProfile<T>>,
    pub truth_prior_mean: Vec<T>,
    pub labels: Vec<PosteriorLabel<T>>,
    pub config: GibbsConfig<T>,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<String>,
}

impl<T> BaceResult<T> {
    pub fn map_labels(&self) -> Vec<LabelCode> {
        self.labels.iter().map(|l| l.map_label).collect()
    }
}

/// Minimum coders per item the model is recommended for.
pub const RECOMMENDED_CODERS: usize = 3;

fn chain_seed(seed: u64, chain: usize) -> u64 {
    seed.wrapping_add(chain as u64)
}

/// Runs `work` for every chain on its own thread, returning results in chain order.
fn per_chain<R: Send>(chains: usize, work: impl Fn(usize) -> R + Sync) -> Vec<R> {
    if chains == 1 {
        return vec![work(0)];
    }
    std::thread::scope(|scope| {
        let work = &work;
        let handles: Vec<_> = (0..chains).map(|c| scope.spawn(move || work(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampler thread panicked"))
            .collect()
    })
}

fn interval<T: Scalar>(mut draws: Vec<T>) -> (T, T) {
    draws.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
    (quantile_sorted(&draws, 0.025), quantile_sorted(&draws, 0.975))
}

fn mean<T: Scalar>(values: impl Iterator<Item = T>) -> T {
    let mut n = 0usize;
    let total = values.fold(T::zero(), |acc, v| {
        n += 1;
        acc + v
    });
    total / T::from_count(n)
}

pub fn bace_fit<T: Scalar>(matrix: &AnnotationMatrix, config: &GibbsConfig<T>) -> Result<BaceResult<T>> {
    if matrix.n_items() == 0 || matrix.n_coders() == 0 {
        return Err(Error::Empty);
    }
    if config.samples == 0 || config.chains == 0 {
        return Err(Error::InvalidConfig("samples and chains must be at least 1".into()));
    }
    if let Some(i) = (0..matrix.n_items()).find(|&i| matrix.item_annotation_count(i) == 0) {
        return Err(Error::UnannotatedItem(matrix.items()[i].clone()));
    }
    let k = matrix.n_labels();
    let m = matrix.n_coders();
    let n = matrix.n_items();
    let priors = config.resolved_priors(k);
    priors.validate(k)?;

    let mut warnings = Vec::new();
    if m < RECOMMENDED_CODERS {
        warnings.push(format!(
            "only {m} coder(s); the model is recommended for data coded by at least {RECOMMENDED_CODERS} coders"
        ));
    }

    let data = Prepared::new(matrix);
    let (burn_in, samples) = (config.burn_in, config.samples);

    // First pass: Rao-Blackwellized truth pmfs and parameter traces.
    let first = per_chain(config.chains, |c| {
        let mut sums = vec![T::zero(); n * k];
        let trace = run_chain(&data, &priors, burn_in, samples, chain_seed(config.seed, c), true, |i, p| {
            for (acc, &x) in sums[i * k..(i + 1) * k].iter_mut().zip(p) {
                *acc = *acc + x;
            }
        });
        (sums, trace)
    });
    let total_draws = T::from_count(samples * config.chains);
    let mut sums = vec![T::zero(); n * k];
    for (chain_sums, _) in &first {
        for (acc, &x) in sums.iter_mut().zip(chain_sums) {
            *acc = *acc + x;
        }
    }
    let pmfs: Vec<Vec<T>> = sums
        .chunks(k)
        .map(|row| {
            let mut pmf: Vec<T> = row.iter().map(|&x| x / total_draws).collect();
            let z = pmf.iter().copied().fold(T::zero(), |a, b| a + b);
            pmf.iter_mut().for_each(|p| *p = *p / z);
            pmf
        })
        .collect();
    let map: Vec<LabelCode> = pmfs.iter().map(|p| argmax(p)).collect();

    // Second pass replays the same chains to collect the conditional
    // probability of each item's MAP label.
    let replays = per_chain(config.chains, |c| {
        let mut values = vec![T::zero(); n * samples];
        let mut sweep_of = vec![0usize; n];
        run_chain(&data, &priors, burn_in, samples, chain_seed(config.seed, c), false, |i, probs| {
            values[i * samples + sweep_of[i]] = probs[map[i]];
            sweep_of[i] += 1;
        });
        values
    });

    let labels = (0..n)
        .map(|i| {
            let draws: Vec<T> = replays
                .iter()
                .flat_map(|v| v[i * samples..(i + 1) * samples].iter().copied())
                .collect();
            PosteriorLabel {
                item_id: matrix.items()[i].clone(),
                pmf: pmfs[i].clone(),
                map_label: map[i],
                map_probability_interval_95: interval(draws),
            }
        })
        .collect();

    let traces: Vec<_> = first.into_iter().map(|(_, t)| t).collect();
    let profiles = (0..m)
        .map(|j| {
            let betas: Vec<T> = traces
                .iter()
                .flat_map(|t| t.beta.iter().skip(j).step_by(m).copied())
                .collect();
            let gamma_draws = |c: usize| -> Vec<T> {
                traces
                    .iter()
                    .flat_map(|t| t.gamma.iter().skip(j * k + c).step_by(m * k).copied())
                    .collect()
            };
            let mut gamma_mean: Vec<T> = (0..k).map(|c| mean(gamma_draws(c).into_iter())).collect();
            let total: T = gamma_mean.iter().copied().fold(T::zero(), |a, b| a + b);
            gamma_mean.iter_mut().for_each(|g| *g = *g / total);
            CoderProfile {
                coder_id: matrix.coders()[j].clone(),
                beta_mean: mean(betas.iter().copied()),
                beta_interval_95: interval(betas),
                gamma_mean,
                gamma_interval_95: (0..k).map(|c| interval(gamma_draws(c))).collect(),
            }
        })
        .collect();
    let truth_prior_mean = (0..k)
        .map(|c| mean(traces.iter().flat_map(|t| t.pi.iter().skip(c).step_by(k).copied())))
        .collect();

    Ok(BaceResult {
        profiles,
        truth_prior_mean,
        labels,
        config: GibbsConfig {
            priors: Some(priors),
            ..config.clone()
        },
        diagnostics: Diagnostics {
            draws_per_chain: vec![samples; config.chains],
        },
        warnings,
    })
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

    fn quick(seed: u64) -> GibbsConfig<f64> {
        GibbsConfig {
            burn_in: 100,
            samples: 400,
            chains: 2,
            seed,
            priors: None,
        }
    }

    #[test]
    fn unanimous_items_are_confident() {
        let rows = (0..30).map(|i| vec![Some(i % 3); 3]).collect();
        let fit = bace_fit(&matrix(3, rows), &GibbsConfig::<f64>::with_seed(1)).unwrap();
        for (i, l) in fit.labels.iter().enumerate() {
            assert_eq!(l.map_label, i % 3);
            assert!(l.pmf[i % 3] > 0.95);
        }
        assert!(fit.profiles.iter().all(|p| p.beta_mean > 0.8));
        assert!(fit.warnings.is_empty());
    }

    #[test]
    fn chains_agree_on_unanimous_data() {
        let m = matrix(3, (0..20).map(|i| vec![Some(i % 3); 3]).collect());
        let single = |seed| {
            let cfg = GibbsConfig { chains: 1, ..quick(seed) };
            bace_fit(&m, &cfg).unwrap().map_labels()
        };
        assert_eq!(single(3), single(4));
    }

    #[test]
    fn outputs_are_well_formed() {
        let rows = vec![
            vec![Some(0), Some(0), Some(1)],
            vec![Some(1), Some(2), Some(2)],
            vec![Some(2), None, Some(2)],
            vec![Some(0), Some(1), Some(2)],
        ];
        let fit = bace_fit(&matrix(3, rows), &quick(2)).unwrap();
        for l in &fit.labels {
            assert!((l.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert_eq!(l.map_label, argmax(&l.pmf));
            let (lo, hi) = l.map_probability_interval_95;
            assert!(0.0 <= lo && lo <= hi && hi <= 1.0);
        }
        for p in &fit.profiles {
            assert!((p.gamma_mean.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            let (lo, hi) = p.beta_interval_95;
            assert!(0.0 < lo && lo <= p.beta_mean && p.beta_mean <= hi && hi < 1.0);
            for (g, (lo, hi)) in p.gamma_mean.iter().zip(&p.gamma_interval_95) {
                assert!(0.0 <= *lo && lo <= g && g <= hi && *hi <= 1.0);
            }
        }
        assert_eq!(fit.diagnostics.draws_per_chain, vec![400, 400]);
        assert!((fit.truth_prior_mean.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identical_seed_identical_result() {
        let rows = vec![vec![Some(0), Some(1), Some(1)], vec![Some(1), Some(1), None]];
        let m = matrix(2, rows);
        assert_eq!(bace_fit(&m, &quick(42)).unwrap(), bace_fit(&m, &quick(42)).unwrap());
    }

    #[test]
    fn warns_below_three_coders() {
        let m = matrix(2, vec![vec![Some(0), Some(1)], vec![Some(1), Some(1)]]);
        let fit = bace_fit(&m, &quick(0)).unwrap();
        assert_eq!(fit.warnings.len(), 1);
        assert!(fit.warnings[0].contains("at least 3 coders"));
    }

    #[test]
    fn rejects_unannotated_item_and_bad_config() {
        let m = matrix(2, vec![vec![Some(0), Some(1)], vec![None, None]]);
        assert_eq!(bace_fit(&m, &quick(0)).unwrap_err(), Error::UnannotatedItem("i1".into()));
        let m = matrix(2, vec![vec![Some(0), Some(1)]]);
        let cfg = GibbsConfig { samples: 0, ..quick(0) };
        assert!(matches!(bace_fit(&m, &cfg), Err(Error::InvalidConfig(_))));
        let cfg = GibbsConfig {
            priors: Some(BacePriors { beta: (0.0, 1.0), gamma: vec![1.0; 2], pi: vec![1.0; 2] }),
            ..quick(0)
        };
        assert!(matches!(bace_fit(&m, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn single_precision_runs() {
        let rows = (0..10).map(|i| vec![Some(i % 2), Some(i % 2), Some(1)]).collect();
        let cfg = GibbsConfig::<f32> { burn_in: 50, samples: 200, chains: 1, seed: 5, priors: None };
        let fit = bace_fit(&matrix(2, rows), &cfg).unwrap();
        assert!(fit.profiles.iter().all(|p| (p.gamma_mean.iter().sum::<f32>() - 1.0).abs() < 1e-6));
    }
}
