use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::BacePriors;
use crate::data::AnnotationMatrix;
use crate::scalar::{normalize_log_weights, sample_beta, sample_categorical, sample_dirichlet, Scalar};

/// Annotations in compressed per-item form.
pub(super) struct Prepared {
    pub n_items: usize,
    pub n_coders: usize,
    pub k: usize,
    offsets: Vec<usize>,
    coder: Vec<usize>,
    label: Vec<usize>,
}

impl Prepared {
    pub fn new(matrix: &AnnotationMatrix) -> Self {
        let mut offsets = Vec::with_capacity(matrix.n_items() + 1);
        let mut coder = Vec::with_capacity(matrix.n_decisions());
        let mut label = Vec::with_capacity(matrix.n_decisions());
        offsets.push(0);
        for i in 0..matrix.n_items() {
            for (j, l) in matrix.annotations(i) {
                coder.push(j);
                label.push(l);
            }
            offsets.push(coder.len());
        }
        Self {
            n_items: matrix.n_items(),
            n_coders: matrix.n_coders(),
            k: matrix.n_labels(),
            offsets,
            coder,
            label,
        }
    }

    fn span(&self, item: usize) -> std::ops::Range<usize> {
        self.offsets[item]..self.offsets[item + 1]
    }
}

/// Parameter draws kept after burn-in, flattened draw-major.
#[derive(Default)]
pub(super) struct ParamTrace<T> {
    pub beta: Vec<T>,
    pub gamma: Vec<T>,
    pub pi: Vec<T>,
}

/// Runs one chain. After burn-in, `on_item(item, conditional_pmf)` fires for
/// every item in every kept sweep.
pub(super) fn run_chain<T, F>(
    data: &Prepared,
    priors: &BacePriors<T>,
    burn_in: usize,
    samples: usize,
    seed: u64,
    keep_params: bool,
    mut on_item: F,
) -> ParamTrace<T>
where
    T: Scalar,
    F: FnMut(usize, &[T]),
{
    let k = data.k;
    let m = data.n_coders;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Start from the prior means.
    let (pa, pb) = priors.beta;
    let mut beta = vec![pa / (pa + pb); m];
    let gamma_total = priors.gamma.iter().copied().fold(T::zero(), |a, b| a + b);
    let mut gamma: Vec<T> = (0..m).flat_map(|_| priors.gamma.iter().map(|&g| g / gamma_total)).collect();
    let pi_total = priors.pi.iter().copied().fold(T::zero(), |a, b| a + b);
    let mut pi: Vec<T> = priors.pi.iter().map(|&p| p / pi_total).collect();

    let mut truth = vec![0usize; data.n_items];
    let mut honest = vec![false; data.label.len()];
    let mut probs = vec![T::zero(); k];
    let mut lik = vec![T::zero(); k];
    let mut collapsed = vec![T::zero(); k];
    let mut alpha = vec![T::zero(); k];
    let mut honest_count = vec![0usize; m];
    let mut noise_count = vec![0usize; m * k];
    let mut truth_count = vec![0usize; k];

    let mut trace = ParamTrace::default();
    if keep_params {
        trace.beta.reserve(samples * m);
        trace.gamma.reserve(samples * m * k);
        trace.pi.reserve(samples * k);
    }

    for sweep in 0..burn_in + samples {
        let kept = sweep >= burn_in;

        // Truth labels with the honesty indicators integrated out. The reported
        // conditional additionally integrates out π given the other truths.
        truth_count.iter_mut().for_each(|c| *c = 0);
        for &t in &truth {
            truth_count[t] += 1;
        }
        for (item, t) in truth.iter_mut().enumerate() {
            truth_count[*t] -= 1;
            lik.iter_mut().for_each(|p| *p = T::zero());
            for a in data.span(item) {
                let (j, l) = (data.coder[a], data.label[a]);
                let noise = (T::one() - beta[j]) * gamma[j * k + l];
                let ln_noise = noise.ln();
                for (c, p) in lik.iter_mut().enumerate() {
                    *p = *p + if c == l { (beta[j] + noise).ln() } else { ln_noise };
                }
            }
            for c in 0..k {
                probs[c] = pi[c].ln() + lik[c];
            }
            normalize_log_weights(&mut probs);
            *t = sample_categorical(&mut rng, &probs);
            if kept {
                for c in 0..k {
                    collapsed[c] = (priors.pi[c] + T::from_count(truth_count[c])).ln() + lik[c];
                }
                normalize_log_weights(&mut collapsed);
                on_item(item, &collapsed);
            }
            truth_count[*t] += 1;
        }

        // Honesty indicators; only annotations matching the truth can be honest.
        for item in 0..data.n_items {
            for a in data.span(item) {
                let (j, l) = (data.coder[a], data.label[a]);
                honest[a] = if l == truth[item] {
                    let noise = (T::one() - beta[j]) * gamma[j * k + l];
                    let p = beta[j] / (beta[j] + noise);
                    T::sample_open01(&mut rng) < p
                } else {
                    false
                };
            }
        }

        // Conjugate parameter updates.
        honest_count.iter_mut().for_each(|c| *c = 0);
        noise_count.iter_mut().for_each(|c| *c = 0);
        let mut total_count = vec![0usize; m];
        for (a, &h) in honest.iter().enumerate() {
            let j = data.coder[a];
            total_count[j] += 1;
            if h {
                honest_count[j] += 1;
            } else {
                noise_count[j * k + data.label[a]] += 1;
            }
        }
        for j in 0..m {
            beta[j] = sample_beta(
                &mut rng,
                pa + T::from_count(honest_count[j]),
                pb + T::from_count(total_count[j] - honest_count[j]),
            );
            for c in 0..k {
                alpha[c] = priors.gamma[c] + T::from_count(noise_count[j * k + c]);
            }
            sample_dirichlet(&mut rng, &alpha, &mut gamma[j * k..(j + 1) * k]);
        }
        truth_count.iter_mut().for_each(|c| *c = 0);
        for &t in &truth {
            truth_count[t] += 1;
        }
        for c in 0..k {
            alpha[c] = priors.pi[c] + T::from_count(truth_count[c]);
        }
        sample_dirichlet(&mut rng, &alpha, &mut pi);

        if kept && keep_params {
            trace.beta.extend_from_slice(&beta);
            trace.gamma.extend_from_slice(&gamma);
            trace.pi.extend_from_slice(&pi);
        }
    }
    trace
}
