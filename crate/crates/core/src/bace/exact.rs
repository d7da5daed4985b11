//! Exact posterior of the truth labels on tiny instances, independent of the
//! sampler: every joint truth assignment is enumerated and the continuous
//! parameters are integrated out by tensor-product Gauss–Legendre quadrature.
//!
//! Given a truth assignment the integrand factorizes into one term for `π`
//! and one per coder, so each coder's `(β, γ)` integral is a `K`-dimensional
//! grid. Dirichlet variables use the stick-breaking representation: the
//! sticks are independent Beta variables, so every axis is a 1-D rule
//! weighted by a Beta density.

use super::BacePriors;
use crate::data::AnnotationMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Size limits of the exact computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactLimits;

impl ExactLimits {
    pub const MAX_ITEMS: usize = 3;
    pub const MAX_CODERS: usize = 3;
    pub const MAX_LABELS: usize = 3;
    pub const MAX_RESOLUTION: usize = 256;
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [0, 1].
fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp;
        loop {
            // Legendre recurrence: p1 = P_n(z), p2 = P_{n-1}(z).
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.push(((1.0 - z) / 2.0, w / 2.0));
    }
    rule
}

fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Lanczos approximation (g = 7, n = 9).
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let series = COEF
        .iter()
        .enumerate()
        .skip(1)
        .fold(COEF[0], |acc, (i, c)| acc + c / (x + i as f64));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// Quadrature rule for a Beta(a, b) variable, weights normalized to sum to 1.
fn beta_rule(base: &[(f64, f64)], a: f64, b: f64) -> Vec<(f64, f64)> {
    let ln_norm = ln_beta_fn(a, b);
    let mut rule: Vec<(f64, f64)> = base
        .iter()
        .map(|&(x, w)| {
            let ln_pdf = (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_norm;
            (x, w * ln_pdf.exp())
        })
        .collect();
    let total: f64 = rule.iter().map(|r| r.1).sum();
    rule.iter_mut().for_each(|r| r.1 /= total);
    rule
}

/// Tensor grid over a Dirichlet(alpha) simplex: (point, weight) pairs.
fn dirichlet_grid(base: &[(f64, f64)], alpha: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let k = alpha.len();
    let mut grid = vec![(Vec::new(), 1.0, 1.0)]; // (coords, weight, remaining stick)
    for c in 0..k - 1 {
        let rest: f64 = alpha[c + 1..].iter().sum();
        let rule = beta_rule(base, alpha[c], rest);
        let mut next = Vec::with_capacity(grid.len() * rule.len());
        for (coords, w, stick) in &grid {
            for &(v, wv) in &rule {
                let mut p: Vec<f64> = coords.clone();
                p.push(stick * v);
                next.push((p, w * wv, stick * (1.0 - v)));
            }
        }
        grid = next;
    }
    grid.into_iter()
        .map(|(mut p, w, stick)| {
            p.push(stick);
            (p, w)
        })
        .collect()
}

/// Exact per-item truth posteriors for instances within [`ExactLimits`].
pub fn bace_exact_posterior_small<T: Scalar>(
    matrix: &AnnotationMatrix,
    priors: &BacePriors<T>,
    grid_resolution: usize,
) -> Result<Vec<Vec<T>>> {
    let (n, m, k) = (matrix.n_items(), matrix.n_coders(), matrix.n_labels());
    if n > ExactLimits::MAX_ITEMS || m > ExactLimits::MAX_CODERS || k > ExactLimits::MAX_LABELS {
        return Err(Error::TooLarge(format!(
            "{n} items, {m} coders, {k} labels (limits {}, {}, {})",
            ExactLimits::MAX_ITEMS,
            ExactLimits::MAX_CODERS,
            ExactLimits::MAX_LABELS
        )));
    }
    if !(2..=ExactLimits::MAX_RESOLUTION).contains(&grid_resolution) {
        return Err(Error::InvalidConfig(format!(
            "grid resolution must be in 2..={}",
            ExactLimits::MAX_RESOLUTION
        )));
    }
    priors.validate(k)?;
    let f = |x: T| x.to_f64().expect("finite prior");
    let base = gauss_legendre_unit(grid_resolution);
    let beta_nodes = beta_rule(&base, f(priors.beta.0), f(priors.beta.1));
    let gamma_grid = dirichlet_grid(&base, &priors.gamma.iter().map(|&g| f(g)).collect::<Vec<_>>());
    let pi_grid = dirichlet_grid(&base, &priors.pi.iter().map(|&p| f(p)).collect::<Vec<_>>());

    let per_coder: Vec<Vec<(usize, usize)>> = (0..m)
        .map(|j| (0..n).filter_map(|i| matrix.get(i, j).map(|l| (i, l))).collect())
        .collect();

    let mut posterior = vec![vec![0.0f64; k]; n];
    let mut evidence = 0.0;
    let mut truth = vec![0usize; n];
    for assignment in 0..k.pow(n as u32) {
        let mut code = assignment;
        for t in truth.iter_mut() {
            *t = code % k;
            code /= k;
        }
        let mut weight: f64 = pi_grid
            .iter()
            .map(|(pi, w)| w * truth.iter().map(|&t| pi[t]).product::<f64>())
            .sum();
        for annotations in &per_coder {
            if annotations.is_empty() {
                continue;
            }
            let mut coder_integral = 0.0;
            for &(b, wb) in &beta_nodes {
                for (gamma, wg) in &gamma_grid {
                    let lik: f64 = annotations
                        .iter()
                        .map(|&(i, l)| {
                            let hit = if l == truth[i] { b } else { 0.0 };
                            hit + (1.0 - b) * gamma[l]
                        })
                        .product();
                    coder_integral += wb * wg * lik;
                }
            }
            weight *= coder_integral;
        }
        evidence += weight;
        for (i, &t) in truth.iter().enumerate() {
            posterior[i][t] += weight;
        }
    }
    Ok(posterior
        .into_iter()
        .map(|row| row.into_iter().map(|p| T::lit(p / evidence)).collect())
        .collect())
}
