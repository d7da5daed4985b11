//! Nominal intercoder reliability: pairwise percent agreement, pairwise Cohen's
//! kappa, Fleiss' kappa and Krippendorff's alpha.
//!
//! Pairwise statistics use the items both coders annotated. Fleiss' kappa
//! uses only items annotated by every coder and reports how many it dropped.
//! Krippendorff's alpha ignores items with fewer than two annotations.
//!
//! Every statistic is assembled from integer counts and averages are summed in
//! sorted order, so relabeling categories or permuting coders reproduces the
//! same floating-point values bit for bit.

use serde::Serialize;

use crate::data::AnnotationMatrix;
use crate::error::{Error, Result};
use crate::scalar::{order_free_sum, Scalar};

/// A statistic computed for one pair of coders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairStat<T> {
    pub coder_a: String,
    pub coder_b: String,
    pub value: T,
}

/// Pairwise values plus their arithmetic mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pairwise<T> {
    pub pairs: Vec<PairStat<T>>,
    pub average: T,
}

impl<T: Scalar> Pairwise<T> {
    fn from_pairs(pairs: Vec<PairStat<T>>) -> Self {
        let values: Vec<T> = pairs.iter().map(|p| p.value).collect();
        let average = order_free_sum(&values) / T::from_count(values.len());
        Self { pairs, average }
    }

    pub fn get(&self, a: &str, b: &str) -> Option<T> {
        self.pairs
            .iter()
            .find(|p| (p.coder_a == a && p.coder_b == b) || (p.coder_a == b && p.coder_b == a))
            .map(|p| p.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FleissKappa<T> {
    pub kappa: T,
    pub observed: T,
    pub expected: T,
    /// Items skipped because not every coder annotated them.
    pub excluded_items: usize,
}

/// Every row of a conventional reliability table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityReport<T> {
    pub n_coders: usize,
    pub n_cases: usize,
    pub n_decisions: usize,
    pub pairwise_percent_agreement: Vec<PairStat<T>>,
    pub average_pairwise_percent_agreement: T,
    pub fleiss_kappa: T,
    pub fleiss_observed: T,
    pub fleiss_expected: T,
    pub fleiss_excluded_items: usize,
    pub pairwise_cohens_kappa: Vec<PairStat<T>>,
    pub average_cohens_kappa: T,
    pub krippendorff_alpha: T,
}

/// Joint label counts for one coder pair over their shared items.
struct PairCounts {
    n: u64,
    agree: u64,
    marg_a: Vec<u64>,
    marg_b: Vec<u64>,
}

fn pair_counts(matrix: &AnnotationMatrix, a: usize, b: usize) -> Result<PairCounts> {
    let k = matrix.n_labels();
    let mut c = PairCounts {
        n: 0,
        agree: 0,
        marg_a: vec![0; k],
        marg_b: vec![0; k],
    };
    for i in 0..matrix.n_items() {
        if let (Some(la), Some(lb)) = (matrix.get(i, a), matrix.get(i, b)) {
            c.n += 1;
            c.agree += u64::from(la == lb);
            c.marg_a[la] += 1;
            c.marg_b[lb] += 1;
        }
    }
    if c.n == 0 {
        return Err(Error::NoJointItems(
            matrix.coders()[a].clone(),
            matrix.coders()[b].clone(),
        ));
    }
    Ok(c)
}

fn check_coders(matrix: &AnnotationMatrix) -> Result<()> {
    if matrix.n_coders() < 2 {
        return Err(Error::TooFewCoders(matrix.n_coders()));
    }
    Ok(())
}

fn for_each_pair<T: Scalar>(
    matrix: &AnnotationMatrix,
    stat: impl Fn(&PairCounts, usize, usize) -> Result<T>,
) -> Result<Pairwise<T>> {
    check_coders(matrix)?;
    let m = matrix.n_coders();
    let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
    for a in 0..m {
        for b in a + 1..m {
            let counts = pair_counts(matrix, a, b)?;
            pairs.push(PairStat {
                coder_a: matrix.coders()[a].clone(),
                coder_b: matrix.coders()[b].clone(),
                value: stat(&counts, a, b)?,
            });
        }
    }
    Ok(Pairwise::from_pairs(pairs))
}

/// Fraction of jointly annotated items on which each coder pair agrees.
pub fn percent_agreement<T: Scalar>(matrix: &AnnotationMatrix) -> Result<Pairwise<T>> {
    for_each_pair(matrix, |c, _, _| {
        Ok(T::from_count(c.agree as usize) / T::from_count(c.n as usize))
    })
}

/// Cohen's kappa for each coder pair, chance agreement from the pair's own marginals.
pub fn cohens_kappa<T: Scalar>(matrix: &AnnotationMatrix) -> Result<Pairwise<T>> {
    for_each_pair(matrix, |c, a, b| {
        let n = c.n as u128;
        let cross: u128 = c
            .marg_a
            .iter()
            .zip(&c.marg_b)
            .map(|(&x, &y)| x as u128 * y as u128)
            .sum();
        if cross == n * n {
            return Err(Error::UndefinedKappa(
                matrix.coders()[a].clone(),
                matrix.coders()[b].clone(),
            ));
        }
        let observed = T::from_count(c.agree as usize) / T::from_count(c.n as usize);
        let expected = T::from_count(cross as usize) / T::from_count((n * n) as usize);
        Ok((observed - expected) / (T::one() - expected))
    })
}

/// Fleiss' kappa over the items annotated by every coder.
pub fn fleiss_kappa<T: Scalar>(matrix: &AnnotationMatrix) -> Result<FleissKappa<T>> {
    check_coders(matrix)?;
    let m = matrix.n_coders();
    let k = matrix.n_labels();
    let mut complete = 0usize;
    let mut same_pairs: u128 = 0;
    let mut totals = vec![0u128; k];
    for i in 0..matrix.n_items() {
        if matrix.item_annotation_count(i) != m {
            continue;
        }
        complete += 1;
        for (l, &c) in matrix.vote_counts(i).iter().enumerate() {
            let c = c as u128;
            same_pairs += c * c.saturating_sub(1);
            totals[l] += c;
        }
    }
    if complete < 2 {
        return Err(Error::TooFewCompleteItems(complete));
    }
    let n_total = complete as u128 * m as u128;
    let sq: u128 = totals.iter().map(|t| t * t).sum();
    if sq == n_total * n_total {
        return Err(Error::UndefinedFleiss);
    }
    let observed = T::from_count(same_pairs as usize)
        / (T::from_count(complete) * T::from_count(m) * T::from_count(m - 1));
    let expected = T::from_count(sq as usize) / (T::from_count(n_total as usize) * T::from_count(n_total as usize));
    Ok(FleissKappa {
        kappa: (observed - expected) / (T::one() - expected),
        observed,
        expected,
        excluded_items: matrix.n_items() - complete,
    })
}

/// Nominal Krippendorff's alpha from the coincidence matrix.
///
/// With `m_u` pairable values in unit `u` and `n_uc` of them equal to `c`, the
/// off-diagonal coincidence mass is `Σ_u (m_u² − Σ_c n_uc²) / (m_u − 1)` and
/// `alpha = 1 − (n − 1) · that / (n² − Σ_c n_c²)`.
pub fn krippendorff_alpha<T: Scalar>(matrix: &AnnotationMatrix) -> Result<T> {
    let k = matrix.n_labels();
    // Disagreeing ordered pairs, grouped by the unit's value count so each
    // group is an exact integer divided once by (m_u - 1).
    let mut disagree_by_size: std::collections::BTreeMap<usize, u128> = Default::default();
    let mut totals = vec![0u128; k];
    let mut n: u128 = 0;
    for i in 0..matrix.n_items() {
        let mu = matrix.item_annotation_count(i);
        if mu < 2 {
            continue;
        }
        let counts = matrix.vote_counts(i);
        let sq: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
        *disagree_by_size.entry(mu).or_default() += (mu as u128) * (mu as u128) - sq;
        for (l, &c) in counts.iter().enumerate() {
            totals[l] += c as u128;
        }
        n += mu as u128;
    }
    if n == 0 {
        return Err(Error::NoPairableValues);
    }
    let observed: T = disagree_by_size
        .iter()
        .map(|(&mu, &d)| T::from_count(d as usize) / T::from_count(mu - 1))
        .fold(T::zero(), |a, b| a + b);
    if observed == T::zero() {
        return Ok(T::one());
    }
    let expected = n * n - totals.iter().map(|t| t * t).sum::<u128>();
    Ok(T::one() - T::from_count((n - 1) as usize) * observed / T::from_count(expected as usize))
}

/// Computes every reliability statistic for a matrix.
pub fn reliability_report<T: Scalar>(matrix: &AnnotationMatrix) -> Result<ReliabilityReport<T>> {
    check_coders(matrix)?;
    let pa = percent_agreement::<T>(matrix)?;
    let ck = cohens_kappa::<T>(matrix)?;
    let fk = fleiss_kappa::<T>(matrix)?;
    let alpha = krippendorff_alpha::<T>(matrix)?;
    Ok(ReliabilityReport {
        n_coders: matrix.n_coders(),
        n_cases: matrix.n_items(),
        n_decisions: matrix.n_decisions(),
        pairwise_percent_agreement: pa.pairs,
        average_pairwise_percent_agreement: pa.average,
        fleiss_kappa: fk.kappa,
        fleiss_observed: fk.observed,
        fleiss_expected: fk.expected,
        fleiss_excluded_items: fk.excluded_items,
        pairwise_cohens_kappa: ck.pairs,
        average_cohens_kappa: ck.average,
        krippendorff_alpha: alpha,
    })
}
