//! Resampling and hypothesis tests for comparing corpora and models.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

use crate::error::{Error, Result};

use super::readability::variance;

/// Draws `m` distinct indices from `0..n` by a partial Fisher-Yates shuffle.
pub fn subsample_indices(rng: &mut impl Rng, n: usize, m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m.min(n) {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(m.min(n));
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub resamples: usize,
    pub fraction: f64,
    pub seed: u64,
}

impl Default for Bootstrap {
    fn default() -> Self {
        Bootstrap {
            resamples: 100,
            fraction: 0.8,
            seed: 0,
        }
    }
}

/// Population standard deviation of `metric` over subsamples of
/// `floor(fraction * n)` items drawn without replacement.
pub fn bootstrap_std<T, F>(items: &[T], metric: F, cfg: Bootstrap) -> Result<f64>
where
    T: Clone,
    F: Fn(&[T]) -> Result<f64>,
{
    let values = bootstrap_values(items, metric, cfg)?;
    Ok(variance(&values).sqrt())
}

pub fn bootstrap_values<T, F>(items: &[T], metric: F, cfg: Bootstrap) -> Result<Vec<f64>>
where
    T: Clone,
    F: Fn(&[T]) -> Result<f64>,
{
    if items.is_empty() {
        return Err(Error::invalid("bootstrap over an empty set"));
    }
    let m = (cfg.fraction * items.len() as f64).floor() as usize;
    if m == 0 {
        return Err(Error::invalid("bootstrap subsample would be empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.resamples)
        .map(|_| {
            let sample: Vec<T> = subsample_indices(&mut rng, items.len(), m)
                .into_iter()
                .map(|i| items[i].clone())
                .collect();
            metric(&sample)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    FirstHigher,
    SecondHigher,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Significance {
    pub significant: bool,
    pub direction: Direction,
}

/// `|mu1 - mu2| > 1.96 * sqrt(s1^2 + s2^2)`, strict.
pub fn significance(mu1: f64, sigma1: f64, mu2: f64, sigma2: f64) -> Significance {
    let diff = mu1 - mu2;
    let direction = match diff.partial_cmp(&0.0) {
        Some(Ordering::Greater) => Direction::FirstHigher,
        Some(Ordering::Less) => Direction::SecondHigher,
        _ => Direction::Equal,
    };
    Significance {
        significant: diff.abs() > 1.96 * (sigma1 * sigma1 + sigma2 * sigma2).sqrt(),
        direction,
    }
}

pub const MCNEMAR_EXACT_THRESHOLD: u64 = 25;

/// Two-sided McNemar p-value from discordant counts. Exact binomial below
/// `exact_threshold` total discordant pairs, continuity-corrected chi-square above.
pub fn mcnemar(b: u64, c: u64, exact_threshold: u64) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    if n < exact_threshold {
        let k = b.min(c);
        let binom = Binomial::new(0.5, n).expect("valid binomial");
        (2.0 * binom.cdf(k)).min(1.0)
    } else {
        let chi2 = mcnemar_statistic(b, c);
        ChiSquared::new(1.0).expect("valid chi2").sf(chi2)
    }
}

/// Continuity-corrected statistic `(|b - c| - 1)^2 / (b + c)`.
pub fn mcnemar_statistic(b: u64, c: u64) -> f64 {
    let d = (b as f64 - c as f64).abs() - 1.0;
    let d = d.max(0.0);
    d * d / (b + c) as f64
}

/// Holm step-down procedure; decisions are returned in input order.
pub fn holm_bonferroni(pvalues: &[f64], alpha: f64) -> Vec<bool> {
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));
    let mut reject = vec![false; m];
    for (i, &idx) in order.iter().enumerate() {
        if pvalues[idx] <= alpha / (m - i) as f64 {
            reject[idx] = true;
        } else {
            break;
        }
    }
    reject
}

/// Mean and bootstrap standard deviation in one call.
pub fn mean_and_std<T, F>(items: &[T], metric: F, cfg: Bootstrap) -> Result<(f64, f64)>
where
    T: Clone,
    F: Fn(&[T]) -> Result<f64>,
{
    let full = metric(items)?;
    let std = bootstrap_std(items, metric, cfg)?;
    Ok((full, std))
}
