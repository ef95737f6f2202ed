use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::text::tokenize;

fn counts<S: AsRef<str>>(corpus: &[S]) -> (HashMap<String, usize>, usize) {
    let mut freq = HashMap::new();
    let mut total = 0;
    for doc in corpus {
        for t in tokenize(doc.as_ref()) {
            *freq.entry(t).or_insert(0) += 1;
            total += 1;
        }
    }
    (freq, total)
}

/// Distinct tokens over total tokens, pooled across the corpus.
pub fn type_token_ratio<S: AsRef<str>>(corpus: &[S]) -> Result<f64> {
    let (freq, total) = counts(corpus);
    if total == 0 {
        return Err(Error::invalid("type_token_ratio needs at least one token"));
    }
    Ok(freq.len() as f64 / total as f64)
}

/// `1 - sum p_i^2` over token frequencies.
pub fn simpson_index<S: AsRef<str>>(corpus: &[S]) -> Result<f64> {
    let (freq, total) = counts(corpus);
    if total == 0 {
        return Err(Error::invalid("simpson_index needs at least one token"));
    }
    let n = total as f64;
    let s: f64 = freq.values().map(|&c| (c as f64 / n).powi(2)).sum();
    Ok((1.0 - s).max(0.0))
}

/// Token counts per document.
pub fn token_lengths<S: AsRef<str>>(corpus: &[S]) -> Vec<f64> {
    corpus.iter().map(|d| tokenize(d.as_ref()).len() as f64).collect()
}
