use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Fused {
    /// RRF score per candidate, in input order.
    pub scores: Vec<f64>,
    /// Candidate indices by descending score; ties keep input order.
    pub order: Vec<usize>,
}

/// Competition ranks (1, 2, 2, 4) with higher values ranked first.
pub fn ranks_descending(values: &[f64]) -> Vec<usize> {
    values
        .iter()
        .map(|v| 1 + values.iter().filter(|w| *w > v).count())
        .collect()
}

/// `rankings[m][c]` is the 1-based rank of candidate `c` under ranker `m`.
pub fn rrf_fuse(rankings: &[Vec<usize>], k: usize) -> Result<Fused> {
    let Some(first) = rankings.first() else {
        return Err(Error::invalid("rrf_fuse needs at least one ranking"));
    };
    let n = first.len();
    if rankings.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("rankings cover different candidate sets"));
    }
    if rankings.iter().flatten().any(|&r| r == 0) {
        return Err(Error::invalid("ranks start at 1"));
    }
    let scores: Vec<f64> = (0..n)
        .map(|c| rankings.iter().map(|r| 1.0 / (k + r[c]) as f64).sum())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(Fused { scores, order })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_candidate() {
        let f = rrf_fuse(&vec![vec![1]; 5], 60).unwrap();
        assert!((f.scores[0] - 5.0 / 61.0).abs() < 1e-15);
    }

    #[test]
    fn all_first_over_eight_metrics() {
        let ranks: Vec<Vec<usize>> = (0..8).map(|_| vec![1, 2, 3]).collect();
        let f = rrf_fuse(&ranks, 60).unwrap();
        assert!((f.scores[0] - 8.0 / 61.0).abs() < 1e-12);
        assert_eq!(f.order[0], 0);
    }

    #[test]
    fn mirrored_ranks_tie_by_insertion() {
        let f = rrf_fuse(&[vec![1, 2], vec![2, 1]], 60).unwrap();
        assert_eq!(f.scores[0], f.scores[1]);
        assert!((f.scores[0] - (1.0 / 61.0 + 1.0 / 62.0)).abs() < 1e-15);
        assert_eq!(f.order, vec![0, 1]);
    }

    #[test]
    fn competition_ranking() {
        assert_eq!(ranks_descending(&[0.5, 0.9, 0.5, 0.1]), vec![2, 1, 2, 4]);
    }

    #[test]
    fn rejects_mismatched_lengths() {
        assert!(rrf_fuse(&[vec![1, 2], vec![1]], 60).is_err());
        assert!(rrf_fuse(&[], 60).is_err());
    }
}
