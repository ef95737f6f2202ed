//! Embedding-space diversity measures.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Unit-length copy, or `None` for a zero vector.
pub fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("cosine similarity of a zero vector"));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

fn unit_all(embeddings: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    embeddings
        .iter()
        .enumerate()
        .map(|(i, e)| normalized(e).ok_or_else(|| Error::invalid(format!("embedding {i} has zero norm"))))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0)
}

/// Cosine-similarity matrix of the inputs.
pub fn similarity_matrix(embeddings: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let u = unit_all(embeddings)?;
    Ok(u.iter().map(|a| u.iter().map(|b| dot(a, b)).collect()).collect())
}

/// Mean pairwise cosine distance. Zero for fewer than two items.
pub fn paraphrase_variety(embeddings: &[Vec<f64>]) -> Result<f64> {
    let u = unit_all(embeddings)?;
    let n = u.len();
    if n < 2 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += 1.0 - dot(&u[i], &u[j]);
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// Mean over points of the cosine distance to the nearest other point.
pub fn chamfer_distance_score(embeddings: &[Vec<f64>]) -> Result<f64> {
    let u = unit_all(embeddings)?;
    let n = u.len();
    if n < 2 {
        return Ok(0.0);
    }
    let total: f64 = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| 1.0 - dot(&u[i], &u[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / n as f64)
}

/// Mean cosine distance from each point to the centroid of the raw embeddings.
pub fn semantic_spread(embeddings: &[Vec<f64>]) -> Result<f64> {
    if embeddings.is_empty() {
        return Err(Error::invalid("semantic_spread needs at least one embedding"));
    }
    let dim = embeddings[0].len();
    let mut centroid = vec![0.0; dim];
    for e in embeddings {
        for (c, x) in centroid.iter_mut().zip(e) {
            *c += x;
        }
    }
    let n = embeddings.len() as f64;
    centroid.iter_mut().for_each(|c| *c /= n);
    if norm(&centroid) < 1e-12 {
        return Err(Error::invalid("degenerate centroid (zero norm)"));
    }
    let total: f64 = embeddings
        .iter()
        .map(|e| cosine(e, &centroid).map(|c| 1.0 - c))
        .sum::<Result<f64>>()?;
    Ok(total / n)
}

/// Exponential of the eigenvalue entropy of `K / n`, with `K` the cosine kernel.
pub fn vendi_score(embeddings: &[Vec<f64>]) -> Result<f64> {
    let n = embeddings.len();
    if n == 0 {
        return Err(Error::invalid("vendi_score needs at least one embedding"));
    }
    let k = similarity_matrix(embeddings)?;
    let m = DMatrix::from_fn(n, n, |i, j| k[i][j] / n as f64);
    let eig = SymmetricEigen::new(m);
    let mut h = 0.0;
    for &lambda in eig.eigenvalues.iter() {
        let l = if lambda < 0.0 && lambda >= -1e-9 { 0.0 } else { lambda };
        if l < 0.0 {
            return Err(Error::invalid(format!("kernel not positive semidefinite (eigenvalue {l})")));
        }
        if l > 0.0 {
            h -= l * l.ln();
        }
    }
    Ok(h.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    }

    #[test]
    fn paraphrase_variety_cases() {
        assert!(paraphrase_variety(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap().abs() < 1e-12);
        assert!((paraphrase_variety(&[e(0, 2), e(1, 2)]).unwrap() - 1.0).abs() < 1e-12);
        // Unit vectors at 0, 60 and 90 degrees: distances 0.5, 1, 1 - cos 30.
        let a = vec![1.0, 0.0];
        let b = vec![0.5, 3f64.sqrt() / 2.0];
        let c = vec![0.0, 1.0];
        let expected = (0.5 + 1.0 + (1.0 - 3f64.sqrt() / 2.0)) / 3.0;
        assert!((paraphrase_variety(&[a, b, c]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn chamfer_cases() {
        assert!((chamfer_distance_score(&[e(0, 2), e(1, 2)]).unwrap() - 1.0).abs() < 1e-12);
        let dup = [e(0, 3), e(0, 3), e(1, 3)];
        // Two duplicates contribute 0; the third is at distance 1.
        assert!((chamfer_distance_score(&dup).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn spread_cases() {
        assert!(semantic_spread(&[e(0, 2), e(0, 2)]).unwrap().abs() < 1e-12);
        let s = semantic_spread(&[e(0, 2), e(1, 2)]).unwrap();
        assert!((s - (1.0 - 1.0 / 2f64.sqrt())).abs() < 1e-12);
        assert!(semantic_spread(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).is_err());
    }

    #[test]
    fn vendi_cases() {
        let same = vec![vec![0.3, 0.4]; 5];
        assert!((vendi_score(&same).unwrap() - 1.0).abs() < 1e-6);
        let ortho: Vec<_> = (0..6).map(|i| e(i, 6)).collect();
        assert!((vendi_score(&ortho).unwrap() - 6.0).abs() < 1e-6);
        let pairs = [e(0, 2), e(0, 2), e(1, 2), e(1, 2)];
        assert!((vendi_score(&pairs).unwrap() - 2.0).abs() < 1e-6);
    }
}
