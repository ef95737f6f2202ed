use std::io::Write;

use flate2::Compression;
use flate2::write::DeflateEncoder;

use crate::error::{Error, Result};

const LEVEL: u32 = 6;

/// Raw DEFLATE size at level 6.
pub fn deflate_len(bytes: &[u8]) -> usize {
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::new(LEVEL));
    enc.write_all(bytes).expect("in-memory write");
    enc.finish().expect("in-memory finish").len()
}

/// Compressed over raw byte length of the newline-joined corpus.
pub fn compression_ratio_diversity<S: AsRef<str>>(corpus: &[S]) -> Result<f64> {
    let joined = corpus.iter().map(AsRef::as_ref).collect::<Vec<_>>().join("\n");
    if joined.is_empty() {
        return Err(Error::invalid("compression ratio of an empty corpus"));
    }
    Ok(deflate_len(joined.as_bytes()) as f64 / joined.len() as f64)
}

pub fn ncd(x: &[u8], y: &[u8]) -> f64 {
    let cx = deflate_len(x);
    let cy = deflate_len(y);
    let mut xy = Vec::with_capacity(x.len() + y.len());
    xy.extend_from_slice(x);
    xy.extend_from_slice(y);
    let cxy = deflate_len(&xy);
    (cxy as f64 - cx.min(cy) as f64) / cx.max(cy) as f64
}

/// Mean NCD over unordered pairs.
pub fn ncd_diversity<S: AsRef<str>>(values: &[S]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::invalid("ncd_diversity needs at least two values"));
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += ncd(values[i].as_ref().as_bytes(), values[j].as_ref().as_bytes());
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_letters(rng: &mut ChaCha8Rng, len: usize) -> String {
        (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect()
    }

    #[test]
    fn repeated_sentence_compresses_well() {
        let corpus = vec!["find me a cheap hotel near the station tonight"; 200];
        assert!(compression_ratio_diversity(&corpus).unwrap() < 0.1);
    }

    #[test]
    fn random_strings_compress_poorly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let corpus: Vec<String> = (0..200).map(|_| random_letters(&mut rng, 30)).collect();
        assert!(compression_ratio_diversity(&corpus).unwrap() > 0.5);
    }

    #[test]
    fn appending_a_duplicate_barely_moves_the_ratio() {
        let corpus = vec![
            "what is the weather in lagos".to_string(),
            "book a table for two at eight".to_string(),
            "convert forty dollars to euros".to_string(),
        ];
        let base = compression_ratio_diversity(&corpus).unwrap();
        let mut more = corpus.clone();
        more.push(corpus[1].clone());
        assert!(compression_ratio_diversity(&more).unwrap() <= base + 0.01);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(compression_ratio_diversity::<&str>(&[]).is_err());
    }

    #[test]
    fn ncd_cases() {
        let s = "the quick brown fox jumps over the lazy dog";
        assert!(ncd_diversity(&[s, s]).unwrap() < 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_letters(&mut rng, 2000);
        let b = random_letters(&mut rng, 2000);
        assert!(ncd_diversity(&[a, b]).unwrap() > 0.8);
        assert!(ncd_diversity(&["one"]).is_err());
    }
}
