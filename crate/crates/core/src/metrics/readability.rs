use crate::error::{Error, Result};
use crate::text::{sentences, syllables, tokenize};

/// Flesch-Kincaid grade level. Text without a terminator counts as one sentence.
pub fn fkgl_grade(text: &str) -> Result<f64> {
    let words = tokenize(text);
    if words.is_empty() {
        return Err(Error::invalid("fkgl of text without words"));
    }
    let n_sent = sentences(text).len().max(1) as f64;
    let n_words = words.len() as f64;
    let n_syll: usize = words.iter().map(|w| syllables(w)).sum();
    Ok(fkgl_from_counts(n_words, n_sent, n_syll as f64))
}

pub fn fkgl_from_counts(words: f64, sentences: f64, syllables: f64) -> f64 {
    0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59
}

/// Population variance; zero for fewer than two values.
pub fn variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fkgl_counts() {
        assert!((fkgl_from_counts(10.0, 1.0, 12.0) - 2.47).abs() < 1e-9);
    }

    #[test]
    fn monosyllabic_sentence() {
        let g = fkgl_grade("The cat sat on mats.").unwrap();
        assert!((g - (-1.84)).abs() < 1e-9, "{g}");
    }

    #[test]
    fn empty_text_is_an_error() {
        assert!(fkgl_grade("").is_err());
        assert!(fkgl_grade(" ?! ").is_err());
    }

    #[test]
    fn variance_cases() {
        assert_eq!(variance(&[2.0, 2.0, 2.0]), 0.0);
        assert_eq!(variance(&[1.0, 3.0]), 1.0);
        assert_eq!(variance(&[5.0]), 0.0);
    }
}
