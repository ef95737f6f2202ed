//! Tokenization shared by every lexical metric.

/// Lowercased alphanumeric runs. Everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Splits on runs of `.`, `!`, `?`. Fragments without any token are dropped.
pub fn sentences(text: &str) -> Vec<&str> {
    text.split(['.', '!', '?'])
        .filter(|s| s.chars().any(char::is_alphanumeric))
        .collect()
}

/// Heuristic English syllable count: vowel groups, minus a silent final `e`,
/// never below one. Digits-only tokens count as one syllable.
pub fn syllables(word: &str) -> usize {
    let w: Vec<char> = word.to_lowercase().chars().filter(|c| c.is_alphabetic()).collect();
    if w.is_empty() {
        return 1;
    }
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut count: usize = 0;
    let mut prev = false;
    for &c in &w {
        let v = is_vowel(c);
        if v && !prev {
            count += 1;
        }
        prev = v;
    }
    let n = w.len();
    if n > 2 && w[n - 1] == 'e' && !is_vowel(w[n - 2]) && !(w[n - 2] == 'l' && !is_vowel(w[n - 3])) {
        count = count.saturating_sub(1);
    }
    count.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_lowercases_and_splits() {
        assert_eq!(tokenize("Hello, World! it's 3pm"), ["hello", "world", "it", "s", "3pm"]);
        assert!(tokenize(" ,.; ").is_empty());
    }

    #[test]
    fn sentence_split() {
        assert_eq!(sentences("One two. Three? Four!!").len(), 3);
        assert_eq!(sentences("no terminator").len(), 1);
        assert!(sentences("...").is_empty());
    }

    #[test]
    fn syllable_heuristic() {
        for (w, n) in [
            ("cat", 1),
            ("make", 1),
            ("table", 2),
            ("weather", 2),
            ("beautiful", 3),
            ("the", 1),
            ("a", 1),
            ("rhythm", 1),
            ("2024", 1),
        ] {
            assert_eq!(syllables(w), n, "{w}");
        }
    }
}
