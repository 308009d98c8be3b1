//! Surface-form helpers: syllable estimation and padded character n-grams.

use super::FeatureError;

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-run syllable estimate.
///
/// Counts maximal runs of `a e i o u y` in the lowercased word, drops one
/// for a trailing silent `e` (kept when the word ends in consonant + `le`),
/// and never returns less than 1. Approximate by construction.
pub fn syllable_count(word: &str) -> Result<usize, FeatureError> {
    if word.is_empty() {
        return Err(FeatureError::EmptyWord);
    }
    let chars: Vec<char> = word.to_lowercase().chars().collect();
    let mut runs = 0;
    let mut in_run = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !in_run {
            runs += 1;
        }
        in_run = v;
    }
    let n = chars.len();
    if runs > 1 && chars[n - 1] == 'e' {
        let consonant_le = n >= 3
            && chars[n - 2] == 'l'
            && chars[n - 3].is_alphabetic()
            && !is_vowel(chars[n - 3]);
        if !consonant_le {
            runs -= 1;
        }
    }
    Ok(runs.max(1))
}

/// Character n-grams of `^` + lowercase(word) + `$`, left to right, with
/// duplicates kept. Only bigrams and trigrams are supported.
pub fn char_ngrams(word: &str, n: usize) -> Result<Vec<String>, FeatureError> {
    if n != 2 && n != 3 {
        return Err(FeatureError::BadNgramOrder(n));
    }
    if word.is_empty() {
        return Err(FeatureError::EmptyWord);
    }
    let padded: Vec<char> = std::iter::once('^')
        .chain(word.to_lowercase().chars())
        .chain(std::iter::once('$'))
        .collect();
    Ok(padded.windows(n).map(|w| w.iter().collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn syllable_examples() {
        assert_eq!(syllable_count("cat").unwrap(), 1);
        assert_eq!(syllable_count("house").unwrap(), 1);
        assert_eq!(syllable_count("simple").unwrap(), 2);
        assert_eq!(syllable_count("the").unwrap(), 1);
        assert_eq!(syllable_count("Beautiful").unwrap(), 3);
        assert_eq!(syllable_count("rhythm").unwrap(), 1);
        assert_eq!(syllable_count("42").unwrap(), 1);
        assert!(syllable_count("").is_err());
    }

    #[test]
    fn ngram_examples() {
        assert_eq!(char_ngrams("cat", 3).unwrap(), ["^ca", "cat", "at$"]);
        assert_eq!(char_ngrams("cat", 2).unwrap(), ["^c", "ca", "at", "t$"]);
        assert_eq!(char_ngrams("a", 3).unwrap(), ["^a$"]);
        assert_eq!(char_ngrams("CaT", 3).unwrap(), ["^ca", "cat", "at$"]);
        assert!(matches!(char_ngrams("cat", 4), Err(FeatureError::BadNgramOrder(4))));
        assert!(char_ngrams("", 2).is_err());
    }

    proptest! {
        #[test]
        fn syllables_at_least_one(w in "\\PC{1,16}") {
            prop_assert!(syllable_count(&w).unwrap() >= 1);
        }

        #[test]
        fn ngram_window_count(w in "[a-z]{1,12}", n in 2usize..=3) {
            let grams = char_ngrams(&w, n).unwrap();
            prop_assert_eq!(grams.len(), w.chars().count() + 3 - n);
        }
    }
}
