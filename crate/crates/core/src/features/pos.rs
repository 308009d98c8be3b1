//! Pluggable part-of-speech tagging.

use std::collections::BTreeMap;
use std::io::Read;

use super::FeatureError;
use crate::lexicons::normalize;

/// The 12-tag universal tagset; `X` doubles as the unknown tag.
pub const UNIVERSAL_TAGSET: [&str; 12] = [
    "ADJ", "ADP", "ADV", "CONJ", "DET", "NOUN", "NUM", "PRT", "PRON", "VERB", ".", "X",
];

pub const UNKNOWN_TAG: &str = "X";

pub trait PosTagger: Send + Sync {
    /// Tag for `token` as used in `sentence`.
    fn tag(&self, token: &str, sentence: &str) -> String;
}

/// Context-free tagger: each word gets its most frequent tag from a
/// term/tag lexicon, unknown words get `X`.
#[derive(Debug, Clone, Default)]
pub struct LexiconTagger {
    tags: BTreeMap<String, String>,
}

impl LexiconTagger {
    /// Reads `term<TAB>tag[<TAB>count]` rows. Repeated terms keep the tag
    /// with the highest total count (ties go to the lexicographically
    /// smaller tag). Tags outside the universal set become `X`.
    pub fn load<R: Read>(mut source: R) -> Result<Self, FeatureError> {
        let mut text = String::new();
        source
            .read_to_string(&mut text)
            .map_err(|e| FeatureError::TagLexicon(e.to_string()))?;
        let mut counts: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 2 {
                return Err(FeatureError::TagLexicon(format!("line {}: expected term and tag", i + 1)));
            }
            let weight = match cols.get(2).map(|c| c.trim()) {
                Some(c) if !c.is_empty() => c
                    .parse::<f64>()
                    .ok()
                    .filter(|w| w.is_finite() && *w >= 0.0)
                    .ok_or_else(|| FeatureError::TagLexicon(format!("line {}: bad count `{c}`", i + 1)))?,
                _ => 1.0,
            };
            let term = normalize(cols[0], true);
            if term.is_empty() {
                continue;
            }
            *counts.entry(term).or_default().entry(canonical_tag(cols[1])).or_default() += weight;
        }
        let tags = counts
            .into_iter()
            .map(|(term, by_tag)| {
                // BTreeMap iterates tags in ascending order, so `>` keeps the smaller tag on ties.
                let mut best: Option<(&String, f64)> = None;
                for (tag, &c) in &by_tag {
                    if best.is_none_or(|(_, bc)| c > bc) {
                        best = Some((tag, c));
                    }
                }
                (term, best.map(|(t, _)| t.clone()).unwrap_or_else(|| UNKNOWN_TAG.to_string()))
            })
            .collect();
        Ok(LexiconTagger { tags })
    }

    pub fn from_pairs<I, S, T>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let tags = pairs
            .into_iter()
            .map(|(s, t)| (normalize(s.as_ref(), true), canonical_tag(t.as_ref())))
            .collect();
        LexiconTagger { tags }
    }
}

impl PosTagger for LexiconTagger {
    fn tag(&self, token: &str, _sentence: &str) -> String {
        self.tags
            .get(&normalize(token, true))
            .cloned()
            .unwrap_or_else(|| UNKNOWN_TAG.to_string())
    }
}

fn canonical_tag(tag: &str) -> String {
    let t = tag.trim().to_uppercase();
    if UNIVERSAL_TAGSET.contains(&t.as_str()) {
        t
    } else {
        UNKNOWN_TAG.to_string()
    }
}

/// Tags `token`, mapping anything outside the universal set to `X`.
pub fn pos_tag(token: &str, sentence: &str, tagger: &dyn PosTagger) -> String {
    canonical_tag(&tagger.tag(token, sentence))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_lookup_and_fallback() {
        let t = LexiconTagger::from_pairs([("river", "NOUN")]);
        assert_eq!(pos_tag("river", "the river", &t), "NOUN");
        assert_eq!(pos_tag("River", "", &t), "NOUN");
        assert_eq!(pos_tag("quickly", "", &t), "X");
        assert_eq!(pos_tag("river", "x", &t), pos_tag("river", "x", &t));
    }

    #[test]
    fn most_frequent_tag_wins() {
        let t = LexiconTagger::load("run\tVERB\t10\nrun\tNOUN\t3\nfast\tADV\nfast\tADJ\nfoo\tNN\n".as_bytes()).unwrap();
        assert_eq!(t.tag("run", ""), "VERB");
        assert_eq!(t.tag("fast", ""), "ADJ");
        assert_eq!(t.tag("foo", ""), "X");
        assert!(LexiconTagger::load("lonely\n".as_bytes()).is_err());
    }
}
