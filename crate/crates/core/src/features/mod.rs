//! Feature schema fitting and per-instance extraction.
//!
//! Columns come in fixed blocks:
//!
//! 1. statistical: `length`, `syllables`, `log_frequency` + indicator
//! 2. lexicon scalars, each followed by its `.present` indicator, in family
//!    order (aoa, prevalence, concreteness_brysbaert, concreteness_mrc,
//!    familiarity_mrc, arousal, prior_complexity)
//! 3. POS one-hot over the universal tagset
//! 4. n-gram aggregates: mean and min of `ln(1 + training count)` over the
//!    token's bigrams, then trigrams
//! 5. n-gram counts: one column per vocabulary bigram, then trigram
//!
//! Blocks for disabled families are simply absent, so turning a family off
//! never shifts the values of any other column.

mod pos;
mod text;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use pos::{pos_tag, LexiconTagger, PosTagger, UNIVERSAL_TAGSET, UNKNOWN_TAG};
pub use text::{char_ngrams, syllable_count};

use crate::corpus::Instance;
use crate::lexicons::{normalize, LexiconRegistry};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("empty word")]
    EmptyWord,
    #[error("n-gram order {0} unsupported (use 2 or 3)")]
    BadNgramOrder(usize),
    #[error("unknown feature family `{0}`")]
    UnknownFamily(String),
    #[error("unknown preset `{0}` (expected baseline, model1, model2 or lcp_rit)")]
    UnknownPreset(String),
    #[error("unknown frequency source `{0}` (expected lexicon or corpus_internal)")]
    UnknownFrequencySource(String),
    #[error("no feature family enabled")]
    NothingEnabled,
    #[error("trigram_min_count must be at least 1")]
    BadMinCount,
    #[error("cannot fit a feature schema on an empty training set")]
    EmptyTraining,
    #[error("feature family {family} needs resource `{resource}`, which is not loaded")]
    MissingResource { family: FeatureFamily, resource: String },
    #[error("lexicon for feature family {0} covers no training target")]
    ZeroCoverage(FeatureFamily),
    #[error("POS tag lexicon: {0}")]
    TagLexicon(String),
}

/// A group of columns that is switched on or off as a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFamily {
    Length,
    Syllables,
    Frequency,
    CharBigrams,
    CharTrigrams,
    Aoa,
    Prevalence,
    ConcretenessBrysbaert,
    ConcretenessMrc,
    FamiliarityMrc,
    Arousal,
    Pos,
    PriorComplexity,
}

impl FeatureFamily {
    pub const ALL: [FeatureFamily; 13] = [
        FeatureFamily::Length,
        FeatureFamily::Syllables,
        FeatureFamily::Frequency,
        FeatureFamily::CharBigrams,
        FeatureFamily::CharTrigrams,
        FeatureFamily::Aoa,
        FeatureFamily::Prevalence,
        FeatureFamily::ConcretenessBrysbaert,
        FeatureFamily::ConcretenessMrc,
        FeatureFamily::FamiliarityMrc,
        FeatureFamily::Arousal,
        FeatureFamily::Pos,
        FeatureFamily::PriorComplexity,
    ];

    /// Families backed by a lexicon scalar + indicator pair, in column order.
    pub const LEXICON_SCALARS: [FeatureFamily; 7] = [
        FeatureFamily::Aoa,
        FeatureFamily::Prevalence,
        FeatureFamily::ConcretenessBrysbaert,
        FeatureFamily::ConcretenessMrc,
        FeatureFamily::FamiliarityMrc,
        FeatureFamily::Arousal,
        FeatureFamily::PriorComplexity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureFamily::Length => "length",
            FeatureFamily::Syllables => "syllables",
            FeatureFamily::Frequency => "frequency",
            FeatureFamily::CharBigrams => "char_bigrams",
            FeatureFamily::CharTrigrams => "char_trigrams",
            FeatureFamily::Aoa => "aoa",
            FeatureFamily::Prevalence => "prevalence",
            FeatureFamily::ConcretenessBrysbaert => "concreteness_brysbaert",
            FeatureFamily::ConcretenessMrc => "concreteness_mrc",
            FeatureFamily::FamiliarityMrc => "familiarity_mrc",
            FeatureFamily::Arousal => "arousal",
            FeatureFamily::Pos => "pos",
            FeatureFamily::PriorComplexity => "prior_complexity",
        }
    }

    /// Human-readable row label for reports.
    pub fn label(self) -> &'static str {
        match self {
            FeatureFamily::Length => "Word Length",
            FeatureFamily::Syllables => "Syllable Count",
            FeatureFamily::Frequency => "Word Frequency",
            FeatureFamily::CharBigrams => "Character Bigrams",
            FeatureFamily::CharTrigrams => "Character Trigrams",
            FeatureFamily::Aoa => "Average AoAs",
            FeatureFamily::Prevalence => "Prevalence",
            FeatureFamily::ConcretenessBrysbaert => "Concreteness",
            FeatureFamily::ConcretenessMrc => "MRC Concreteness",
            FeatureFamily::FamiliarityMrc => "MRC Familiarity",
            FeatureFamily::Arousal => "Arousal",
            FeatureFamily::Pos => "POS Tags",
            FeatureFamily::PriorComplexity => "Complexity Labels",
        }
    }

    /// Registry name of the lexicon behind a scalar family.
    pub fn lexicon_name(self) -> Option<&'static str> {
        if FeatureFamily::LEXICON_SCALARS.contains(&self) {
            Some(self.as_str())
        } else {
            None
        }
    }
}

impl fmt::Display for FeatureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureFamily {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim())
            .ok_or_else(|| FeatureError::UnknownFamily(s.to_string()))
    }
}

/// Named feature compositions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Baseline,
    Model1,
    Model2,
    LcpRit,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Baseline, Preset::Model1, Preset::Model2, Preset::LcpRit];

    pub fn families(self) -> BTreeSet<FeatureFamily> {
        use FeatureFamily::*;
        let baseline = [Length, Syllables, Frequency, CharTrigrams];
        let model1 = [Aoa, Prevalence, ConcretenessBrysbaert];
        let extra: &[FeatureFamily] = match self {
            Preset::Baseline => &[],
            Preset::Model1 => &model1,
            Preset::Model2 => &[Aoa, Prevalence, ConcretenessBrysbaert, FamiliarityMrc, PriorComplexity],
            Preset::LcpRit => &[Aoa, Prevalence, ConcretenessBrysbaert, Arousal],
        };
        baseline.iter().chain(extra).copied().collect()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Baseline => "baseline",
            Preset::Model1 => "model1",
            Preset::Model2 => "model2",
            Preset::LcpRit => "lcp_rit",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Preset::Baseline => "Baseline Features",
            Preset::Model1 => "Model 1",
            Preset::Model2 => "Model 2",
            Preset::LcpRit => "LCP-RIT",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s.trim())
            .ok_or_else(|| FeatureError::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencySource {
    /// The `frequency` lexicon (term, raw count).
    Lexicon,
    /// Token counts over the training sentences.
    CorpusInternal,
}

impl FrequencySource {
    pub fn as_str(self) -> &'static str {
        match self {
            FrequencySource::Lexicon => "lexicon",
            FrequencySource::CorpusInternal => "corpus_internal",
        }
    }
}

impl FromStr for FrequencySource {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "lexicon" => Ok(FrequencySource::Lexicon),
            "corpus_internal" => Ok(FrequencySource::CorpusInternal),
            other => Err(FeatureError::UnknownFrequencySource(other.to_string())),
        }
    }
}

/// Registry name of the word frequency lexicon.
pub const FREQUENCY_LEXICON: &str = "frequency";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub enabled: BTreeSet<FeatureFamily>,
    /// Minimum training count for an n-gram to get its own column.
    pub trigram_min_count: u64,
    /// Maximum number of per-n-gram columns (applied to bigrams and trigrams separately).
    pub trigram_max_vocab: usize,
    pub frequency_source: FrequencySource,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig::preset(Preset::Baseline)
    }
}

impl FeatureConfig {
    pub fn preset(preset: Preset) -> Self {
        FeatureConfig {
            enabled: preset.families(),
            trigram_min_count: 5,
            trigram_max_vocab: 700,
            frequency_source: FrequencySource::Lexicon,
        }
    }

    pub fn with_families(mut self, families: impl IntoIterator<Item = FeatureFamily>) -> Self {
        self.enabled = families.into_iter().collect();
        self
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.enabled.is_empty() {
            return Err(FeatureError::NothingEnabled);
        }
        if self.trigram_min_count == 0 {
            return Err(FeatureError::BadMinCount);
        }
        Ok(())
    }

    pub fn has(&self, family: FeatureFamily) -> bool {
        self.enabled.contains(&family)
    }
}

/// Lexicons and tagger available to feature extraction.
#[derive(Clone, Default)]
pub struct FeatureResources {
    pub lexicons: LexiconRegistry,
    pub tagger: Option<Arc<dyn PosTagger>>,
}

impl FeatureResources {
    pub fn new(lexicons: LexiconRegistry) -> Self {
        FeatureResources { lexicons, tagger: None }
    }

    pub fn with_tagger(mut self, tagger: Arc<dyn PosTagger>) -> Self {
        self.tagger = Some(tagger);
        self
    }
}

impl fmt::Debug for FeatureResources {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeatureResources")
            .field("lexicons", &self.lexicons.names().collect::<Vec<_>>())
            .field("tagger", &self.tagger.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Scalar,
    /// 0/1 coverage flag for the scalar column right before it.
    Indicator,
    Onehot,
    NgramCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub family: FeatureFamily,
    /// Value used when the backing resource has no entry (0 for non-lexicon columns).
    pub impute: f64,
}

/// Fitted, ordered description of the feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub config: FeatureConfig,
    pub columns: Vec<Column>,
    pub bigram_vocab: Vec<String>,
    pub trigram_vocab: Vec<String>,
    pub pos_tagset: Vec<String>,
    bigram_counts: BTreeMap<String, u64>,
    trigram_counts: BTreeMap<String, u64>,
    corpus_frequency: BTreeMap<String, u64>,
}

/// One numeric row, aligned with [`FeatureSchema::columns`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn corpus_tokens(sentence: &str) -> impl Iterator<Item = String> + '_ {
    sentence
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
}

fn ngram_counts(train: &[Instance], n: usize) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for inst in train {
        for g in char_ngrams(&inst.token, n).expect("tokens are non-empty") {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

/// N-grams with count >= `min_count`, most frequent first (ties in
/// lexicographic order), truncated to `max_vocab`.
fn ngram_vocab(counts: &BTreeMap<String, u64>, min_count: u64, max_vocab: usize) -> Vec<String> {
    let mut kept: Vec<(&String, u64)> = counts
        .iter()
        .filter(|(_, &c)| c >= min_count)
        .map(|(g, &c)| (g, c))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    kept.into_iter().take(max_vocab).map(|(g, _)| g.clone()).collect()
}

fn scalar(name: impl Into<String>, family: FeatureFamily, kind: ColumnKind, impute: f64) -> Column {
    Column { name: name.into(), kind, family, impute }
}

/// Fits the column layout, n-gram vocabularies and imputation values on
/// the training instances.
pub fn fit_schema(
    train: &[Instance],
    resources: &FeatureResources,
    config: &FeatureConfig,
) -> Result<FeatureSchema, FeatureError> {
    use FeatureFamily as F;
    config.validate()?;
    if train.is_empty() {
        return Err(FeatureError::EmptyTraining);
    }
    let mut columns = Vec::new();

    if config.has(F::Length) {
        columns.push(scalar("length", F::Length, ColumnKind::Scalar, 0.0));
    }
    if config.has(F::Syllables) {
        columns.push(scalar("syllables", F::Syllables, ColumnKind::Scalar, 0.0));
    }
    let mut corpus_frequency = BTreeMap::new();
    if config.has(F::Frequency) {
        match config.frequency_source {
            FrequencySource::Lexicon => {
                if resources.lexicons.get(FREQUENCY_LEXICON).is_none() {
                    return Err(FeatureError::MissingResource {
                        family: F::Frequency,
                        resource: FREQUENCY_LEXICON.into(),
                    });
                }
            }
            FrequencySource::CorpusInternal => {
                for inst in train {
                    for tok in corpus_tokens(&inst.sentence) {
                        *corpus_frequency.entry(tok).or_insert(0) += 1;
                    }
                }
            }
        }
        columns.push(scalar("log_frequency", F::Frequency, ColumnKind::Scalar, 0.0));
        columns.push(scalar("log_frequency.present", F::Frequency, ColumnKind::Indicator, 0.0));
    }

    for family in F::LEXICON_SCALARS {
        if !config.has(family) {
            continue;
        }
        let name = family.lexicon_name().expect("scalar family");
        let lex = resources.lexicons.get(name).ok_or_else(|| FeatureError::MissingResource {
            family,
            resource: name.into(),
        })?;
        let covered: Vec<f64> = train.iter().filter_map(|i| lex.lookup(&i.token)).collect();
        if covered.is_empty() {
            return Err(FeatureError::ZeroCoverage(family));
        }
        let mean = covered.iter().sum::<f64>() / covered.len() as f64;
        columns.push(scalar(name, family, ColumnKind::Scalar, mean));
        columns.push(scalar(format!("{name}.present"), family, ColumnKind::Indicator, 0.0));
    }

    let mut pos_tagset = Vec::new();
    if config.has(F::Pos) {
        if resources.tagger.is_none() {
            return Err(FeatureError::MissingResource {
                family: F::Pos,
                resource: "pos tag lexicon".into(),
            });
        }
        pos_tagset = UNIVERSAL_TAGSET.iter().map(|t| t.to_string()).collect();
        for tag in &pos_tagset {
            columns.push(scalar(format!("pos={tag}"), F::Pos, ColumnKind::Onehot, 0.0));
        }
    }

    let (mut bigram_counts, mut trigram_counts) = (BTreeMap::new(), BTreeMap::new());
    let (mut bigram_vocab, mut trigram_vocab) = (Vec::new(), Vec::new());
    if config.has(F::CharBigrams) {
        bigram_counts = ngram_counts(train, 2);
        bigram_vocab = ngram_vocab(&bigram_counts, config.trigram_min_count, config.trigram_max_vocab);
    }
    if config.has(F::CharTrigrams) {
        trigram_counts = ngram_counts(train, 3);
        trigram_vocab = ngram_vocab(&trigram_counts, config.trigram_min_count, config.trigram_max_vocab);
    }
    for (family, prefix) in [(F::CharBigrams, "char2"), (F::CharTrigrams, "char3")] {
        if config.has(family) {
            columns.push(scalar(format!("{prefix}.mean_log_count"), family, ColumnKind::Scalar, 0.0));
            columns.push(scalar(format!("{prefix}.min_log_count"), family, ColumnKind::Scalar, 0.0));
        }
    }
    for (family, prefix, vocab) in [
        (F::CharBigrams, "char2", &bigram_vocab),
        (F::CharTrigrams, "char3", &trigram_vocab),
    ] {
        for g in vocab {
            columns.push(scalar(format!("{prefix}={g}"), family, ColumnKind::NgramCount, 0.0));
        }
    }

    Ok(FeatureSchema {
        config: config.clone(),
        columns,
        bigram_vocab,
        trigram_vocab,
        pos_tagset,
        bigram_counts,
        trigram_counts,
        corpus_frequency,
    })
}

impl FeatureSchema {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// SHA-256 over the newline-joined column names, hex encoded.
    pub fn fingerprint(&self) -> String {
        fingerprint_columns(self.columns.iter().map(|c| c.name.as_str()))
    }

    /// Verifies `resources` can back every enabled family.
    pub fn check_resources(&self, resources: &FeatureResources) -> Result<(), FeatureError> {
        use FeatureFamily as F;
        if self.config.has(F::Frequency)
            && self.config.frequency_source == FrequencySource::Lexicon
            && resources.lexicons.get(FREQUENCY_LEXICON).is_none()
        {
            return Err(FeatureError::MissingResource {
                family: F::Frequency,
                resource: FREQUENCY_LEXICON.into(),
            });
        }
        for family in F::LEXICON_SCALARS {
            let name = family.lexicon_name().expect("scalar family");
            if self.config.has(family) && resources.lexicons.get(name).is_none() {
                return Err(FeatureError::MissingResource { family, resource: name.into() });
            }
        }
        if self.config.has(F::Pos) && resources.tagger.is_none() {
            return Err(FeatureError::MissingResource {
                family: F::Pos,
                resource: "pos tag lexicon".into(),
            });
        }
        Ok(())
    }

    /// Builds an extractor with precomputed column lookups.
    pub fn extractor<'a>(&'a self, resources: &'a FeatureResources) -> Extractor<'a> {
        let index = |vocab: &'a [String]| vocab.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
        let find = |name: &str| self.columns.iter().position(|c| c.name == name);
        Extractor {
            schema: self,
            resources,
            bigram_index: index(&self.bigram_vocab),
            trigram_index: index(&self.trigram_vocab),
            bigram_offset: self.bigram_vocab.first().and_then(|g| find(&format!("char2={g}"))),
            trigram_offset: self.trigram_vocab.first().and_then(|g| find(&format!("char3={g}"))),
        }
    }
}

pub fn fingerprint_columns<'a>(names: impl IntoIterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    for (i, n) in names.into_iter().enumerate() {
        if i > 0 {
            h.update(b"\n");
        }
        h.update(n.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Schema-bound feature extraction. Total: every missing resource value is
/// imputed, so any instance with a non-empty token yields a full vector.
pub struct Extractor<'a> {
    schema: &'a FeatureSchema,
    resources: &'a FeatureResources,
    bigram_index: HashMap<&'a str, usize>,
    trigram_index: HashMap<&'a str, usize>,
    bigram_offset: Option<usize>,
    trigram_offset: Option<usize>,
}

fn log_count_stats(grams: &[String], counts: &BTreeMap<String, u64>) -> (f64, f64) {
    let logs: Vec<f64> = grams
        .iter()
        .map(|g| (counts.get(g).copied().unwrap_or(0) as f64).ln_1p())
        .collect();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let min = logs.iter().copied().fold(f64::INFINITY, f64::min);
    (mean, min)
}

impl Extractor<'_> {
    pub fn extract(&self, instance: &Instance) -> FeatureVector {
        use FeatureFamily as F;
        let schema = self.schema;
        let config = &schema.config;
        let token = instance.token.as_str();
        let mut out = Vec::with_capacity(schema.columns.len());

        if config.has(F::Length) {
            out.push(token.chars().count() as f64);
        }
        if config.has(F::Syllables) {
            out.push(syllable_count(token).unwrap_or(1) as f64);
        }
        if config.has(F::Frequency) {
            let raw = match config.frequency_source {
                FrequencySource::Lexicon => self
                    .resources
                    .lexicons
                    .get(FREQUENCY_LEXICON)
                    .and_then(|l| l.lookup(token))
                    .filter(|v| *v >= 0.0),
                FrequencySource::CorpusInternal => {
                    schema.corpus_frequency.get(&normalize(token, true)).map(|&c| c as f64)
                }
            };
            match raw {
                Some(f) => out.extend([f.ln_1p(), 1.0]),
                None => out.extend([0.0, 0.0]),
            }
        }

        for col in schema.columns.iter().filter(|c| c.kind == ColumnKind::Scalar) {
            let Some(name) = col.family.lexicon_name() else { continue };
            let value = self.resources.lexicons.get(name).and_then(|l| l.lookup(token));
            match value {
                Some(v) if v.is_finite() => out.extend([v, 1.0]),
                _ => out.extend([col.impute, 0.0]),
            }
        }

        if config.has(F::Pos) {
            let tag = match &self.resources.tagger {
                Some(t) => pos_tag(token, &instance.sentence, t.as_ref()),
                None => UNKNOWN_TAG.to_string(),
            };
            let tag = if schema.pos_tagset.contains(&tag) { tag } else { UNKNOWN_TAG.to_string() };
            out.extend(schema.pos_tagset.iter().map(|t| if *t == tag { 1.0 } else { 0.0 }));
        }

        let bigrams = config.has(F::CharBigrams).then(|| char_ngrams(token, 2).expect("non-empty token"));
        let trigrams = config.has(F::CharTrigrams).then(|| char_ngrams(token, 3).expect("non-empty token"));
        if let Some(g) = &bigrams {
            let (mean, min) = log_count_stats(g, &schema.bigram_counts);
            out.extend([mean, min]);
        }
        if let Some(g) = &trigrams {
            let (mean, min) = log_count_stats(g, &schema.trigram_counts);
            out.extend([mean, min]);
        }
        let base = out.len();
        out.resize(schema.columns.len(), 0.0);
        for (grams, index, offset) in [
            (&bigrams, &self.bigram_index, self.bigram_offset),
            (&trigrams, &self.trigram_index, self.trigram_offset),
        ] {
            let (Some(grams), Some(offset)) = (grams, offset) else { continue };
            debug_assert!(offset >= base);
            for g in grams {
                if let Some(&i) = index.get(g.as_str()) {
                    out[offset + i] += 1.0;
                }
            }
        }
        FeatureVector(out)
    }
}

/// Extracts one vector. For many instances, reuse [`FeatureSchema::extractor`].
pub fn extract(instance: &Instance, schema: &FeatureSchema, resources: &FeatureResources) -> FeatureVector {
    schema.extractor(resources).extract(instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Subcorpus;
    use crate::lexicons::{Lexicon, LexiconKind};
    use proptest::prelude::*;

    fn inst(id: &str, token: &str) -> Instance {
        Instance::new(id, Subcorpus::Bible, format!("the {token} sat"), token, Some(0.3)).unwrap()
    }

    fn resources(pairs: &[(&str, &[(&str, f64)])]) -> FeatureResources {
        let lexicons = pairs
            .iter()
            .map(|(name, entries)| {
                let kind = if name.starts_with("prior") { LexiconKind::Binary } else { LexiconKind::Continuous };
                Lexicon::from_pairs(*name, kind, true, entries.iter().copied()).unwrap()
            })
            .collect();
        FeatureResources::new(LexiconRegistry::new(lexicons).unwrap())
    }

    fn cfg(families: &[FeatureFamily]) -> FeatureConfig {
        FeatureConfig {
            frequency_source: FrequencySource::CorpusInternal,
            ..FeatureConfig::default()
        }
        .with_families(families.iter().copied())
    }

    #[test]
    fn presets() {
        use FeatureFamily::*;
        let base = Preset::Baseline.families();
        assert_eq!(base, [Length, Syllables, Frequency, CharTrigrams].into_iter().collect());
        let m1 = Preset::Model1.families();
        assert!(m1.is_superset(&base) && m1.len() == 7);
        let m2 = Preset::Model2.families();
        assert_eq!(m2.difference(&m1).copied().collect::<Vec<_>>(), [FamiliarityMrc, PriorComplexity]);
        let rit = Preset::LcpRit.families();
        assert_eq!(rit.difference(&m1).copied().collect::<Vec<_>>(), [Arousal]);
        assert_eq!("lcp_rit".parse::<Preset>().unwrap(), Preset::LcpRit);
        for f in FeatureFamily::ALL {
            assert_eq!(f.as_str().parse::<FeatureFamily>().unwrap(), f);
        }
        assert!("bogus".parse::<FeatureFamily>().is_err());
    }

    #[test]
    fn trigram_vocab_counts_every_instance() {
        // ^ca:3, cat:2, at$:2, cap:1, ap$:1
        let train = [inst("1", "cat"), inst("2", "cap"), inst("3", "cat")];
        let mut c = cfg(&[FeatureFamily::CharTrigrams]);
        c.trigram_min_count = 2;
        let schema = fit_schema(&train, &FeatureResources::default(), &c).unwrap();
        assert_eq!(schema.trigram_vocab, ["^ca", "at$", "cat"]);
        assert_eq!(schema.trigram_counts.get("^ca"), Some(&3));
        c.trigram_max_vocab = 1;
        let schema = fit_schema(&train, &FeatureResources::default(), &c).unwrap();
        assert_eq!(schema.trigram_vocab, ["^ca"]);
    }

    #[test]
    fn ngram_count_columns() {
        let train = [inst("1", "cat")];
        let mut c = cfg(&[FeatureFamily::CharTrigrams]);
        c.trigram_min_count = 1;
        let mut schema = fit_schema(&train, &FeatureResources::default(), &c).unwrap();
        schema.trigram_vocab = vec!["^ca".into(), "at$".into(), "xyz".into()];
        schema.columns.truncate(2);
        for g in schema.trigram_vocab.clone() {
            schema.columns.push(scalar(format!("char3={g}"), FeatureFamily::CharTrigrams, ColumnKind::NgramCount, 0.0));
        }
        let v = extract(&inst("9", "cat"), &schema, &FeatureResources::default());
        assert_eq!(&v.0[2..], &[1.0, 1.0, 0.0]);
        // every trigram of "cat" was seen once in training
        assert_eq!(&v.0[..2], &[2f64.ln(), 2f64.ln()]);
        let unseen = extract(&inst("9", "dog"), &schema, &FeatureResources::default());
        assert_eq!(&unseen.0[..2], &[0.0, 0.0]);
    }

    #[test]
    fn repeated_trigram_counted_twice() {
        let train = [inst("1", "aaaa")];
        let mut c = cfg(&[FeatureFamily::CharTrigrams]);
        c.trigram_min_count = 1;
        let schema = fit_schema(&train, &FeatureResources::default(), &c).unwrap();
        let v = extract(&train[0], &schema, &FeatureResources::default());
        let col = schema.columns.iter().position(|c| c.name == "char3=aaa").unwrap();
        assert_eq!(v.0[col], 2.0);
    }

    #[test]
    fn length_and_imputation() {
        let res = resources(&[("prevalence", &[("river", 2.0), ("cat", 2.2)])]);
        let train = [inst("1", "river"), inst("2", "cat"), inst("3", "zebra")];
        let c = cfg(&[FeatureFamily::Length, FeatureFamily::Prevalence]);
        let schema = fit_schema(&train, &res, &c).unwrap();
        assert_eq!(schema.column_names(), ["length", "prevalence", "prevalence.present"]);
        assert!((schema.columns[1].impute - 2.1).abs() < 1e-12);
        let v = extract(&inst("4", "cat"), &schema, &res);
        assert_eq!(v.0, [3.0, 2.2, 1.0]);
        let v = extract(&inst("5", "okapi"), &schema, &res);
        assert_eq!(v.0[0], 5.0);
        assert!((v.0[1] - 2.1).abs() < 1e-12);
        assert_eq!(v.0[2], 0.0);
    }

    #[test]
    fn missing_and_uncovered_lexicons_fail_fitting() {
        let train = [inst("1", "cat")];
        let err = fit_schema(&train, &FeatureResources::default(), &cfg(&[FeatureFamily::Prevalence])).unwrap_err();
        assert!(err.to_string().contains("prevalence"), "{err}");
        let res = resources(&[("arousal", &[("dog", 0.5)])]);
        assert!(matches!(
            fit_schema(&train, &res, &cfg(&[FeatureFamily::Arousal])),
            Err(FeatureError::ZeroCoverage(FeatureFamily::Arousal))
        ));
        let lex_freq = FeatureConfig::default();
        let err = fit_schema(&train, &FeatureResources::default(), &lex_freq).unwrap_err();
        assert!(err.to_string().contains("frequency"), "{err}");
        assert!(matches!(
            fit_schema(&train, &FeatureResources::default(), &cfg(&[FeatureFamily::Pos])),
            Err(FeatureError::MissingResource { family: FeatureFamily::Pos, .. })
        ));
        assert!(matches!(
            fit_schema(&[], &FeatureResources::default(), &cfg(&[FeatureFamily::Length])),
            Err(FeatureError::EmptyTraining)
        ));
    }

    #[test]
    fn frequency_sources() {
        let train = [
            Instance::new("1", Subcorpus::Bible, "The river, the RIVER!", "river", None).unwrap(),
            Instance::new("2", Subcorpus::Bible, "a cat", "cat", None).unwrap(),
        ];
        let schema = fit_schema(&train, &FeatureResources::default(), &cfg(&[FeatureFamily::Frequency])).unwrap();
        let none = FeatureResources::default();
        assert_eq!(extract(&train[0], &schema, &none).0, [2f64.ln_1p(), 1.0]);
        assert_eq!(extract(&inst("3", "okapi"), &schema, &none).0, [0.0, 0.0]);

        let res = resources(&[("frequency", &[("river", 99.0)])]);
        let c = FeatureConfig::default().with_families([FeatureFamily::Frequency]);
        let schema = fit_schema(&train, &res, &c).unwrap();
        assert_eq!(extract(&train[0], &schema, &res).0, [99f64.ln_1p(), 1.0]);
        assert_eq!(extract(&train[1], &schema, &res).0, [0.0, 0.0]);
    }

    #[test]
    fn pos_one_hot() {
        let tagger = Arc::new(LexiconTagger::from_pairs([("river", "NOUN")]));
        let res = FeatureResources::default().with_tagger(tagger);
        let schema = fit_schema(&[inst("1", "river")], &res, &cfg(&[FeatureFamily::Pos])).unwrap();
        let v = extract(&inst("1", "river"), &schema, &res);
        let noun = schema.columns.iter().position(|c| c.name == "pos=NOUN").unwrap();
        let x = schema.columns.iter().position(|c| c.name == "pos=X").unwrap();
        assert_eq!(v.0.iter().sum::<f64>(), 1.0);
        assert_eq!(v.0[noun], 1.0);
        assert_eq!(extract(&inst("2", "ran"), &schema, &res).0[x], 1.0);
    }

    #[test]
    fn column_blocks_in_documented_order() {
        use FeatureFamily::*;
        let res = resources(&[
            ("aoa_1981", &[("cat", 3.0)]),
            ("prevalence", &[("cat", 2.0)]),
            ("prior_complexity_a", &[("cat", 1.0)]),
        ])
        .with_tagger(Arc::new(LexiconTagger::default()));
        let c = cfg(&[PriorComplexity, CharTrigrams, Pos, Aoa, Length, CharBigrams, Frequency, Syllables, Prevalence]);
        let mut c = c;
        c.trigram_min_count = 1;
        let schema = fit_schema(&[inst("1", "cat")], &res, &c).unwrap();
        let names = schema.column_names();
        let head: Vec<&str> = names.iter().take(11).map(String::as_str).collect();
        assert_eq!(
            head,
            [
                "length", "syllables", "log_frequency", "log_frequency.present", "aoa", "aoa.present",
                "prevalence", "prevalence.present", "prior_complexity", "prior_complexity.present", "pos=ADJ"
            ]
        );
        let agg = names.iter().position(|n| n == "char2.mean_log_count").unwrap();
        assert_eq!(&names[agg..agg + 4], ["char2.mean_log_count", "char2.min_log_count", "char3.mean_log_count", "char3.min_log_count"]);
        assert_eq!(names[agg + 4], "char2=^c");
        assert!(names.last().unwrap().starts_with("char3="));
        // indicator immediately follows each lexicon scalar
        for (i, col) in schema.columns.iter().enumerate() {
            if col.family.lexicon_name().is_some() && col.kind == ColumnKind::Scalar {
                assert_eq!(schema.columns[i + 1].kind, ColumnKind::Indicator);
                assert!(col.impute.is_finite());
            }
        }
    }

    #[test]
    fn fitting_is_deterministic() {
        let train: Vec<Instance> = ["cat", "cap", "cat", "river", "zebra", "river"]
            .iter()
            .enumerate()
            .map(|(i, t)| inst(&i.to_string(), t))
            .collect();
        let mut c = cfg(&[FeatureFamily::Length, FeatureFamily::CharTrigrams, FeatureFamily::CharBigrams, FeatureFamily::Frequency]);
        c.trigram_min_count = 1;
        let a = fit_schema(&train, &FeatureResources::default(), &c).unwrap();
        let b = fit_schema(&train, &FeatureResources::default(), &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn disabling_a_family_drops_only_its_columns() {
        use FeatureFamily::*;
        let res = resources(&[("prevalence", &[("cat", 2.0), ("zebra", 4.0)]), ("arousal", &[("cat", 0.3)])]);
        let train: Vec<Instance> = ["cat", "cap", "zebra", "river", "cattle"]
            .iter()
            .enumerate()
            .map(|(i, t)| inst(&i.to_string(), t))
            .collect();
        let mut full = cfg(&[Length, Syllables, Frequency, CharTrigrams, Prevalence, Arousal]);
        full.trigram_min_count = 1;
        let full_schema = fit_schema(&train, &res, &full).unwrap();
        for drop in [Prevalence, CharTrigrams, Frequency, Length] {
            let mut reduced = full.clone();
            reduced.enabled.remove(&drop);
            let reduced_schema = fit_schema(&train, &res, &reduced).unwrap();
            let kept: Vec<usize> = (0..full_schema.len()).filter(|&i| full_schema.columns[i].family != drop).collect();
            assert_eq!(kept.len(), reduced_schema.len());
            for probe in train.iter().chain([&inst("x", "okapi")]) {
                let a = extract(probe, &full_schema, &res);
                let b = extract(probe, &reduced_schema, &res);
                for (j, &i) in kept.iter().enumerate() {
                    assert_eq!(full_schema.columns[i].name, reduced_schema.columns[j].name);
                    assert_eq!(a.0[i], b.0[j]);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn vectors_are_finite_and_schema_length(token in "\\PC{1,12}") {
            prop_assume!(!token.trim().is_empty());
            let res = resources(&[("prevalence", &[("cat", 2.0)])]);
            let mut c = cfg(&[FeatureFamily::Length, FeatureFamily::Syllables, FeatureFamily::Frequency,
                FeatureFamily::CharBigrams, FeatureFamily::CharTrigrams, FeatureFamily::Prevalence]);
            c.trigram_min_count = 1;
            let schema = fit_schema(&[inst("1", "cat"), inst("2", "dog")], &res, &c).unwrap();
            let v = extract(&inst("t", &token), &schema, &res);
            prop_assert_eq!(v.len(), schema.len());
            prop_assert!(v.0.iter().all(|x| x.is_finite()));
            for (x, col) in v.0.iter().zip(&schema.columns) {
                match col.kind {
                    ColumnKind::Indicator | ColumnKind::Onehot => prop_assert!(*x == 0.0 || *x == 1.0),
                    ColumnKind::NgramCount => prop_assert!(*x >= 0.0 && x.fract() == 0.0),
                    ColumnKind::Scalar => {}
                }
            }
        }
    }
}
