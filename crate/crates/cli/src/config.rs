//! Run configuration: a sectioned `key = value` file plus command-line
//! overrides.
//!
//! ```toml
//! [data]
//! train = "data/lcp_single_train.tsv"
//! test = "data/lcp_single_test.tsv"
//! pos_lexicon = "resources/pos.tsv"
//! dev_fraction = 0.2
//! eval_on = "dev"
//!
//! [features]
//! preset = "lcp_rit"          # or: families = ["length", "syllables", ...]
//! frequency_source = "lexicon"
//! trigram_min_count = 5
//! trigram_max_vocab = 700
//!
//! [forest]
//! n_trees = 120
//! max_features_per_split = 750
//! min_samples_leaf = 1
//! min_samples_split = 2
//! bootstrap = true
//! seed = 42                   # max_depth omitted = unlimited
//!
//! [lexicon.prevalence]
//! path = "resources/prevalence.tsv"
//! kind = "continuous"
//! term_column = 0
//! value_column = 1
//! lowercase = true
//! header = false
//! ```
//!
//! Relative paths are resolved against the directory holding the config
//! file. Unknown keys are rejected. Flags given on the command line win.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use lcp_core::features::{FeatureConfig, FeatureFamily, FrequencySource, Preset};
use lcp_core::forest::ForestConfig;
use lcp_core::lexicons::{LexiconKind, LexiconSpec, PRIOR_COMPLEXITY_PREFIX};
use lcp_core::pipeline::EvalOn;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    data: DataSection,
    #[serde(default)]
    features: FeaturesSection,
    #[serde(default)]
    forest: ForestSection,
    #[serde(default)]
    lexicon: BTreeMap<String, LexiconSection>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    train: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pos_lexicon: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dev_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eval_on: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeaturesSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    families: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frequency_source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trigram_min_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trigram_max_vocab: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForestSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    n_trees: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_features_per_split: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_samples_leaf: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_samples_split: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconSection {
    path: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<LexiconKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    term_column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value_column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lowercase: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    header: Option<bool>,
}

/// Fully resolved settings for one command invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub pos_lexicon: Option<PathBuf>,
    pub dev_fraction: f64,
    pub eval_on: EvalOn,
    /// When set, `features.enabled` is exactly the preset's families.
    pub preset: Option<Preset>,
    pub features: FeatureConfig,
    pub forest: ForestConfig,
    /// Sorted by name.
    pub lexicons: Vec<LexiconSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: None,
            test: None,
            pos_lexicon: None,
            dev_fraction: 0.2,
            eval_on: EvalOn::Dev,
            preset: Some(Preset::Baseline),
            features: FeatureConfig::preset(Preset::Baseline),
            forest: ForestConfig::default(),
            lexicons: Vec::new(),
        }
    }
}

/// Default lexicon kind for a registry name.
pub fn default_kind(name: &str) -> LexiconKind {
    if name.starts_with(PRIOR_COMPLEXITY_PREFIX) {
        LexiconKind::Binary
    } else {
        LexiconKind::Continuous
    }
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn parse_families(items: &[String]) -> Result<std::collections::BTreeSet<FeatureFamily>, CliError> {
    items
        .iter()
        .flat_map(|s| s.split(','))
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<FeatureFamily>().map_err(CliError::from))
        .collect()
}

impl RunConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let base = std::fs::canonicalize(parent).unwrap_or_else(|_| parent.to_path_buf());
        Self::parse(&text, &base).map_err(|e| match e {
            CliError::Usage(m) => CliError::Usage(format!("config {}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::usage(e.message().to_string()))?;
        let mut cfg = RunConfig::default();
        let d = file.data;
        cfg.train = d.train.map(|p| resolve(base, p));
        cfg.test = d.test.map(|p| resolve(base, p));
        cfg.pos_lexicon = d.pos_lexicon.map(|p| resolve(base, p));
        if let Some(f) = d.dev_fraction {
            cfg.dev_fraction = f;
        }
        if let Some(e) = d.eval_on {
            cfg.eval_on = e.parse().map_err(CliError::Usage)?;
        }

        let f = file.features;
        match (f.preset, f.families) {
            (Some(_), Some(_)) => return Err(CliError::usage("[features] sets both preset and families")),
            (Some(p), None) => cfg.set_preset(p.parse()?),
            (None, Some(fams)) => cfg.set_families(parse_families(&fams)?),
            (None, None) => {}
        }
        if let Some(s) = f.frequency_source {
            cfg.features.frequency_source = s.parse()?;
        }
        if let Some(n) = f.trigram_min_count {
            cfg.features.trigram_min_count = n;
        }
        if let Some(n) = f.trigram_max_vocab {
            cfg.features.trigram_max_vocab = n;
        }

        let t = file.forest;
        let fc = &mut cfg.forest;
        fc.n_trees = t.n_trees.unwrap_or(fc.n_trees);
        fc.max_features_per_split = t.max_features_per_split.unwrap_or(fc.max_features_per_split);
        fc.min_samples_leaf = t.min_samples_leaf.unwrap_or(fc.min_samples_leaf);
        fc.min_samples_split = t.min_samples_split.unwrap_or(fc.min_samples_split);
        fc.max_depth = t.max_depth.or(fc.max_depth);
        fc.bootstrap = t.bootstrap.unwrap_or(fc.bootstrap);
        fc.seed = t.seed.unwrap_or(fc.seed);

        for (name, lex) in file.lexicon {
            let mut spec = LexiconSpec::new(&name, resolve(base, lex.path), lex.kind.unwrap_or_else(|| default_kind(&name)));
            spec.term_column = lex.term_column.unwrap_or(spec.term_column);
            spec.value_column = lex.value_column.unwrap_or(spec.value_column);
            spec.lowercase = lex.lowercase.unwrap_or(spec.lowercase);
            spec.header = lex.header.unwrap_or(spec.header);
            cfg.lexicons.push(spec);
        }
        Ok(cfg)
    }

    pub fn set_preset(&mut self, preset: Preset) {
        self.preset = Some(preset);
        self.features.enabled = preset.families();
    }

    pub fn set_families(&mut self, families: std::collections::BTreeSet<FeatureFamily>) {
        self.preset = None;
        self.features.enabled = families;
    }

    /// Adds a lexicon, replacing any existing one of the same name.
    pub fn upsert_lexicon(&mut self, spec: LexiconSpec) {
        self.lexicons.retain(|l| l.name != spec.name);
        self.lexicons.push(spec);
        self.lexicons.sort_by(|a, b| a.name.cmp(&b.name));
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.dev_fraction > 0.0 && self.dev_fraction < 1.0) {
            return Err(CliError::usage(format!("dev_fraction {} must lie strictly between 0 and 1", self.dev_fraction)));
        }
        self.features.validate()?;
        self.forest.validate()?;
        for l in &self.lexicons {
            l.validate()?;
        }
        Ok(())
    }

    /// Label used for report rows: the preset's name, or "Custom Features".
    pub fn label(&self) -> &'static str {
        self.preset.map_or("Custom Features", Preset::label)
    }

    /// Renders every effective setting in the config file grammar.
    /// `RunConfig::parse(&cfg.render(), base)` gives back `cfg`.
    pub fn render(&self) -> String {
        let file = ConfigFile {
            data: DataSection {
                train: self.train.clone(),
                test: self.test.clone(),
                pos_lexicon: self.pos_lexicon.clone(),
                dev_fraction: Some(self.dev_fraction),
                eval_on: Some(self.eval_on.to_string()),
            },
            features: FeaturesSection {
                preset: self.preset.map(|p| p.as_str().to_string()),
                families: match self.preset {
                    Some(_) => None,
                    None => Some(self.features.enabled.iter().map(|f| f.as_str().to_string()).collect()),
                },
                frequency_source: Some(self.features.frequency_source.as_str().to_string()),
                trigram_min_count: Some(self.features.trigram_min_count),
                trigram_max_vocab: Some(self.features.trigram_max_vocab),
            },
            forest: ForestSection {
                n_trees: Some(self.forest.n_trees),
                max_features_per_split: Some(self.forest.max_features_per_split),
                min_samples_leaf: Some(self.forest.min_samples_leaf),
                min_samples_split: Some(self.forest.min_samples_split),
                max_depth: self.forest.max_depth,
                bootstrap: Some(self.forest.bootstrap),
                seed: Some(self.forest.seed),
            },
            lexicon: self
                .lexicons
                .iter()
                .map(|l| {
                    let section = LexiconSection {
                        path: l.path.clone(),
                        kind: Some(l.kind),
                        term_column: Some(l.term_column),
                        value_column: Some(l.value_column),
                        lowercase: Some(l.lowercase),
                        header: Some(l.header),
                    };
                    (l.name.clone(), section)
                })
                .collect(),
        };
        toml::to_string(&file).expect("config is always representable")
    }
}

/// Flags shared by every command that builds features or trains models.
#[derive(Debug, Default, Clone, Args)]
pub struct RunArgs {
    /// Training dataset TSV (overrides [data] train)
    #[arg(long, value_name = "PATH")]
    pub train: Option<PathBuf>,
    /// Lexicon as NAME=PATH, repeatable; kind is binary for prior_complexity_* names, continuous otherwise
    #[arg(long = "lexicon", value_name = "NAME=PATH")]
    pub lexicons: Vec<String>,
    /// POS tag lexicon TSV: term, tag[, count] (overrides [data] pos_lexicon)
    #[arg(long, value_name = "PATH")]
    pub pos_lexicon: Option<PathBuf>,
    /// Held-out dev fraction [default: 0.2]
    #[arg(long, value_name = "F")]
    pub dev_fraction: Option<f64>,
    /// Portion to score on: dev or train [default: dev]
    #[arg(long, value_name = "PORTION")]
    pub eval_on: Option<EvalOn>,
    /// Feature preset: baseline, model1, model2, lcp_rit [default: baseline]
    #[arg(long, value_name = "NAME", conflicts_with = "families")]
    pub preset: Option<String>,
    /// Comma-separated feature families (replaces the preset)
    #[arg(long, value_name = "LIST")]
    pub families: Option<String>,
    /// Frequency source: lexicon or corpus_internal [default: lexicon]
    #[arg(long, value_name = "SOURCE")]
    pub frequency_source: Option<String>,
    /// Minimum training count for an n-gram column [default: 5]
    #[arg(long, value_name = "N")]
    pub trigram_min_count: Option<u64>,
    /// Maximum n-gram columns per order [default: 700]
    #[arg(long, value_name = "N")]
    pub trigram_max_vocab: Option<usize>,
    /// Trees in the forest [default: 120]
    #[arg(long, value_name = "N")]
    pub n_trees: Option<usize>,
    /// Candidate features per split [default: 750]
    #[arg(long, value_name = "N")]
    pub max_features: Option<usize>,
    /// Minimum rows per leaf [default: 1]
    #[arg(long, value_name = "N")]
    pub min_samples_leaf: Option<usize>,
    /// Minimum rows to attempt a split [default: 2]
    #[arg(long, value_name = "N")]
    pub min_samples_split: Option<usize>,
    /// Maximum tree depth [default: unlimited]
    #[arg(long, value_name = "N")]
    pub max_depth: Option<usize>,
    /// Bootstrap resampling per tree [default: true]
    #[arg(long, value_name = "BOOL")]
    pub bootstrap: Option<bool>,
}

impl RunArgs {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(p) = &self.train {
            cfg.train = Some(p.clone());
        }
        for item in &self.lexicons {
            let (name, path) = item
                .split_once('=')
                .filter(|(n, p)| !n.is_empty() && !p.is_empty())
                .ok_or_else(|| CliError::usage(format!("--lexicon expects NAME=PATH, got `{item}`")))?;
            cfg.upsert_lexicon(LexiconSpec::new(name, path, default_kind(name)));
        }
        if let Some(p) = &self.pos_lexicon {
            cfg.pos_lexicon = Some(p.clone());
        }
        if let Some(f) = self.dev_fraction {
            cfg.dev_fraction = f;
        }
        if let Some(e) = self.eval_on {
            cfg.eval_on = e;
        }
        if let Some(p) = &self.preset {
            cfg.set_preset(p.parse()?);
        }
        if let Some(f) = &self.families {
            cfg.set_families(parse_families(std::slice::from_ref(f))?);
        }
        if let Some(s) = &self.frequency_source {
            cfg.features.frequency_source = s.parse::<FrequencySource>()?;
        }
        if let Some(n) = self.trigram_min_count {
            cfg.features.trigram_min_count = n;
        }
        if let Some(n) = self.trigram_max_vocab {
            cfg.features.trigram_max_vocab = n;
        }
        let fc = &mut cfg.forest;
        fc.n_trees = self.n_trees.unwrap_or(fc.n_trees);
        fc.max_features_per_split = self.max_features.unwrap_or(fc.max_features_per_split);
        fc.min_samples_leaf = self.min_samples_leaf.unwrap_or(fc.min_samples_leaf);
        fc.min_samples_split = self.min_samples_split.unwrap_or(fc.min_samples_split);
        fc.max_depth = self.max_depth.or(fc.max_depth);
        fc.bootstrap = self.bootstrap.unwrap_or(fc.bootstrap);
        Ok(())
    }
}
