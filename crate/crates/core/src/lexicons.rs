//! Word-level psycholinguistic and frequency resources.
//!
//! Every resource is collapsed to one value per normalized surface form at
//! load time. Multi-sense rows for the same word are averaged (continuous)
//! or resolved complex-wins (binary).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("i/o error reading lexicon {name}: {source}")]
    Io {
        name: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon {name} is not valid UTF-8")]
    Utf8 { name: String },
    #[error("lexicon {name}, line {line}: {message}")]
    Malformed { name: String, line: usize, message: String },
    #[error("lexicon {name}: term and value column are both {column}")]
    SameColumns { name: String, column: usize },
    #[error("cannot merge {left} ({left_kind}) with {right} ({right_kind})")]
    KindMismatch {
        left: String,
        left_kind: LexiconKind,
        right: String,
        right_kind: LexiconKind,
    },
    #[error("cannot merge {left} and {right}: different term normalization")]
    NormalizationMismatch { left: String, right: String },
    #[error("binary union needs at least one source lexicon")]
    EmptyUnion,
    #[error("coverage needs a non-empty vocabulary")]
    EmptyVocabulary,
    #[error("lexicon {0} registered twice")]
    DuplicateName(String),
    #[error("lexicon {0} is defined both directly and through its component resources")]
    CompositeConflict(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexiconKind {
    Continuous,
    Binary,
}

impl fmt::Display for LexiconKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LexiconKind::Continuous => "continuous",
            LexiconKind::Binary => "binary",
        })
    }
}

impl FromStr for LexiconKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "continuous" => Ok(LexiconKind::Continuous),
            "binary" => Ok(LexiconKind::Binary),
            _ => Err(format!("unknown lexicon kind `{s}` (expected continuous or binary)")),
        }
    }
}

/// Where a lexicon lives and how to read it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconSpec {
    pub name: String,
    pub path: PathBuf,
    pub kind: LexiconKind,
    pub term_column: usize,
    pub value_column: usize,
    pub lowercase: bool,
    /// Skip the first non-blank line.
    pub header: bool,
}

impl LexiconSpec {
    pub fn new(name: impl Into<String>, path: impl Into<PathBuf>, kind: LexiconKind) -> Self {
        LexiconSpec {
            name: name.into(),
            path: path.into(),
            kind,
            term_column: 0,
            value_column: 1,
            lowercase: true,
            header: false,
        }
    }

    pub fn validate(&self) -> Result<(), LexiconError> {
        if self.term_column == self.value_column {
            return Err(LexiconError::SameColumns {
                name: self.name.clone(),
                column: self.term_column,
            });
        }
        Ok(())
    }
}

/// Term normalization: surrounding whitespace trimmed, then Unicode
/// lowercasing when enabled.
pub fn normalize(term: &str, lowercase: bool) -> String {
    let t = term.trim();
    if lowercase {
        t.to_lowercase()
    } else {
        t.to_string()
    }
}

/// Immutable term to value map.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub name: String,
    pub kind: LexiconKind,
    pub lowercase: bool,
    entries: BTreeMap<String, f64>,
    /// Number of data rows the lexicon was built from (summed across merges).
    pub source_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageStat {
    pub lexicon_name: String,
    pub vocab_size: usize,
    pub covered: usize,
    pub fraction: f64,
}

impl Lexicon {
    /// Builds a lexicon from raw `(term, value)` pairs, applying the same
    /// duplicate rules as [`load_lexicon`].
    pub fn from_pairs<I, S>(name: impl Into<String>, kind: LexiconKind, lowercase: bool, pairs: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let name = name.into();
        let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        let mut rows = 0;
        for (i, (term, value)) in pairs.into_iter().enumerate() {
            let term = normalize(term.as_ref(), lowercase);
            if term.is_empty() {
                continue;
            }
            check_value(&name, kind, value, i + 1)?;
            rows += 1;
            let slot = acc.entry(term).or_insert((0.0, 0));
            match kind {
                LexiconKind::Continuous => {
                    slot.0 += value;
                    slot.1 += 1;
                }
                LexiconKind::Binary => {
                    slot.0 = slot.0.max(value);
                    slot.1 = 1;
                }
            }
        }
        let entries = acc.into_iter().map(|(t, (sum, n))| (t, sum / n as f64)).collect();
        Ok(Lexicon { name, kind, lowercase, entries, source_count: rows })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Value for the normalized form of `term`, if present.
    pub fn lookup(&self, term: &str) -> Option<f64> {
        if self.lowercase || term.trim().len() != term.len() {
            self.entries.get(&normalize(term, self.lowercase)).copied()
        } else {
            self.entries.get(term).copied()
        }
    }

    pub fn coverage(&self, vocab: &BTreeSet<String>) -> Result<CoverageStat, LexiconError> {
        if vocab.is_empty() {
            return Err(LexiconError::EmptyVocabulary);
        }
        let covered = vocab.iter().filter(|v| self.lookup(v).is_some()).count();
        Ok(CoverageStat {
            lexicon_name: self.name.clone(),
            vocab_size: vocab.len(),
            covered,
            fraction: covered as f64 / vocab.len() as f64,
        })
    }

    fn check_merge(&self, other: &Lexicon, want: LexiconKind) -> Result<(), LexiconError> {
        if self.kind != want || other.kind != want {
            return Err(LexiconError::KindMismatch {
                left: self.name.clone(),
                left_kind: self.kind,
                right: other.name.clone(),
                right_kind: other.kind,
            });
        }
        if self.lowercase != other.lowercase {
            return Err(LexiconError::NormalizationMismatch {
                left: self.name.clone(),
                right: other.name.clone(),
            });
        }
        Ok(())
    }
}

fn check_value(name: &str, kind: LexiconKind, value: f64, line: usize) -> Result<(), LexiconError> {
    let bad = |message: String| LexiconError::Malformed { name: name.to_string(), line, message };
    if !value.is_finite() {
        return Err(bad(format!("non-finite value {value}")));
    }
    if kind == LexiconKind::Binary && value != 0.0 && value != 1.0 {
        return Err(bad(format!("binary lexicon value {value} is not 0 or 1")));
    }
    Ok(())
}

/// Reads a TSV lexicon. Blank lines and rows with an empty value cell are
/// skipped; anything else that does not parse is an error.
pub fn load_lexicon<R: Read>(spec: &LexiconSpec, mut source: R) -> Result<Lexicon, LexiconError> {
    spec.validate()?;
    let name = &spec.name;
    let mut buf = Vec::new();
    source
        .read_to_end(&mut buf)
        .map_err(|e| LexiconError::Io { name: name.clone(), source: e })?;
    let text = String::from_utf8(buf).map_err(|_| LexiconError::Utf8 { name: name.clone() })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);

    let needed = spec.term_column.max(spec.value_column) + 1;
    let mut header_pending = spec.header;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < needed {
            return Err(LexiconError::Malformed {
                name: name.clone(),
                line: line_no,
                message: format!("expected at least {needed} columns, found {}", cols.len()),
            });
        }
        let cell = cols[spec.value_column].trim();
        if cell.is_empty() || cols[spec.term_column].trim().is_empty() {
            continue;
        }
        let value: f64 = cell.parse().map_err(|_| LexiconError::Malformed {
            name: name.clone(),
            line: line_no,
            message: format!("value `{cell}` is not numeric"),
        })?;
        check_value(name, spec.kind, value, line_no)?;
        pairs.push((cols[spec.term_column], value));
    }
    Lexicon::from_pairs(name.clone(), spec.kind, spec.lowercase, pairs)
}

fn merged_name(a: &str, b: &str) -> String {
    if a <= b {
        format!("{a}+{b}")
    } else {
        format!("{b}+{a}")
    }
}

/// Averages two continuous lexicons. Terms present in only one source keep
/// that source's value.
pub fn merge_average(a: &Lexicon, b: &Lexicon) -> Result<Lexicon, LexiconError> {
    a.check_merge(b, LexiconKind::Continuous)?;
    let mut entries = a.entries.clone();
    for (term, &vb) in &b.entries {
        entries
            .entry(term.clone())
            .and_modify(|va| *va = (*va + vb) / 2.0)
            .or_insert(vb);
    }
    Ok(Lexicon {
        name: merged_name(&a.name, &b.name),
        kind: LexiconKind::Continuous,
        lowercase: a.lowercase,
        entries,
        source_count: a.source_count + b.source_count,
    })
}

/// Union of binary lexicons; a term labelled 1 by any source is 1.
pub fn merge_binary_union(sources: &[&Lexicon]) -> Result<Lexicon, LexiconError> {
    let first = sources.first().ok_or(LexiconError::EmptyUnion)?;
    let mut entries: BTreeMap<String, f64> = BTreeMap::new();
    let mut names: Vec<&str> = Vec::new();
    let mut source_count = 0;
    for lex in sources {
        first.check_merge(lex, LexiconKind::Binary)?;
        for (term, &v) in &lex.entries {
            let slot = entries.entry(term.clone()).or_insert(0.0);
            *slot = slot.max(v);
        }
        names.push(&lex.name);
        source_count += lex.source_count;
    }
    names.sort_unstable();
    names.dedup();
    Ok(Lexicon {
        name: names.join("+"),
        kind: LexiconKind::Binary,
        lowercase: first.lowercase,
        entries,
        source_count,
    })
}

/// Registry name of the averaged age-of-acquisition resource.
pub const AOA: &str = "aoa";
pub const AOA_SOURCES: [&str; 2] = ["aoa_1981", "aoa_2017"];
/// Registry name of the combined prior complexity labels.
pub const PRIOR_COMPLEXITY: &str = "prior_complexity";
pub const PRIOR_COMPLEXITY_PREFIX: &str = "prior_complexity_";

/// Named lexicons, built once and shared read-only.
///
/// Two composite entries are derived at construction time: `aoa` is the
/// average of `aoa_1981` and `aoa_2017` (or whichever one exists), and
/// `prior_complexity` is the binary union of every `prior_complexity_*`
/// resource.
#[derive(Debug, Clone, Default)]
pub struct LexiconRegistry {
    lexicons: BTreeMap<String, Lexicon>,
}

impl LexiconRegistry {
    pub fn new(lexicons: Vec<Lexicon>) -> Result<Self, LexiconError> {
        let mut map = BTreeMap::new();
        for lex in lexicons {
            if map.contains_key(&lex.name) {
                return Err(LexiconError::DuplicateName(lex.name));
            }
            map.insert(lex.name.clone(), lex);
        }

        let aoa_parts: Vec<&Lexicon> = AOA_SOURCES.iter().filter_map(|n| map.get(*n)).collect();
        let aoa = match aoa_parts.as_slice() {
            [] => None,
            [only] => Some(Lexicon { name: AOA.into(), ..(*only).clone() }),
            [a, b] => Some(Lexicon { name: AOA.into(), ..merge_average(a, b)? }),
            _ => unreachable!(),
        };

        let prior_parts: Vec<&Lexicon> = map
            .iter()
            .filter(|(k, _)| k.starts_with(PRIOR_COMPLEXITY_PREFIX))
            .map(|(_, v)| v)
            .collect();
        let prior = if prior_parts.is_empty() {
            None
        } else {
            Some(Lexicon {
                name: PRIOR_COMPLEXITY.into(),
                ..merge_binary_union(&prior_parts)?
            })
        };

        for (name, composite) in [(AOA, aoa), (PRIOR_COMPLEXITY, prior)] {
            if let Some(lex) = composite {
                if map.contains_key(name) {
                    return Err(LexiconError::CompositeConflict(name.into()));
                }
                map.insert(name.to_string(), lex);
            }
        }
        Ok(LexiconRegistry { lexicons: map })
    }

    pub fn get(&self, name: &str) -> Option<&Lexicon> {
        self.lexicons.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.lexicons.keys().map(String::as_str)
    }
}
