//! LCP dataset parsing, train/dev splitting and Likert band labels.
//!
//! The dataset format is a UTF-8 TSV with the header
//! `id  corpus  sentence  token  complexity`. Files without gold scores may
//! omit the last column or leave it empty.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const HEADER: [&str; 5] = ["id", "corpus", "sentence", "token", "complexity"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset is not valid UTF-8")]
    Utf8,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("instance {id}: complexity {value} outside [0, 1]")]
    GoldOutOfRange { id: String, value: f64 },
    #[error("duplicate instance id {0}")]
    DuplicateId(String),
    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("need at least 2 instances to split, got {0}")]
    TooFewInstances(usize),
    #[error("dev fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("instance {id}: field {field} contains a tab or line break")]
    Unserializable { id: String, field: &'static str },
}

/// Source subcorpus of a CompLex sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subcorpus {
    Bible,
    Europarl,
    Biomed,
    Other(String),
}

impl Subcorpus {
    pub fn as_str(&self) -> &str {
        match self {
            Subcorpus::Bible => "bible",
            Subcorpus::Europarl => "europarl",
            Subcorpus::Biomed => "biomed",
            Subcorpus::Other(s) => s,
        }
    }
}

impl From<&str> for Subcorpus {
    fn from(s: &str) -> Self {
        match s.to_lowercase().as_str() {
            "bible" => Subcorpus::Bible,
            "europarl" => Subcorpus::Europarl,
            "biomed" => Subcorpus::Biomed,
            _ => Subcorpus::Other(s.to_string()),
        }
    }
}

impl fmt::Display for Subcorpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One annotated target word in its sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub subcorpus: Subcorpus,
    pub sentence: String,
    pub token: String,
    pub gold: Option<f64>,
}

impl Instance {
    pub fn new(
        id: impl Into<String>,
        subcorpus: Subcorpus,
        sentence: impl Into<String>,
        token: impl Into<String>,
        gold: Option<f64>,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        let token = token.into().trim().to_string();
        if token.is_empty() {
            return Err(CorpusError::Malformed {
                line: 0,
                message: format!("instance {id}: empty token"),
            });
        }
        if let Some(g) = gold {
            if !(0.0..=1.0).contains(&g) {
                return Err(CorpusError::GoldOutOfRange { id, value: g });
            }
        }
        Ok(Instance {
            id,
            subcorpus,
            sentence: sentence.into(),
            token,
            gold,
        })
    }
}

/// Parses an LCP dataset. Rows whose token does not occur in the sentence
/// are kept and logged as warnings.
pub fn parse_dataset<R: Read>(mut source: R, has_gold: bool) -> Result<Vec<Instance>, CorpusError> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    let text = String::from_utf8(buf).map_err(|_| CorpusError::Utf8)?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);

    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));

    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some(h) => break h,
            None => return Ok(Vec::new()),
        }
    };
    let header_cols: Vec<&str> = header.1.split('\t').map(str::trim).collect();
    let expected: &[&str] = if has_gold || header_cols.len() == 5 { &HEADER } else { &HEADER[..4] };
    if header_cols.len() != expected.len()
        || !header_cols.iter().zip(expected).all(|(a, b)| a.eq_ignore_ascii_case(b))
    {
        return Err(CorpusError::Malformed {
            line: header.0,
            message: format!("expected header `{}`", expected.join("\t")),
        });
    }

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let ok = match cols.len() {
            5 => true,
            4 => !has_gold,
            _ => false,
        };
        if !ok {
            return Err(CorpusError::Malformed {
                line: line_no,
                message: format!("expected {} columns, found {}", if has_gold { 5 } else { 4 }, cols.len()),
            });
        }
        let id = cols[0].trim();
        if id.is_empty() {
            return Err(CorpusError::Malformed { line: line_no, message: "empty id".into() });
        }
        let gold = match cols.get(4).map(|c| c.trim()) {
            Some(c) if has_gold && !c.is_empty() => {
                let v: f64 = c.parse().map_err(|_| CorpusError::Malformed {
                    line: line_no,
                    message: format!("complexity `{c}` is not a number"),
                })?;
                Some(v)
            }
            _ => None,
        };
        let inst = Instance::new(id, Subcorpus::from(cols[1].trim()), cols[2], cols[3], gold).map_err(
            |e| match e {
                CorpusError::Malformed { message, .. } => CorpusError::Malformed { line: line_no, message },
                other => other,
            },
        )?;
        if !seen.insert(inst.id.clone()) {
            return Err(CorpusError::DuplicateId(inst.id));
        }
        if !inst.sentence.contains(&inst.token) {
            log::warn!("line {line_no}: token `{}` not found in sentence of {}", inst.token, inst.id);
        }
        out.push(inst);
    }
    Ok(out)
}

/// Writes instances in the dataset TSV format, including the header.
pub fn write_dataset<W: Write>(instances: &[Instance], mut sink: W) -> Result<(), CorpusError> {
    writeln!(sink, "{}", HEADER.join("\t"))?;
    for inst in instances {
        for (field, value) in [
            ("id", inst.id.as_str()),
            ("corpus", inst.subcorpus.as_str()),
            ("sentence", inst.sentence.as_str()),
            ("token", inst.token.as_str()),
        ] {
            if value.contains(['\t', '\n', '\r']) {
                return Err(CorpusError::Unserializable { id: inst.id.clone(), field });
            }
        }
        let gold = inst.gold.map(|g| g.to_string()).unwrap_or_default();
        writeln!(
            sink,
            "{}\t{}\t{}\t{}\t{}",
            inst.id, inst.subcorpus, inst.sentence, inst.token, gold
        )?;
    }
    Ok(())
}

/// A seeded partition of a dataset into training and development portions.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<Instance>,
    pub dev: Vec<Instance>,
    pub seed: u64,
    pub dev_fraction: f64,
}

/// Number of dev instances for `n` rows: `round(dev_fraction * n)`.
pub fn dev_size(n: usize, dev_fraction: f64) -> usize {
    (dev_fraction * n as f64).round() as usize
}

/// Shuffles instance indices with a seeded generator and cuts the first
/// `round(dev_fraction * n)` of them off as the dev portion.
pub fn split_train_dev(instances: &[Instance], dev_fraction: f64, seed: u64) -> Result<DatasetSplit, CorpusError> {
    if !(dev_fraction > 0.0 && dev_fraction < 1.0) {
        return Err(CorpusError::BadFraction(dev_fraction));
    }
    let n = instances.len();
    if n < 2 {
        return Err(CorpusError::TooFewInstances(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_dev = dev_size(n, dev_fraction);
    let dev = order[..n_dev].iter().map(|&i| instances[i].clone()).collect();
    let train = order[n_dev..].iter().map(|&i| instances[i].clone()).collect();
    Ok(DatasetSplit { train, dev, seed, dev_fraction })
}

/// The five Likert complexity bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BandLabel {
    VeryEasy,
    Easy,
    Neutral,
    Difficult,
    VeryDifficult,
}

impl BandLabel {
    pub const ALL: [BandLabel; 5] = [
        BandLabel::VeryEasy,
        BandLabel::Easy,
        BandLabel::Neutral,
        BandLabel::Difficult,
        BandLabel::VeryDifficult,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BandLabel::VeryEasy => "very_easy",
            BandLabel::Easy => "easy",
            BandLabel::Neutral => "neutral",
            BandLabel::Difficult => "difficult",
            BandLabel::VeryDifficult => "very_difficult",
        }
    }
}

impl fmt::Display for BandLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BandLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BandLabel::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| format!("unknown band `{s}`"))
    }
}

/// Maps a complexity score to its band. Exactly 0 is `very_easy`; the other
/// bands are closed below and open above, except the last which includes 1.
pub fn band_of(score: f64) -> Result<BandLabel, CorpusError> {
    if !(0.0..=1.0).contains(&score) {
        return Err(CorpusError::ScoreOutOfRange(score));
    }
    Ok(if score == 0.0 {
        BandLabel::VeryEasy
    } else if score < 0.25 {
        BandLabel::Easy
    } else if score < 0.5 {
        BandLabel::Neutral
    } else if score < 0.75 {
        BandLabel::Difficult
    } else {
        BandLabel::VeryDifficult
    })
}
