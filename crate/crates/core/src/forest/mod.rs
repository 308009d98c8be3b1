//! Random forest regressor: bootstrap-resampled CART trees with per-split
//! feature subsampling.
//!
//! Tree `t` draws all of its randomness from a ChaCha8 generator seeded with
//! [`derive_seed`]`(config.seed, t)`, so trees can be built on any number of
//! threads and the assembled model is identical.

mod io;
mod tree;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

pub use io::{load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use tree::{best_split, midpoint, Node, RegressionTree, Split, IMPURITY_TIE_TOL};

use crate::features::fingerprint_columns;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("cannot fit on zero rows")]
    NoRows,
    #[error("cannot fit on zero features")]
    NoFeatures,
    #[error("{rows} feature rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("row {row} has {found} values, expected {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("non-finite target at row {0}")]
    NonFiniteTarget(usize),
    #[error("input has {found} features, model expects {expected}")]
    DimensionMismatch { found: usize, expected: usize },
    #[error("invalid forest configuration: {0}")]
    BadConfig(String),
    #[error("model was trained on a different feature schema")]
    FingerprintMismatch,
    #[error("{0} column names for {1} features")]
    ColumnCount(usize, usize),
    #[error("cannot clamp non-finite value {0}")]
    NonFiniteValue(f64),
    #[error("model file: {0}")]
    Format(String),
    #[error("model file version {found} unsupported (expected {MODEL_VERSION})")]
    Version { found: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self, ForestError> {
        if data.len() != n_rows * n_cols {
            return Err(ForestError::RaggedRow { row: 0, found: data.len(), expected: n_rows * n_cols });
        }
        Ok(Matrix { n_rows, n_cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ForestError> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n_cols {
                return Err(ForestError::RaggedRow { row: i, found: r.len(), expected: n_cols });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { n_rows: rows.len(), n_cols, data })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidate features drawn (without replacement) at every split.
    pub max_features_per_split: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 120,
            max_features_per_split: 750,
            min_samples_leaf: 1,
            min_samples_split: 2,
            max_depth: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<(), ForestError> {
        let bad = |m: &str| Err(ForestError::BadConfig(m.to_string()));
        if self.n_trees < 1 {
            return bad("n_trees must be at least 1");
        }
        if self.max_features_per_split < 1 {
            return bad("max_features_per_split must be at least 1");
        }
        if self.min_samples_leaf < 1 {
            return bad("min_samples_leaf must be at least 1");
        }
        if self.min_samples_split < 2 {
            return bad("min_samples_split must be at least 2");
        }
        Ok(())
    }
}

/// Per-tree seed: `seed * 1_000_003 + tree`, wrapping.
pub fn derive_seed(seed: u64, tree: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(tree as u64)
}

/// Clamps a finite value into `[0, 1]`.
pub fn clamp_unit(v: f64) -> Result<f64, ForestError> {
    if !v.is_finite() {
        return Err(ForestError::NonFiniteValue(v));
    }
    Ok(v.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub(crate) trees: Vec<RegressionTree>,
    pub(crate) config: ForestConfig,
    pub(crate) columns: Vec<String>,
    pub(crate) schema_fingerprint: String,
}

fn default_columns(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("f{i}")).collect()
}

impl RandomForest {
    pub fn fit(x: &Matrix, y: &[f64], config: &ForestConfig) -> Result<Self, ForestError> {
        config.validate()?;
        let (n, d) = (x.n_rows(), x.n_cols());
        if n == 0 {
            return Err(ForestError::NoRows);
        }
        if d == 0 {
            return Err(ForestError::NoFeatures);
        }
        if y.len() != n {
            return Err(ForestError::LengthMismatch { rows: n, targets: y.len() });
        }
        if let Some(i) = x.data.iter().position(|v| !v.is_finite()) {
            return Err(ForestError::NonFinite { row: i / d, col: i % d });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(ForestError::NonFiniteTarget(i));
        }

        let trees = (0..config.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, t));
                let rows: Vec<usize> = if config.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                RegressionTree::grow(x, y, rows, config, &mut rng)
            })
            .collect();

        let columns = default_columns(d);
        Ok(RandomForest {
            schema_fingerprint: fingerprint_columns(columns.iter().map(String::as_str)),
            trees,
            config: config.clone(),
            columns,
        })
    }

    /// Attaches feature column names (and their fingerprint) to the model.
    pub fn with_columns(mut self, columns: Vec<String>) -> Result<Self, ForestError> {
        if columns.len() != self.n_features() {
            return Err(ForestError::ColumnCount(columns.len(), self.n_features()));
        }
        self.schema_fingerprint = fingerprint_columns(columns.iter().map(String::as_str));
        self.columns = columns;
        Ok(self)
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn schema_fingerprint(&self) -> &str {
        &self.schema_fingerprint
    }

    /// Mean of the tree outputs (unclamped).
    pub fn predict(&self, x: &[f64]) -> Result<f64, ForestError> {
        if x.len() != self.n_features() {
            return Err(ForestError::DimensionMismatch { found: x.len(), expected: self.n_features() });
        }
        if let Some(col) = x.iter().position(|v| !v.is_finite()) {
            return Err(ForestError::NonFinite { row: 0, col });
        }
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for t in &self.trees {
            let v = t.predict(x);
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        Ok((sum / self.trees.len() as f64).clamp(lo, hi))
    }

    /// [`predict`](Self::predict) after checking the caller's schema fingerprint.
    pub fn predict_checked(&self, fingerprint: &str, x: &[f64]) -> Result<f64, ForestError> {
        self.check_fingerprint(fingerprint)?;
        self.predict(x)
    }

    pub fn check_fingerprint(&self, fingerprint: &str) -> Result<(), ForestError> {
        if fingerprint != self.schema_fingerprint {
            return Err(ForestError::FingerprintMismatch);
        }
        Ok(())
    }

    /// Builds a model from explicit trees, e.g. for tests or conversions.
    pub fn from_trees(trees: Vec<RegressionTree>, config: ForestConfig, n_features: usize) -> Result<Self, ForestError> {
        if trees.is_empty() || trees.len() != config.n_trees {
            return Err(ForestError::BadConfig(format!(
                "{} trees supplied for n_trees = {}",
                trees.len(),
                config.n_trees
            )));
        }
        for t in &trees {
            io::validate_tree(t, n_features).map_err(ForestError::Format)?;
        }
        let columns = default_columns(n_features);
        Ok(RandomForest {
            schema_fingerprint: fingerprint_columns(columns.iter().map(String::as_str)),
            trees,
            config,
            columns,
        })
    }
}
