//! Line-oriented text model format.
//!
//! ```text
//! LCPMODEL 1
//! [schema]
//! <one column name per line>
//! [config]
//! n_trees=120
//! ...
//! [tree 0]
//! N <feature> <threshold> <left> <right>
//! L <value>
//! ...
//! [end]
//! ```
//!
//! Tree nodes are listed in pre-order; `left`/`right` are 0-based node
//! lines within the same `[tree i]` section. Reals use Rust's shortest
//! round-trip decimal rendering, so a load reproduces every bit. Column
//! names escape `\`, line breaks and a leading `[`.

use std::io::{Read, Write};

use super::{ForestConfig, ForestError, Node, RandomForest, RegressionTree};
use crate::features::fingerprint_columns;

pub const MODEL_MAGIC: &str = "LCPMODEL";
pub const MODEL_VERSION: u32 = 1;

fn escape(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for (i, c) in name.chars().enumerate() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '[' if i == 0 => out.push_str("\\["),
            c => out.push(c),
        }
    }
    out
}

fn unescape(line: &str) -> Result<String, String> {
    let mut out = String::with_capacity(line.len());
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('[') => out.push('['),
            other => return Err(format!("bad escape `\\{}` in column name", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

pub fn save_model<W: Write>(model: &RandomForest, mut sink: W) -> Result<(), ForestError> {
    let mut s = String::new();
    s.push_str(&format!("{MODEL_MAGIC} {MODEL_VERSION}\n[schema]\n"));
    for c in &model.columns {
        s.push_str(&escape(c));
        s.push('\n');
    }
    let c = &model.config;
    s.push_str("[config]\n");
    s.push_str(&format!("n_trees={}\n", c.n_trees));
    s.push_str(&format!("max_features_per_split={}\n", c.max_features_per_split));
    s.push_str(&format!("min_samples_leaf={}\n", c.min_samples_leaf));
    s.push_str(&format!("min_samples_split={}\n", c.min_samples_split));
    match c.max_depth {
        Some(d) => s.push_str(&format!("max_depth={d}\n")),
        None => s.push_str("max_depth=none\n"),
    }
    s.push_str(&format!("bootstrap={}\n", c.bootstrap));
    s.push_str(&format!("seed={}\n", c.seed));
    for (i, t) in model.trees.iter().enumerate() {
        s.push_str(&format!("[tree {i}]\n"));
        for node in &t.nodes {
            match *node {
                Node::Internal { feature, threshold, left, right } => {
                    s.push_str(&format!("N {feature} {threshold} {left} {right}\n"))
                }
                Node::Leaf { value } => s.push_str(&format!("L {value}\n")),
            }
        }
    }
    s.push_str("[end]\n");
    sink.write_all(s.as_bytes())?;
    Ok(())
}

/// Checks that `tree` is a well-formed pre-order listing over `n_features`.
pub(crate) fn validate_tree(tree: &RegressionTree, n_features: usize) -> Result<(), String> {
    let nodes = &tree.nodes;
    if nodes.is_empty() {
        return Err("empty tree".into());
    }
    // Visiting in pre-order must touch node ids 0, 1, 2, ... exactly once.
    let mut expected = 0;
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        if i != expected {
            return Err(format!("node {i} is out of pre-order position (expected {expected})"));
        }
        expected += 1;
        match nodes[i] {
            Node::Leaf { value } if !value.is_finite() => return Err(format!("node {i}: non-finite leaf")),
            Node::Leaf { .. } => {}
            Node::Internal { feature, threshold, left, right } => {
                if feature >= n_features {
                    return Err(format!("node {i}: feature {feature} out of range"));
                }
                if !threshold.is_finite() {
                    return Err(format!("node {i}: non-finite threshold"));
                }
                if left >= nodes.len() || right >= nodes.len() || left <= i || right <= left {
                    return Err(format!("node {i}: bad child references {left} {right}"));
                }
                stack.push(right);
                stack.push(left);
            }
        }
    }
    if expected != nodes.len() {
        return Err(format!("{} unreachable nodes", nodes.len() - expected));
    }
    Ok(())
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Split<'a, char>>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str), ForestError> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| ForestError::Format("unexpected end of file (truncated?)".into()))
    }

    fn peek(&mut self) -> Option<&'a str> {
        self.inner.peek().map(|(_, l)| *l)
    }

    fn expect(&mut self, want: &str) -> Result<(), ForestError> {
        let (n, l) = self.next()?;
        if l != want {
            return Err(ForestError::Format(format!("line {n}: expected `{want}`, found `{l}`")));
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T, ForestError> {
    s.parse()
        .map_err(|_| ForestError::Format(format!("line {line}: bad {what} `{s}`")))
}

pub fn load_model<R: Read>(mut source: R) -> Result<RandomForest, ForestError> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| ForestError::Format(format!("unreadable model: {e}")))?;
    let body = text
        .strip_suffix('\n')
        .ok_or_else(|| ForestError::Format("missing final newline (truncated?)".into()))?;
    let mut lines = Lines { inner: body.split('\n').enumerate().peekable() };

    let (_, magic) = lines.next()?;
    match magic.split_once(' ') {
        Some((MODEL_MAGIC, v)) if v == MODEL_VERSION.to_string() => {}
        Some((MODEL_MAGIC, v)) => return Err(ForestError::Version { found: v.to_string() }),
        _ => return Err(ForestError::Format(format!("not a model file (header `{magic}`)"))),
    }

    lines.expect("[schema]")?;
    let mut columns = Vec::new();
    while lines.peek().is_some_and(|l| l != "[config]") {
        let (n, l) = lines.next()?;
        columns.push(unescape(l).map_err(|e| ForestError::Format(format!("line {n}: {e}")))?);
    }
    lines.expect("[config]")?;

    let mut cfg = ForestConfig::default();
    let keys = ["n_trees", "max_features_per_split", "min_samples_leaf", "min_samples_split", "max_depth", "bootstrap", "seed"];
    for key in keys {
        let (n, l) = lines.next()?;
        let value = l
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| ForestError::Format(format!("line {n}: expected `{key}=...`, found `{l}`")))?;
        match key {
            "n_trees" => cfg.n_trees = parse_num(value, n, key)?,
            "max_features_per_split" => cfg.max_features_per_split = parse_num(value, n, key)?,
            "min_samples_leaf" => cfg.min_samples_leaf = parse_num(value, n, key)?,
            "min_samples_split" => cfg.min_samples_split = parse_num(value, n, key)?,
            "max_depth" => cfg.max_depth = if value == "none" { None } else { Some(parse_num(value, n, key)?) },
            "bootstrap" => cfg.bootstrap = parse_num(value, n, key)?,
            "seed" => cfg.seed = parse_num(value, n, key)?,
            _ => unreachable!(),
        }
    }
    cfg.validate()?;
    if columns.is_empty() {
        return Err(ForestError::Format("empty [schema] section".into()));
    }

    let mut trees = Vec::with_capacity(cfg.n_trees);
    for t in 0..cfg.n_trees {
        lines.expect(&format!("[tree {t}]"))?;
        let mut nodes = Vec::new();
        while lines.peek().is_some_and(|l| !l.starts_with('[')) {
            let (n, l) = lines.next()?;
            let parts: Vec<&str> = l.split(' ').collect();
            let node = match parts.as_slice() {
                ["L", v] => Node::Leaf { value: parse_num(v, n, "leaf value")? },
                ["N", f, th, left, right] => Node::Internal {
                    feature: parse_num(f, n, "feature index")?,
                    threshold: parse_num(th, n, "threshold")?,
                    left: parse_num(left, n, "child reference")?,
                    right: parse_num(right, n, "child reference")?,
                },
                _ => return Err(ForestError::Format(format!("line {n}: bad node `{l}`"))),
            };
            nodes.push(node);
        }
        let tree = RegressionTree { nodes };
        validate_tree(&tree, columns.len()).map_err(|e| ForestError::Format(format!("tree {t}: {e}")))?;
        trees.push(tree);
    }
    lines.expect("[end]")?;
    if let Some(extra) = lines.peek() {
        return Err(ForestError::Format(format!("trailing content after [end]: `{extra}`")));
    }

    Ok(RandomForest {
        schema_fingerprint: fingerprint_columns(columns.iter().map(String::as_str)),
        trees,
        config: cfg,
        columns,
    })
}
