//! Files written and read alongside models and reports: resource loading,
//! the schema sidecar and run manifests.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use lcp_core::corpus::{parse_dataset, Instance};
use lcp_core::features::{FeatureResources, FeatureSchema, LexiconTagger};
use lcp_core::lexicons::{load_lexicon, LexiconRegistry, LexiconSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const SIDECAR_VERSION: u32 = 1;

/// `<path><suffix>`, e.g. `model.lcp` + `.manifest`.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn sidecar_path(model: &Path) -> PathBuf {
    with_suffix(model, ".schema.json")
}

pub fn manifest_path(output: &Path) -> PathBuf {
    with_suffix(output, ".manifest")
}

pub fn read_dataset(path: &Path, has_gold: bool) -> Result<Vec<Instance>, CliError> {
    let file = File::open(path).map_err(|e| CliError::data_io(path, e))?;
    parse_dataset(BufReader::new(file), has_gold).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Absolute form of `path` when it exists, otherwise `path` unchanged.
fn absolute(path: &Path) -> PathBuf {
    std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf())
}

/// Loads every lexicon (in parallel) and the optional POS tag lexicon.
pub fn load_resources(lexicons: &[LexiconSpec], pos_lexicon: Option<&Path>) -> Result<FeatureResources, CliError> {
    let loaded = lexicons
        .par_iter()
        .map(|spec| {
            let file = File::open(&spec.path).map_err(|e| CliError::resource_io(&spec.path, format!("lexicon {}: {e}", spec.name)))?;
            let lex = load_lexicon(spec, BufReader::new(file))?;
            log::info!("lexicon {}: {} terms from {}", lex.name, lex.len(), spec.path.display());
            Ok(lex)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut resources = FeatureResources::new(LexiconRegistry::new(loaded)?);
    if let Some(path) = pos_lexicon {
        let file = File::open(path).map_err(|e| CliError::resource_io(path, format!("POS tag lexicon: {e}")))?;
        let tagger = LexiconTagger::load(BufReader::new(file))?;
        resources = resources.with_tagger(Arc::new(tagger));
    }
    Ok(resources)
}

/// Everything besides the forest that is needed to apply a model.
#[derive(Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub version: u32,
    pub schema: FeatureSchema,
    pub lexicons: Vec<LexiconSpec>,
    pub pos_lexicon: Option<PathBuf>,
}

impl Sidecar {
    pub fn new(schema: FeatureSchema, cfg: &RunConfig) -> Self {
        let lexicons = cfg
            .lexicons
            .iter()
            .map(|l| LexiconSpec { path: absolute(&l.path), ..l.clone() })
            .collect();
        Sidecar {
            version: SIDECAR_VERSION,
            schema,
            lexicons,
            pos_lexicon: cfg.pos_lexicon.as_deref().map(absolute),
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let file = File::open(path).map_err(|e| CliError::resource_io(path, e))?;
        let sidecar: Sidecar =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| CliError::resource_io(path, e))?;
        if sidecar.version != SIDECAR_VERSION {
            return Err(CliError::resource_io(
                path,
                format!("schema sidecar version {} unsupported (expected {SIDECAR_VERSION})", sidecar.version),
            ));
        }
        Ok(sidecar)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("sidecar serializes");
        out.push(b'\n');
        out
    }
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut file = File::open(path).map_err(|e| CliError::resource_io(path, e))?;
    let mut hasher = Sha256::new();
    std::io::copy(&mut file, &mut hasher).map_err(|e| CliError::resource_io(path, e))?;
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Serialize)]
pub struct HashedFile {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance record written as `<output>.manifest`.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    /// The effective configuration, in config-file syntax.
    pub config: String,
    pub inputs: Vec<HashedFile>,
    pub outputs: Vec<HashedFile>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Manifest {
            command: command.to_string(),
            seed: cfg.forest.seed,
            config: cfg.render(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, role: impl Into<String>, path: &Path) -> Result<&mut Self, CliError> {
        self.inputs.push(HashedFile { role: role.into(), path: absolute(path), sha256: sha256_file(path)? });
        Ok(self)
    }

    /// Hashes the inputs a run config refers to: training data, lexicons, tagger.
    pub fn config_inputs(&mut self, cfg: &RunConfig) -> Result<&mut Self, CliError> {
        if let Some(p) = &cfg.train {
            self.input("train", p)?;
        }
        for l in &cfg.lexicons {
            self.input(format!("lexicon {}", l.name), &l.path)?;
        }
        if let Some(p) = &cfg.pos_lexicon {
            self.input("pos_lexicon", p)?;
        }
        Ok(self)
    }

    pub fn output(&mut self, role: impl Into<String>, path: &Path) -> Result<&mut Self, CliError> {
        self.outputs.push(HashedFile { role: role.into(), path: absolute(path), sha256: sha256_file(path)? });
        Ok(self)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        write_file(path, &bytes)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::resource_io(path, e))
}

/// Opens `path` for writing, or stdout when `None`.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::resource_io(p, e))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}
