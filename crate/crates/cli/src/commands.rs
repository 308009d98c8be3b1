use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use lcp_core::corpus::{band_of, split_train_dev, BandLabel};
use lcp_core::eval::{evaluate as score, render_report, render_report_with_header, run_ablation, run_comparison};
use lcp_core::eval::{AblationRow, ReportFormat};
use lcp_core::features::{FeatureConfig, FeatureFamily, Preset};
use lcp_core::forest::{clamp_unit, load_model, save_model};
use lcp_core::pipeline::{train_and_score, TrainedModel};

use crate::artifacts::{load_resources, manifest_path, read_dataset, sidecar_path, sink, write_file, Manifest, Sidecar};
use crate::config::RunConfig;
use crate::error::CliError;

fn train_path(cfg: &RunConfig) -> Result<&Path, CliError> {
    cfg.train
        .as_deref()
        .ok_or_else(|| CliError::usage("no training data: pass --train or set [data] train in the config"))
}

fn io_err(path: Option<&Path>) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| match path {
        Some(p) => CliError::resource_io(p, e),
        None => CliError::Resource(format!("stdout: {e}")),
    }
}

/// Writes `text` to `path` (plus a manifest next to it) or to stdout.
fn emit_report(text: &str, path: Option<&Path>, manifest: Option<Manifest>) -> Result<(), CliError> {
    let mut out = sink(path)?;
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(io_err(path))?;
    drop(out);
    if let (Some(p), Some(mut m)) = (path, manifest) {
        m.output("report", p)?;
        m.write(&manifest_path(p))?;
    }
    Ok(())
}

pub fn train(cfg: &RunConfig, model_out: &Path, quiet: bool) -> Result<(), CliError> {
    cfg.validate()?;
    let train = train_path(cfg)?;
    let instances = read_dataset(train, true)?;
    let resources = load_resources(&cfg.lexicons, cfg.pos_lexicon.as_deref())?;
    let split = split_train_dev(&instances, cfg.dev_fraction, cfg.forest.seed)?;
    log::info!(
        "training on {} instances, scoring on {} ({} trees, seed {})",
        split.train.len(),
        if cfg.eval_on == lcp_core::pipeline::EvalOn::Dev { split.dev.len() } else { split.train.len() },
        cfg.forest.n_trees,
        cfg.forest.seed
    );
    let (model, report) = train_and_score(&split, &cfg.features, &cfg.forest, &resources, cfg.eval_on)?;
    log::info!("{} feature columns", model.schema.len());

    let mut bytes = Vec::new();
    save_model(&model.forest, &mut bytes)?;
    write_file(model_out, &bytes)?;
    let sidecar = sidecar_path(model_out);
    write_file(&sidecar, &Sidecar::new(model.schema, cfg).to_bytes())?;

    let mut manifest = Manifest::new("train", cfg);
    manifest.config_inputs(cfg)?.output("model", model_out)?.output("schema", &sidecar)?;
    manifest.write(&manifest_path(model_out))?;

    if !quiet {
        let row = AblationRow { label: cfg.label().to_string(), report };
        let header = format!("Features ({}, n={})", cfg.eval_on, report.n);
        print!("{}", render_report_with_header(&[row], ReportFormat::Markdown, &header)?);
    }
    Ok(())
}

pub struct PredictOptions {
    pub model: PathBuf,
    pub schema: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub decimals: usize,
}

pub fn predict(cfg: &RunConfig, opts: &PredictOptions) -> Result<(), CliError> {
    let input = opts
        .input
        .as_deref()
        .or(cfg.test.as_deref())
        .ok_or_else(|| CliError::usage("no input: pass --input or set [data] test in the config"))?;
    let model_file = File::open(&opts.model).map_err(|e| CliError::resource_io(&opts.model, e))?;
    let forest = load_model(BufReader::new(model_file)).map_err(|e| CliError::resource_io(&opts.model, e))?;
    let sidecar_file = opts.schema.clone().unwrap_or_else(|| sidecar_path(&opts.model));
    let sidecar = Sidecar::read(&sidecar_file)?;

    let mut resolved = cfg.clone();
    resolved.lexicons = sidecar.lexicons.clone();
    for spec in &cfg.lexicons {
        resolved.upsert_lexicon(spec.clone());
    }
    resolved.pos_lexicon = cfg.pos_lexicon.clone().or(sidecar.pos_lexicon.clone());
    resolved.features = sidecar.schema.config.clone();
    resolved.preset = None;
    resolved.forest = forest.config().clone();

    let model = TrainedModel::new(sidecar.schema, forest)
        .map_err(|e| CliError::Resource(format!("{} does not match {}: {e}", sidecar_file.display(), opts.model.display())))?;
    let instances = read_dataset(input, false)?;
    let predictions = if instances.is_empty() {
        Vec::new()
    } else {
        let resources = load_resources(&resolved.lexicons, resolved.pos_lexicon.as_deref())?;
        model.predict(&instances, &resources)?
    };

    let mut text = String::from("id\tprediction\tband\n");
    for (inst, p) in instances.iter().zip(&predictions) {
        let (shown, band) = format_prediction(*p, opts.decimals)?;
        text.push_str(&format!("{}\t{shown}\t{band}\n", inst.id));
    }
    let out = opts.output.as_deref();
    let mut w = sink(out)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(io_err(out))?;
    drop(w);
    log::info!("wrote {} predictions", instances.len());

    if let Some(out) = out {
        let mut manifest = Manifest::new("predict", &resolved);
        manifest.input("model", &opts.model)?.input("schema", &sidecar_file)?.input("input", input)?;
        for l in &resolved.lexicons {
            manifest.input(format!("lexicon {}", l.name), &l.path)?;
        }
        if let Some(p) = &resolved.pos_lexicon {
            manifest.input("pos_lexicon", p)?;
        }
        manifest.output("predictions", out)?;
        manifest.write(&manifest_path(out))?;
    }
    Ok(())
}

/// Clamps to `[0, 1]`, rounds to `decimals` places and bands the value as
/// written, so the band column always agrees with the printed number.
fn format_prediction(p: f64, decimals: usize) -> Result<(String, BandLabel), CliError> {
    let p = clamp_unit(p)?;
    let shown = format!("{p:.decimals$}");
    let band = band_of(shown.parse::<f64>().unwrap_or(p))?;
    Ok((shown, band))
}

/// Reads `id<TAB>prediction[<TAB>...]` rows after a header line.
fn read_predictions(path: &Path) -> Result<BTreeMap<String, f64>, CliError> {
    let file = File::open(path).map_err(|e| CliError::data_io(path, e))?;
    let bad = |line: usize, msg: String| CliError::Data(format!("{}, line {line}: {msg}", path.display()));
    let mut out = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::data_io(path, e))?;
        let line = line.trim_end_matches('\r');
        let line = if i == 0 { line.trim_start_matches('\u{feff}') } else { line };
        let mut fields = line.split('\t');
        let (id, value) = (fields.next().unwrap_or(""), fields.next());
        if i == 0 {
            if id != "id" || value != Some("prediction") {
                return Err(bad(1, "expected header `id<TAB>prediction`".into()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let value = value.ok_or_else(|| bad(i + 1, "missing prediction column".into()))?;
        let v: f64 = value.trim().parse().map_err(|_| bad(i + 1, format!("prediction `{value}` is not a number")))?;
        if !v.is_finite() {
            return Err(bad(i + 1, format!("prediction `{value}` is not finite")));
        }
        if out.insert(id.to_string(), v).is_some() {
            return Err(bad(i + 1, format!("duplicate id {id}")));
        }
    }
    if out.is_empty() && std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(false) {
        return Err(bad(1, "expected header `id<TAB>prediction`".into()));
    }
    Ok(out)
}

pub fn evaluate(
    predictions: &Path,
    gold: &Path,
    report: Option<&Path>,
    format: ReportFormat,
    label: &str,
) -> Result<(), CliError> {
    let pred = read_predictions(predictions)?;
    let gold_rows = read_dataset(gold, true)?;
    let missing: Vec<&str> = gold_rows.iter().filter(|g| !pred.contains_key(&g.id)).map(|g| g.id.as_str()).collect();
    if !missing.is_empty() {
        return Err(CliError::Data(format!(
            "{} gold ids have no prediction: {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    if gold_rows.is_empty() {
        return Err(CliError::Data(format!("{}: no gold instances", gold.display())));
    }
    let mut p = Vec::with_capacity(gold_rows.len());
    let mut g = Vec::with_capacity(gold_rows.len());
    for row in &gold_rows {
        g.push(row.gold.ok_or_else(|| CliError::Data(format!("instance {} has no gold complexity", row.id)))?);
        p.push(pred[&row.id]);
    }
    let extra = pred.len() - gold_rows.len();
    if extra > 0 {
        log::warn!("{extra} predictions have no gold row and were ignored");
    }
    let rows = [AblationRow { label: label.to_string(), report: score(&p, &g)? }];
    let text = render_report_with_header(&rows, format, "Run")?;
    let mut manifest = Manifest::new("evaluate", &RunConfig::default());
    manifest.input("predictions", predictions)?.input("gold", gold)?;
    emit_report(&text, report, report.map(|_| manifest))
}

pub enum AblateMode {
    /// Baseline plus each listed family; `None` means every family outside the baseline.
    Candidates(Option<String>),
    /// One row per preset.
    Models,
}

pub fn ablate(cfg: &RunConfig, mode: AblateMode, report: Option<&Path>, format: ReportFormat) -> Result<(), CliError> {
    cfg.validate()?;
    let train = train_path(cfg)?;
    let instances = read_dataset(train, true)?;
    let resources = load_resources(&cfg.lexicons, cfg.pos_lexicon.as_deref())?;
    let split = split_train_dev(&instances, cfg.dev_fraction, cfg.forest.seed)?;
    let rows = match mode {
        AblateMode::Models => {
            let configs: Vec<(String, FeatureConfig)> = Preset::ALL
                .iter()
                .map(|p| (p.label().to_string(), FeatureConfig { enabled: p.families(), ..cfg.features.clone() }))
                .collect();
            run_comparison(&split, &configs, &cfg.forest, &resources, cfg.eval_on)?
        }
        AblateMode::Candidates(list) => {
            let candidates: Vec<FeatureFamily> = match list {
                Some(list) => {
                    let mut seen = BTreeSet::new();
                    let mut out = Vec::new();
                    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        let family: FeatureFamily = item.parse()?;
                        if !seen.insert(family) {
                            return Err(CliError::usage(format!("candidate {family} listed twice")));
                        }
                        out.push(family);
                    }
                    out
                }
                None => FeatureFamily::ALL.into_iter().filter(|f| !cfg.features.has(*f)).collect(),
            };
            run_ablation(&split, &cfg.features, &candidates, &cfg.forest, &resources, cfg.eval_on)?
        }
    };
    let text = render_report(&rows, format)?;
    let mut manifest = Manifest::new("ablate", cfg);
    manifest.config_inputs(cfg)?;
    emit_report(&text, report, report.map(|_| manifest))
}

pub fn coverage(cfg: &RunConfig, name: Option<&str>) -> Result<(), CliError> {
    for l in &cfg.lexicons {
        l.validate()?;
    }
    let train = train_path(cfg)?;
    let instances = read_dataset(train, false)?;
    let vocab: BTreeSet<String> = instances.iter().map(|i| i.token.to_lowercase()).collect();
    if vocab.is_empty() {
        return Err(CliError::Data(format!("{}: no training targets", train.display())));
    }
    let resources = load_resources(&cfg.lexicons, None)?;
    let registry = &resources.lexicons;
    let names: Vec<&str> = match name {
        Some(n) => {
            registry.get(n).ok_or_else(|| CliError::Resource(format!("lexicon {n} is not loaded")))?;
            vec![n]
        }
        None => registry.names().collect(),
    };
    if names.is_empty() {
        return Err(CliError::usage("no lexicons configured: pass --lexicon NAME=PATH or add [lexicon.NAME] sections"));
    }
    let mut out = String::from("lexicon\tcovered\tvocab\tcoverage\n");
    for n in names {
        let stat = registry.get(n).expect("listed by the registry").coverage(&vocab)?;
        out.push_str(&format!("{}\t{}\t{}\t{:.2}%\n", stat.lexicon_name, stat.covered, stat.vocab_size, 100.0 * stat.fraction));
    }
    print!("{out}");
    Ok(())
}
