//! Feature extraction + forest training glued into trainable, scorable
//! models.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::{DatasetSplit, Instance};
use crate::eval::{evaluate, MetricsReport};
use crate::features::{fit_schema, FeatureConfig, FeatureResources, FeatureSchema};
use crate::forest::{clamp_unit, ForestConfig, Matrix, RandomForest};
use crate::Error;

/// Which portion of a split a model is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalOn {
    #[default]
    Dev,
    Train,
}

impl EvalOn {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalOn::Dev => "dev",
            EvalOn::Train => "train",
        }
    }
}

impl fmt::Display for EvalOn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalOn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dev" => Ok(EvalOn::Dev),
            "train" => Ok(EvalOn::Train),
            other => Err(format!("unknown evaluation portion `{other}` (expected dev or train)")),
        }
    }
}

/// Extracts one row per instance, in order.
pub fn feature_matrix(instances: &[Instance], schema: &FeatureSchema, resources: &FeatureResources) -> Result<Matrix, Error> {
    let extractor = schema.extractor(resources);
    let rows: Vec<Vec<f64>> = instances.par_iter().map(|i| extractor.extract(i).0).collect();
    let data = rows.concat();
    Ok(Matrix::new(instances.len(), schema.len(), data)?)
}

fn gold_of(instances: &[Instance]) -> Result<Vec<f64>, Error> {
    instances
        .iter()
        .map(|i| i.gold.ok_or_else(|| Error::MissingGold(i.id.clone())))
        .collect()
}

/// A fitted schema and the forest trained on its columns.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub schema: FeatureSchema,
    pub forest: RandomForest,
}

pub fn train_model(
    train: &[Instance],
    features: &FeatureConfig,
    forest: &ForestConfig,
    resources: &FeatureResources,
) -> Result<TrainedModel, Error> {
    let y = gold_of(train)?;
    let schema = fit_schema(train, resources, features)?;
    let x = feature_matrix(train, &schema, resources)?;
    let forest = RandomForest::fit(&x, &y, forest)?.with_columns(schema.column_names())?;
    Ok(TrainedModel { schema, forest })
}

impl TrainedModel {
    /// Pairs an existing schema and forest, checking that they agree.
    pub fn new(schema: FeatureSchema, forest: RandomForest) -> Result<Self, Error> {
        forest.check_fingerprint(&schema.fingerprint())?;
        Ok(TrainedModel { schema, forest })
    }

    /// Raw forest outputs.
    pub fn predict_raw(&self, instances: &[Instance], resources: &FeatureResources) -> Result<Vec<f64>, Error> {
        self.schema.check_resources(resources)?;
        let fp = self.schema.fingerprint();
        let x = feature_matrix(instances, &self.schema, resources)?;
        (0..x.n_rows())
            .map(|r| Ok(self.forest.predict_checked(&fp, x.row(r))?))
            .collect()
    }

    /// Complexity scores clamped to `[0, 1]`.
    pub fn predict(&self, instances: &[Instance], resources: &FeatureResources) -> Result<Vec<f64>, Error> {
        self.predict_raw(instances, resources)?
            .into_iter()
            .map(|v| Ok(clamp_unit(v)?))
            .collect()
    }

    pub fn evaluate(&self, instances: &[Instance], resources: &FeatureResources) -> Result<MetricsReport, Error> {
        if instances.is_empty() {
            return Err(Error::EmptyEvaluation);
        }
        let gold = gold_of(instances)?;
        let pred = self.predict(instances, resources)?;
        Ok(evaluate(&pred, &gold)?)
    }
}

/// Trains on `split.train` and scores on the requested portion.
pub fn train_and_score(
    split: &DatasetSplit,
    features: &FeatureConfig,
    forest: &ForestConfig,
    resources: &FeatureResources,
    eval_on: EvalOn,
) -> Result<(TrainedModel, MetricsReport), Error> {
    let model = train_model(&split.train, features, forest, resources)?;
    let portion = match eval_on {
        EvalOn::Dev => &split.dev,
        EvalOn::Train => &split.train,
    };
    let report = model.evaluate(portion, resources)?;
    Ok((model, report))
}
