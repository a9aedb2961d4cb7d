//! Out-of-fold risk scores and model selection by cross-validated AUC.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::boosting::{train_gradient_boosting, BoostingParams, GradientBoosting};
use super::folds::FoldAssignment;
use super::forest::{train_random_forest, ForestParams, RandomForest};
use super::logistic::{train_elastic_net_lr, ElasticNetParams, LogisticModel};
use super::preprocess::{fit_preprocessor, transform, FeatureMatrix};
use crate::cohort::CohortTable;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    ElasticNetLr,
    RandomForest,
    GradientBoosting,
}

impl ModelFamily {
    /// Canonical order, also the tie-break order.
    pub const ALL: [ModelFamily; 3] = [
        ModelFamily::ElasticNetLr,
        ModelFamily::RandomForest,
        ModelFamily::GradientBoosting,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::ElasticNetLr => "elastic_net_lr",
            ModelFamily::RandomForest => "random_forest",
            ModelFamily::GradientBoosting => "gradient_boosting",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            ModelFamily::ElasticNetLr => "lr",
            ModelFamily::RandomForest => "rf",
            ModelFamily::GradientBoosting => "gb",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL
            .into_iter()
            .find(|m| m.as_str() == s || m.short() == s)
            .ok_or_else(|| Error::Config(format!("unknown model family `{s}`")))
    }
}

/// Hyperparameters for every family; only the block matching the family is used.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub elastic_net: ElasticNetParams,
    pub random_forest: ForestParams,
    pub gradient_boosting: BoostingParams,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.elastic_net.validate()?;
        self.random_forest.validate()?;
        self.gradient_boosting.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub params: ModelParams,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(family: ModelFamily, seed: u64) -> Self {
        Self {
            family,
            params: ModelParams::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Logistic(LogisticModel),
    Forest(RandomForest),
    Boosting(GradientBoosting),
}

impl Model {
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        match self {
            Model::Logistic(m) => m.predict_proba(x),
            Model::Forest(m) => m.predict_proba(x),
            Model::Boosting(m) => m.predict_proba(x),
        }
    }
}

pub fn fit_model(x: &FeatureMatrix, y: &[u8], family: ModelFamily, params: &ModelParams, seed: u64) -> Result<Model> {
    Ok(match family {
        ModelFamily::ElasticNetLr => Model::Logistic(train_elastic_net_lr(x, y, &params.elastic_net, seed)?),
        ModelFamily::RandomForest => Model::Forest(train_random_forest(x, y, &params.random_forest, seed)?),
        ModelFamily::GradientBoosting => {
            Model::Boosting(train_gradient_boosting(x, y, &params.gradient_boosting, seed)?)
        }
    })
}

/// Out-of-fold probabilities: for each fold the preprocessor and model are
/// fitted on the complement and applied to the held-out rows.
///
/// Training rows are ordered by `row_keys` before fitting, so permuting the
/// input rows (with keyed folds) permutes the output and nothing else.
pub fn oof_scores(
    view: &CohortTable,
    y: &[u8],
    spec: &ModelSpec,
    folds: &FoldAssignment,
    row_keys: &[u64],
) -> Result<Vec<f64>> {
    let n = view.n_rows();
    if y.len() != n || folds.fold_of.len() != n || row_keys.len() != n {
        return Err(Error::InvalidInput(format!(
            "view has {n} rows but {} labels, {} fold ids, {} keys",
            y.len(),
            folds.fold_of.len(),
            row_keys.len()
        )));
    }
    if folds.fold_of.iter().any(|&f| f >= folds.k) {
        return Err(Error::InvalidInput("fold id out of range".into()));
    }
    spec.params.validate()?;

    let per_fold: Vec<(Vec<usize>, Vec<f64>)> = (0..folds.k)
        .into_par_iter()
        .map(|f| {
            let test = folds.test_rows(f);
            if test.is_empty() {
                return Ok((test, Vec::new()));
            }
            let mut train = folds.train_rows(f);
            train.sort_by_key(|&i| (row_keys[i], i));
            let ytr: Vec<u8> = train.iter().map(|&i| y[i]).collect();
            if !(ytr.contains(&0) && ytr.contains(&1)) {
                return Err(Error::InvalidInput(format!(
                    "training complement of fold {f} lacks both classes"
                )));
            }
            let pre = fit_preprocessor(view, &train)?;
            let xtr = transform(&pre, view, &train)?;
            let xte = transform(&pre, view, &test)?;
            let model = fit_model(&xtr, &ytr, spec.family, &spec.params, derive_seed(spec.seed, &[f as u64]))?;
            Ok((test, model.predict_proba(&xte)))
        })
        .collect::<Result<_>>()?;

    let mut out = vec![f64::NAN; n];
    for (rows, probs) in per_fold {
        for (i, p) in rows.into_iter().zip(probs) {
            out[i] = p;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRecord {
    pub view: String,
    pub family: ModelFamily,
    pub auc: f64,
}

/// Highest AUC; exact ties go to the earlier family in (lr, rf, gb).
pub fn select_best_model(records: &[CvRecord]) -> Option<&CvRecord> {
    let mut sorted: Vec<&CvRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.family);
    sorted
        .into_iter()
        .fold(None, |best: Option<&CvRecord>, r| match best {
            Some(b) if !(r.auc > b.auc) => Some(b),
            _ => Some(r),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(family: ModelFamily, auc: f64) -> CvRecord {
        CvRecord {
            view: "clinical".into(),
            family,
            auc,
        }
    }

    #[test]
    fn highest_auc_wins() {
        let r = [
            rec(ModelFamily::ElasticNetLr, 0.762),
            rec(ModelFamily::RandomForest, 0.783),
            rec(ModelFamily::GradientBoosting, 0.760),
        ];
        assert_eq!(select_best_model(&r).unwrap().family, ModelFamily::RandomForest);
    }

    #[test]
    fn singleton_and_ties() {
        let one = [rec(ModelFamily::GradientBoosting, 0.6)];
        assert_eq!(select_best_model(&one).unwrap().family, ModelFamily::GradientBoosting);
        let tie = [rec(ModelFamily::RandomForest, 0.7), rec(ModelFamily::ElasticNetLr, 0.7)];
        assert_eq!(select_best_model(&tie).unwrap().family, ModelFamily::ElasticNetLr);
        assert!(select_best_model(&[]).is_none());
    }

    #[test]
    fn family_names_round_trip() {
        for m in ModelFamily::ALL {
            assert_eq!(m.as_str().parse::<ModelFamily>().unwrap(), m);
            assert_eq!(m.short().parse::<ModelFamily>().unwrap(), m);
        }
    }
}
