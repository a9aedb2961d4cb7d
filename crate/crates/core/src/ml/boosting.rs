//! Gradient boosting on the log-odds with Newton leaf values.

use serde::{Deserialize, Serialize};

use super::logistic::{check_xy, prevalence_logit, sigmoid};
use super::preprocess::FeatureMatrix;
use super::tree::{grow_newton_tree, ColumnIndex, GrowParams, Tree};
use crate::error::{Error, Result};
use crate::rng::{stream, TAG_MODEL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostingParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for BoostingParams {
    fn default() -> Self {
        Self {
            n_rounds: 200,
            learning_rate: 0.1,
            max_depth: 3,
            min_leaf: 1,
        }
    }
}

impl BoostingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate {} must be > 0",
                self.learning_rate
            )));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidParameter("min_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientBoosting {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl GradientBoosting {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.init
            + self.learning_rate * self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.n_rows()).map(|i| sigmoid(self.decision(x.row(i)))).collect()
    }
}

/// Mean logistic loss of log-odds `f` against labels `y`.
pub fn log_loss(f: &[f64], y: &[u8]) -> f64 {
    f.iter()
        .zip(y)
        .map(|(&z, &l)| {
            let sp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            sp - f64::from(l) * z
        })
        .sum::<f64>()
        / f.len() as f64
}

/// Boosted model plus the training loss before round 1 and after each round.
pub fn train_gradient_boosting_traced(
    x: &FeatureMatrix,
    y: &[u8],
    params: &BoostingParams,
    seed: u64,
) -> Result<(GradientBoosting, Vec<f64>)> {
    check_xy(x, y)?;
    params.validate()?;
    let n = x.n_rows();
    let init = prevalence_logit(y);
    let mut f = vec![init; n];
    let mut trace = vec![log_loss(&f, y)];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let grow = GrowParams {
        max_depth: Some(params.max_depth),
        min_leaf: params.min_leaf,
        mtry: None,
    };
    // all features are scanned, so the stream is never drawn from
    let mut rng = stream(seed, &[TAG_MODEL]);
    let index = ColumnIndex::new(x);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for _ in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(f[i]);
            grad[i] = f64::from(y[i]) - p;
            hess[i] = p * (1.0 - p);
        }
        let tree = grow_newton_tree(&index, &grad, &hess, (0..n).collect(), grow, &mut rng);
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += params.learning_rate * tree.predict_row(x.row(i));
        }
        trees.push(tree);
        trace.push(log_loss(&f, y));
    }
    Ok((
        GradientBoosting {
            init,
            learning_rate: params.learning_rate,
            trees,
        },
        trace,
    ))
}

pub fn train_gradient_boosting(
    x: &FeatureMatrix,
    y: &[u8],
    params: &BoostingParams,
    seed: u64,
) -> Result<GradientBoosting> {
    train_gradient_boosting_traced(x, y, params, seed).map(|(m, _)| m)
}
