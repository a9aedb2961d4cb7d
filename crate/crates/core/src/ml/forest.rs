//! Random forest of Gini CART trees.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logistic::check_xy;
use super::preprocess::FeatureMatrix;
use super::tree::{grow_classification_tree, ColumnIndex, GrowParams, Tree};
use crate::error::{Error, Result};
use crate::rng::{stream, TAG_MODEL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or hit `min_leaf`.
    pub max_depth: Option<usize>,
    /// Features tried per split; `None` uses ceil(sqrt(p)).
    pub mtry: Option<usize>,
    pub min_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 300,
            max_depth: None,
            mtry: None,
            min_leaf: 5,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("forest needs at least one tree".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidParameter("min_leaf must be >= 1".into()));
        }
        if self.mtry == Some(0) {
            return Err(Error::InvalidParameter("mtry must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
}

impl RandomForest {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        s / self.trees.len() as f64
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.n_rows()).map(|i| self.predict_row(x.row(i))).collect()
    }
}

pub fn default_mtry(p: usize) -> usize {
    ((p as f64).sqrt().ceil() as usize).max(1)
}

/// Each tree draws its bootstrap rows and split features from its own stream
/// `(seed, TAG_MODEL, tree index)`.
pub fn train_random_forest(
    x: &FeatureMatrix,
    y: &[u8],
    params: &ForestParams,
    seed: u64,
) -> Result<RandomForest> {
    check_xy(x, y)?;
    params.validate()?;
    let n = x.n_rows();
    let yf: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let grow = GrowParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        mtry: Some(params.mtry.unwrap_or_else(|| default_mtry(x.n_cols()))),
    };
    let index = ColumnIndex::new(x);
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, &[TAG_MODEL, t as u64]);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grow_classification_tree(&index, &yf, rows, grow, &mut rng)
        })
        .collect();
    Ok(RandomForest { trees })
}
