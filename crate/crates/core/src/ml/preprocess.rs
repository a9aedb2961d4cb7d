//! Train-only imputation, standardization and one-hot encoding.

use crate::cohort::{CohortTable, ColumnData};
use crate::error::{Error, Result};
use crate::survival::median;

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    pub feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(values: Vec<f64>, n_rows: usize, feature_names: Vec<String>) -> Result<Self> {
        let n_cols = feature_names.len();
        if values.len() != n_rows * n_cols {
            return Err(Error::InvalidInput(format!(
                "matrix has {} values, expected {n_rows} x {n_cols}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("feature matrix has non-finite entries".into()));
        }
        Ok(Self {
            values,
            n_rows,
            n_cols,
            feature_names,
        })
    }

    /// Build from rows of equal length with generated feature names.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidInput("ragged feature rows".into()));
        }
        let names = (0..p).map(|j| format!("x{j}")).collect();
        Self::new(rows.concat(), rows.len(), names)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            values,
            n_rows: rows.len(),
            n_cols: self.n_cols,
            feature_names: self.feature_names.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnTransform {
    Numeric {
        name: String,
        median: f64,
        mean: f64,
        /// `None` for constant (or entirely missing) columns, which map to 0.
        sd: Option<f64>,
    },
    Categorical {
        name: String,
        mode: String,
        categories: Vec<String>,
    },
}

pub const MISSING_CATEGORY: &str = "missing";

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessor {
    pub columns: Vec<ColumnTransform>,
}

impl Preprocessor {
    pub fn n_features(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match c {
                ColumnTransform::Numeric { .. } => 1,
                ColumnTransform::Categorical { categories, .. } => categories.len(),
            })
            .sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_features());
        for c in &self.columns {
            match c {
                ColumnTransform::Numeric { name, .. } => names.push(name.clone()),
                ColumnTransform::Categorical {
                    name, categories, ..
                } => names.extend(categories.iter().map(|k| format!("{name}={k}"))),
            }
        }
        names
    }
}

fn sd_unbiased(xs: &[f64], mean: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Learn imputation / scaling / encoding from `train_rows` only.
pub fn fit_preprocessor(view: &CohortTable, train_rows: &[usize]) -> Result<Preprocessor> {
    if train_rows.is_empty() {
        return Err(Error::InvalidInput("preprocessor needs training rows".into()));
    }
    let columns = view
        .columns()
        .iter()
        .map(|col| match &col.data {
            ColumnData::Numeric(v) => {
                let xs: Vec<f64> = train_rows.iter().filter_map(|&r| v[r]).collect();
                if xs.is_empty() {
                    return ColumnTransform::Numeric {
                        name: col.name.clone(),
                        median: 0.0,
                        mean: 0.0,
                        sd: None,
                    };
                }
                let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                let sd = sd_unbiased(&xs, mean);
                ColumnTransform::Numeric {
                    name: col.name.clone(),
                    median: median(&xs).expect("non-empty"),
                    mean,
                    sd: (sd > 0.0 && sd.is_finite()).then_some(sd),
                }
            }
            ColumnData::Categorical(v) => {
                let mut categories: Vec<String> = Vec::new();
                let mut counts: Vec<usize> = Vec::new();
                for label in train_rows.iter().filter_map(|&r| v[r].as_ref()) {
                    match categories.iter().position(|c| c == label) {
                        Some(i) => counts[i] += 1,
                        None => {
                            categories.push(label.clone());
                            counts.push(1);
                        }
                    }
                }
                if categories.is_empty() {
                    return ColumnTransform::Categorical {
                        name: col.name.clone(),
                        mode: MISSING_CATEGORY.into(),
                        categories: vec![MISSING_CATEGORY.into()],
                    };
                }
                // first-seen category wins ties
                let best = counts
                    .iter()
                    .enumerate()
                    .fold(0, |best, (i, &c)| if c > counts[best] { i } else { best });
                ColumnTransform::Categorical {
                    name: col.name.clone(),
                    mode: categories[best].clone(),
                    categories,
                }
            }
        })
        .collect();
    Ok(Preprocessor { columns })
}

/// Impute, standardize and one-hot encode `rows` of `view`.
pub fn transform(pre: &Preprocessor, view: &CohortTable, rows: &[usize]) -> Result<FeatureMatrix> {
    if view.n_cols() != pre.columns.len() {
        return Err(Error::InvalidInput(format!(
            "schema mismatch: preprocessor has {} columns, view has {}",
            pre.columns.len(),
            view.n_cols()
        )));
    }
    let p = pre.n_features();
    let mut values = vec![0.0; rows.len() * p];
    let mut offset = 0;
    for (t, col) in pre.columns.iter().zip(view.columns()) {
        match (t, &col.data) {
            (
                ColumnTransform::Numeric {
                    name,
                    median,
                    mean,
                    sd,
                },
                ColumnData::Numeric(v),
            ) if *name == col.name => {
                for (i, &r) in rows.iter().enumerate() {
                    let x = v[r].unwrap_or(*median);
                    values[i * p + offset] = sd.map_or(0.0, |sd| (x - mean) / sd);
                }
                offset += 1;
            }
            (
                ColumnTransform::Categorical {
                    name,
                    mode,
                    categories,
                },
                ColumnData::Categorical(v),
            ) if *name == col.name => {
                for (i, &r) in rows.iter().enumerate() {
                    let label = v[r].as_ref().unwrap_or(mode);
                    if let Some(k) = categories.iter().position(|c| c == label) {
                        values[i * p + offset + k] = 1.0;
                    }
                }
                offset += categories.len();
            }
            _ => {
                return Err(Error::InvalidInput(format!(
                    "schema mismatch at column `{}`",
                    col.name
                )))
            }
        }
    }
    FeatureMatrix::new(values, rows.len(), pre.feature_names())
}
