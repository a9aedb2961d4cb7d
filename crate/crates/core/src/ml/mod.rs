//! Tabular models producing out-of-fold risk scores.

pub mod boosting;
pub mod cv;
pub mod folds;
pub mod forest;
pub mod logistic;
pub mod metrics;
pub mod preprocess;
pub mod tree;

pub use boosting::{train_gradient_boosting, BoostingParams, GradientBoosting};
pub use cv::{fit_model, oof_scores, select_best_model, CvRecord, Model, ModelFamily, ModelParams, ModelSpec};
pub use folds::{stratified_kfold, stratified_kfold_keyed, FoldAssignment};
pub use forest::{train_random_forest, ForestParams, RandomForest};
pub use logistic::{fit_logistic, train_elastic_net_lr, ElasticNetParams, LogisticModel};
pub use metrics::{roc_auc, roc_curve};
pub use preprocess::{fit_preprocessor, transform, ColumnTransform, FeatureMatrix, Preprocessor};
