//! Copula fusion of clinical and genomic risk scores.
//!
//! The crate covers cohort loading and endpoint derivation, out-of-fold risk
//! scores from tabular models, parametric copula fitting by Kendall's tau
//! inversion, Cramér–von Mises goodness of fit with a parametric bootstrap,
//! and Kaplan–Meier summaries of median-split joint risk strata.

pub mod cohort;
pub mod copula;
pub mod error;
pub mod gof;
pub mod ml;
pub mod pipeline;
pub mod plot;
pub mod report;
pub mod rng;
pub mod survival;
pub mod synth;

pub use error::{Error, Result, Stage};
