use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Average ranks (1-based), ties share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j share the mean rank
        let rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = rank;
        }
        i = j;
    }
    ranks
}

/// Rank transform `rank(x_i) / (n + 1)` onto the open unit interval.
pub fn pseudo_observations(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "pseudo-observations need at least 2 values, got {}",
            x.len()
        )));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    let denom = (x.len() + 1) as f64;
    Ok(average_ranks(x).into_iter().map(|r| r / denom).collect())
}

/// Bivariate sample on the open unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoSample {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl PseudoSample {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::InvalidInput(format!(
                "margin lengths differ: {} vs {}",
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(&v).any(|&c| !(c > 0.0 && c < 1.0)) {
            return Err(Error::InvalidInput(
                "pseudo-observations must lie strictly inside (0, 1)".into(),
            ));
        }
        Ok(Self { u, v })
    }

    /// Rank-transform two score vectors.
    pub fn from_scores(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "score lengths differ: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        Self::new(pseudo_observations(x)?, pseudo_observations(y)?)
    }

    /// Re-rank both margins, e.g. after simulation from a copula.
    pub fn reranked(&self) -> Result<Self> {
        Self::from_scores(&self.u, &self.v)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}
