//! Elastic-net penalized logistic regression.
//!
//! Minimizes `mean logistic loss + lambda * (alpha |w|_1 + (1 - alpha) |w|_2^2 / 2)`
//! with an unpenalized intercept. Each outer iteration forms the weighted
//! least-squares approximation of the loss at the current iterate, solves it
//! by cyclic coordinate descent with soft thresholding, then backtracks along
//! the resulting direction until the full objective does not increase.

use serde::{Deserialize, Serialize};

use super::folds::stratified_kfold;
use super::metrics::roc_auc;
use super::preprocess::FeatureMatrix;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, TAG_INNER_CV};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElasticNetParams {
    /// l1 / l2 mix in [0, 1].
    pub alpha: f64,
    /// Fixed penalty; `None` selects it from a log grid by inner CV.
    pub lambda: Option<f64>,
    pub n_lambdas: usize,
    /// Smallest grid value as a fraction of lambda_max.
    pub lambda_min_ratio: f64,
    pub inner_folds: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ElasticNetParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            lambda: None,
            n_lambdas: 10,
            lambda_min_ratio: 1e-3,
            inner_folds: 3,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

impl ElasticNetParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha {} not in [0, 1]", self.alpha)));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!("lambda {l} must be >= 0")));
            }
        }
        if self.n_lambdas == 0 || !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return Err(Error::InvalidParameter("bad lambda grid".into()));
        }
        if self.inner_folds < 2 || self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("bad solver settings".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub lambda: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.n_rows()).map(|i| sigmoid(self.decision(x.row(i)))).collect()
    }
}

struct Problem<'a> {
    x: &'a FeatureMatrix,
    y: &'a [f64],
    lambda: f64,
    alpha: f64,
}

impl Problem<'_> {
    fn n(&self) -> f64 {
        self.x.n_rows() as f64
    }

    fn eta(&self, b0: f64, w: &[f64]) -> Vec<f64> {
        (0..self.x.n_rows())
            .map(|i| b0 + self.x.row(i).iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    fn objective(&self, eta: &[f64], w: &[f64]) -> f64 {
        let loss: f64 = eta
            .iter()
            .zip(self.y)
            .map(|(&e, &y)| softplus(e) - y * e)
            .sum::<f64>()
            / self.n();
        let l1: f64 = w.iter().map(|v| v.abs()).sum();
        let l2: f64 = w.iter().map(|v| v * v).sum();
        loss + self.lambda * (self.alpha * l1 + (1.0 - self.alpha) * l2 / 2.0)
    }
}

fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

const MAX_SWEEPS: usize = 1000;
const CD_TOL: f64 = 1e-7;

fn solve(
    prob: &Problem<'_>,
    mut b0: f64,
    mut w: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> LogisticModel {
    let n = prob.x.n_rows();
    let p = prob.x.n_cols();
    let nf = prob.n();
    let mut eta = prob.eta(b0, &w);
    let mut obj = prob.objective(&eta, &w);
    let mut converged = false;
    let mut iterations = 0;
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|j| (0..n).map(|i| prob.x.get(i, j)).collect())
        .collect();

    while iterations < max_iter {
        iterations += 1;
        // quadratic approximation at the current iterate
        let mut wt = vec![0.0; n];
        let mut z = vec![0.0; n];
        for i in 0..n {
            let pi = sigmoid(eta[i]);
            let h = (pi * (1.0 - pi)).max(1e-5);
            wt[i] = h;
            z[i] = eta[i] + (prob.y[i] - pi) / h;
        }
        let mut nb0 = b0;
        let mut nw = w.clone();
        let mut resid: Vec<f64> = (0..n).map(|i| z[i] - eta[i]).collect();
        let col_scale: Vec<f64> = cols
            .iter()
            .map(|c| c.iter().zip(&wt).map(|(x, h)| h * x * x).sum::<f64>() / nf)
            .collect();
        let wsum: f64 = wt.iter().sum();
        let all: Vec<usize> = (0..p).filter(|&j| col_scale[j] > 0.0).collect();
        // full sweeps alternate with sweeps over the nonzero set until a full
        // sweep changes nothing
        let mut full = true;
        for _sweep in 0..MAX_SWEEPS {
            let active: Vec<usize> = if full {
                all.clone()
            } else {
                all.iter().copied().filter(|&j| nw[j] != 0.0).collect()
            };
            let mut max_delta: f64 = 0.0;
            let d0 = wt.iter().zip(&resid).map(|(h, r)| h * r).sum::<f64>() / wsum;
            if d0 != 0.0 {
                nb0 += d0;
                resid.iter_mut().for_each(|r| *r -= d0);
                max_delta = max_delta.max(d0.abs());
            }
            for &j in &active {
                let col = &cols[j];
                let grad = col
                    .iter()
                    .zip(&wt)
                    .zip(&resid)
                    .map(|((x, h), r)| h * x * r)
                    .sum::<f64>()
                    / nf;
                let updated = soft_threshold(grad + col_scale[j] * nw[j], prob.lambda * prob.alpha)
                    / (col_scale[j] + prob.lambda * (1.0 - prob.alpha));
                let delta = updated - nw[j];
                if delta != 0.0 {
                    for (r, x) in resid.iter_mut().zip(col) {
                        *r -= delta * x;
                    }
                    nw[j] = updated;
                    max_delta = max_delta.max(delta.abs() * col_scale[j].sqrt());
                }
            }
            let done = max_delta < CD_TOL;
            if done && full {
                break;
            }
            full = done;
        }

        // backtracking on the full objective
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cb0 = b0 + step * (nb0 - b0);
            let cw: Vec<f64> = w.iter().zip(&nw).map(|(a, b)| a + step * (b - a)).collect();
            let ceta = prob.eta(cb0, &cw);
            let cobj = prob.objective(&ceta, &cw);
            if cobj <= obj {
                accepted = Some((cb0, cw, ceta, cobj));
                break;
            }
            step *= 0.5;
        }
        let Some((cb0, cw, ceta, cobj)) = accepted else {
            converged = true;
            break;
        };
        let rel = (obj - cobj) / obj.abs().max(1e-300);
        b0 = cb0;
        w = cw;
        eta = ceta;
        obj = cobj;
        if rel < tol || obj < 1e-12 {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("elastic-net solver stopped after {iterations} iterations without converging");
    }
    LogisticModel {
        intercept: b0,
        weights: w,
        lambda: prob.lambda,
        alpha: prob.alpha,
        iterations,
        converged,
    }
}

pub(crate) fn check_xy(x: &FeatureMatrix, y: &[u8]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if x.n_rows() == 0 {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if y.iter().any(|&l| l > 1) {
        return Err(Error::InvalidInput("labels must be 0/1".into()));
    }
    Ok(())
}

pub(crate) fn prevalence_logit(y: &[u8]) -> f64 {
    let prev = y.iter().map(|&l| f64::from(l)).sum::<f64>() / y.len() as f64;
    let prev = prev.clamp(1e-12, 1.0 - 1e-12);
    (prev / (1.0 - prev)).ln()
}

/// Fit at a fixed penalty.
pub fn fit_logistic(x: &FeatureMatrix, y: &[u8], lambda: f64, params: &ElasticNetParams) -> Result<LogisticModel> {
    check_xy(x, y)?;
    params.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda {lambda} must be >= 0")));
    }
    let yf: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let prob = Problem {
        x,
        y: &yf,
        lambda,
        alpha: params.alpha,
    };
    Ok(solve(
        &prob,
        prevalence_logit(y),
        vec![0.0; x.n_cols()],
        params.tol,
        params.max_iter,
    ))
}

/// Smallest penalty at which every weight is zero, on a log grid downwards.
pub fn lambda_grid(x: &FeatureMatrix, y: &[u8], params: &ElasticNetParams) -> Vec<f64> {
    let n = x.n_rows() as f64;
    let ybar = y.iter().map(|&l| f64::from(l)).sum::<f64>() / n;
    let max_grad = (0..x.n_cols())
        .map(|j| {
            ((0..x.n_rows())
                .map(|i| x.get(i, j) * (f64::from(y[i]) - ybar))
                .sum::<f64>()
                / n)
                .abs()
        })
        .fold(0.0, f64::max);
    let lambda_max = (max_grad / params.alpha.max(1e-3)).max(1e-6);
    let k = params.n_lambdas;
    (0..k)
        .map(|i| {
            let frac = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
            lambda_max * params.lambda_min_ratio.powf(frac)
        })
        .collect()
}

/// Fit, choosing lambda by inner stratified CV (pooled AUC) when not fixed.
pub fn train_elastic_net_lr(
    x: &FeatureMatrix,
    y: &[u8],
    params: &ElasticNetParams,
    seed: u64,
) -> Result<LogisticModel> {
    check_xy(x, y)?;
    params.validate()?;
    if let Some(lambda) = params.lambda {
        return fit_logistic(x, y, lambda, params);
    }
    let grid = lambda_grid(x, y, params);
    let lambda = select_lambda(x, y, &grid, params, seed).unwrap_or(grid[grid.len() / 2]);
    fit_logistic(x, y, lambda, params)
}

fn select_lambda(
    x: &FeatureMatrix,
    y: &[u8],
    grid: &[f64],
    params: &ElasticNetParams,
    seed: u64,
) -> Option<f64> {
    let folds = stratified_kfold(y, params.inner_folds, derive_seed(seed, &[TAG_INNER_CV])).ok()?;
    let mut oof = vec![vec![0.0; y.len()]; grid.len()];
    for f in 0..folds.k {
        let train = folds.train_rows(f);
        let test = folds.test_rows(f);
        let xtr = x.select_rows(&train);
        let ytr: Vec<u8> = train.iter().map(|&i| y[i]).collect();
        if ytr.iter().all(|&l| l == ytr[0]) {
            return None;
        }
        let xte = x.select_rows(&test);
        let yf: Vec<f64> = ytr.iter().map(|&l| f64::from(l)).collect();
        // warm start along the path
        let (mut b0, mut w) = (prevalence_logit(&ytr), vec![0.0; x.n_cols()]);
        for (g, &lambda) in grid.iter().enumerate() {
            let prob = Problem {
                x: &xtr,
                y: &yf,
                lambda,
                alpha: params.alpha,
            };
            let m = solve(&prob, b0, w, params.tol, params.max_iter);
            for (k, &i) in test.iter().enumerate() {
                oof[g][i] = m.decision(xte.row(k));
            }
            b0 = m.intercept;
            w = m.weights;
        }
    }
    let mut best: Option<(f64, f64)> = None;
    for (g, &lambda) in grid.iter().enumerate() {
        let auc = roc_auc(&oof[g], y).ok()?;
        // grid runs from large to small lambda; strict > keeps the larger on ties
        if best.is_none_or(|(a, _)| auc > a) {
            best = Some((auc, lambda));
        }
    }
    best.map(|(_, l)| l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huge_penalty_gives_prevalence() {
        let x = FeatureMatrix::from_rows(&[
            vec![1.0, -0.5],
            vec![-1.0, 0.3],
            vec![0.5, 2.0],
            vec![2.0, -1.0],
            vec![-0.2, 0.1],
        ])
        .unwrap();
        let y = [1, 0, 1, 0, 0];
        let m = fit_logistic(&x, &y, 1e6, &ElasticNetParams::default()).unwrap();
        assert!(m.weights.iter().all(|&w| w == 0.0));
        for p in m.predict_proba(&x) {
            assert!((p - 0.4).abs() < 1e-9, "{p}");
        }
    }

    #[test]
    fn separable_two_points() {
        let x = FeatureMatrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
        let y = [0, 1];
        let m = fit_logistic(&x, &y, 0.0, &ElasticNetParams::default()).unwrap();
        let p = m.predict_proba(&x);
        assert!(p[1] > p[0]);
        assert_eq!(roc_auc(&p, &y).unwrap(), 1.0);
    }

    #[test]
    fn objective_decreases_with_ridge() {
        let x = FeatureMatrix::from_rows(&[
            vec![0.1],
            vec![0.4],
            vec![-0.3],
            vec![1.2],
            vec![-1.1],
            vec![0.7],
        ])
        .unwrap();
        let y = [0, 1, 0, 1, 0, 0];
        let params = ElasticNetParams {
            alpha: 0.0,
            ..Default::default()
        };
        let m = fit_logistic(&x, &y, 0.1, &params).unwrap();
        assert!(m.converged);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn grid_is_decreasing() {
        let x = FeatureMatrix::from_rows(&[vec![1.0], vec![-1.0], vec![0.5], vec![-0.5]]).unwrap();
        let g = lambda_grid(&x, &[1, 0, 1, 0], &ElasticNetParams::default());
        assert_eq!(g.len(), 10);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
        // lambda_max zeroes the weights
        let m = fit_logistic(&x, &[1, 0, 1, 0], g[0] * 1.0001, &ElasticNetParams::default()).unwrap();
        assert_eq!(m.weights[0], 0.0);
    }

    #[test]
    fn rejects_bad_alpha() {
        let x = FeatureMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        let params = ElasticNetParams {
            alpha: 1.5,
            ..Default::default()
        };
        assert!(train_elastic_net_lr(&x, &[0, 1], &params, 0).is_err());
    }
}
