//! Empirical-copula Cramér–von Mises statistic and its parametric bootstrap.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::family::fit_is_bounded;
use crate::copula::{fit, kendall_tau, sample, CopulaModel, Family, PseudoSample};
use crate::error::{Error, Result};
use crate::rng::{stream, TAG_BOOTSTRAP};

/// `C_n(u, v) = #{i : U_i <= u, V_i <= v} / n`.
pub fn empirical_copula(sample: &PseudoSample, u: f64, v: f64) -> f64 {
    if sample.is_empty() {
        return 0.0;
    }
    let hits = sample
        .u
        .iter()
        .zip(&sample.v)
        .filter(|(&a, &b)| a <= u && b <= v)
        .count();
    hits as f64 / sample.len() as f64
}

/// Empirical copula evaluated at every sample point, in O(n log n): sweep in
/// increasing `u` and count dominated `v` ranks with a Fenwick tree.
pub fn empirical_copula_at_points(sample: &PseudoSample) -> Vec<f64> {
    let n = sample.len();
    if n == 0 {
        return Vec::new();
    }
    // compress v to ranks; equal values share the largest rank so `<=` holds
    let mut v_sorted: Vec<f64> = sample.v.clone();
    v_sorted.sort_by(f64::total_cmp);
    let v_rank = |x: f64| v_sorted.partition_point(|&y| y <= x); // 1..=n

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sample.u[a].total_cmp(&sample.u[b]));

    let mut tree = vec![0u32; n + 1];
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        // insert the whole block of equal u before querying it
        let mut j = i;
        while j < n && sample.u[order[j]] == sample.u[order[i]] {
            let mut k = v_rank(sample.v[order[j]]);
            while k <= n {
                tree[k] += 1;
                k += k & k.wrapping_neg();
            }
            j += 1;
        }
        for &idx in &order[i..j] {
            let mut k = v_rank(sample.v[idx]);
            let mut count = 0u32;
            while k > 0 {
                count += tree[k];
                k -= k & k.wrapping_neg();
            }
            out[idx] = f64::from(count) / n as f64;
        }
        i = j;
    }
    out
}

/// `S = (1/n) sum_i [C_n(U_i, V_i) - C(U_i, V_i)]^2`.
pub fn cvm_statistic(sample: &PseudoSample, model: &CopulaModel) -> Result<f64> {
    if sample.len() < 2 {
        return Err(Error::InvalidInput("CvM statistic needs n >= 2".into()));
    }
    model.family.validate(model.param)?;
    let emp = empirical_copula_at_points(sample);
    let sum: f64 = emp
        .iter()
        .zip(sample.u.iter().zip(&sample.v))
        .map(|(&c, (&u, &v))| (c - model.cdf(u, v)).powi(2))
        .sum();
    Ok(sum / sample.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    #[serde(rename = "B")]
    pub replicates: usize,
    /// Replicate sample size; `None` uses the observed sample size.
    pub m: Option<usize>,
    pub seed: u64,
    /// Re-estimate the parameter on every replicate.
    pub refit: bool,
    pub keep_replicates: bool,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            replicates: 1000,
            m: None,
            seed: 20_240_601,
            refit: true,
            keep_replicates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub family: Family,
    pub statistic: f64,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub m: usize,
    pub p_value: f64,
    pub model: CopulaModel,
    /// Tau inversion hit the family's parameter bound.
    #[serde(default)]
    pub bounded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicate_statistics: Option<Vec<f64>>,
}

/// `(1 + #{S_b >= S}) / (B + 1)`.
pub fn bootstrap_p_value(observed: f64, replicates: &[f64]) -> f64 {
    let exceed = replicates.iter().filter(|&&s| s >= observed).count();
    (1 + exceed) as f64 / (replicates.len() + 1) as f64
}

/// Largest |tau| used when refitting a replicate: halfway between perfect
/// dependence and the largest non-degenerate tau of an `m`-point sample.
fn replicate_tau_cap(m: usize) -> f64 {
    let pairs = (m * (m - 1)) as f64;
    1.0 - 2.0 / pairs
}

/// Fit `family` by tau inversion, compute S and calibrate it by simulating
/// from the fitted copula.
pub fn parametric_bootstrap(
    sample: &PseudoSample,
    family: Family,
    opts: &BootstrapOptions,
) -> Result<GofResult> {
    if opts.replicates == 0 {
        return Err(Error::InvalidParameter("bootstrap needs B >= 1".into()));
    }
    let m = opts.m.unwrap_or(sample.len());
    if m < 2 {
        return Err(Error::InvalidParameter("replicate size m must be >= 2".into()));
    }
    let tau = kendall_tau(&sample.u, &sample.v)?;
    let model = fit(family, tau)?;
    let statistic = cvm_statistic(sample, &model)?;

    let stats: Vec<f64> = (0..opts.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(opts.seed, &[TAG_BOOTSTRAP, family.stream_id(), b as u64]);
            let draw = sample::sample(&model, m, &mut rng)?.reranked()?;
            let rep_model = if opts.refit {
                let cap = replicate_tau_cap(m);
                fit(family, kendall_tau(&draw.u, &draw.v)?.clamp(-cap, cap))?
            } else {
                model
            };
            cvm_statistic(&draw, &rep_model)
        })
        .collect::<Result<_>>()?;

    Ok(GofResult {
        family,
        statistic,
        replicates: opts.replicates,
        m,
        p_value: bootstrap_p_value(statistic, &stats),
        model,
        bounded: fit_is_bounded(family, tau),
        replicate_statistics: opts.keep_replicates.then_some(stats),
    })
}

/// Largest p-value; ties by smaller statistic, then family order.
pub fn select_best_copula(results: &[GofResult]) -> Option<Family> {
    results
        .iter()
        .min_by(|a, b| {
            b.p_value
                .total_cmp(&a.p_value)
                .then(a.statistic.total_cmp(&b.statistic))
                .then(a.family.cmp(&b.family))
        })
        .map(|r| r.family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ps(pairs: &[(f64, f64)]) -> PseudoSample {
        PseudoSample::new(
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn empirical_copula_by_hand() {
        let s = ps(&[(0.25, 0.5), (0.5, 0.25), (0.75, 0.75)]);
        assert_abs_diff_eq!(empirical_copula(&s, 0.5, 0.5), 2.0 / 3.0);
        assert_eq!(empirical_copula(&s, 1.0, 1.0), 1.0);
        assert_eq!(empirical_copula(&s, 0.1, 0.9), 0.0);
    }

    #[test]
    fn fenwick_matches_counting_with_ties() {
        let s = ps(&[(0.5, 0.5), (0.5, 0.25), (0.25, 0.5), (0.75, 0.25), (0.25, 0.25)]);
        let fast = empirical_copula_at_points(&s);
        for i in 0..s.len() {
            assert_eq!(fast[i], empirical_copula(&s, s.u[i], s.v[i]));
        }
    }

    #[test]
    fn cvm_two_points_vs_independence() {
        let s = ps(&[(1.0 / 3.0, 1.0 / 3.0), (2.0 / 3.0, 2.0 / 3.0)]);
        let indep = CopulaModel::new(Family::Gumbel, 1.0).unwrap();
        let expected = 0.5 * ((0.5f64 - 1.0 / 9.0).powi(2) + (1.0f64 - 4.0 / 9.0).powi(2));
        assert_abs_diff_eq!(cvm_statistic(&s, &indep).unwrap(), expected, epsilon = 1e-15);
    }

    #[test]
    fn p_value_formula() {
        assert_eq!(bootstrap_p_value(0.1, &[0.2, 0.3, 0.5]), 1.0);
        assert_eq!(bootstrap_p_value(1.0, &[0.2, 0.3, 0.5]), 0.25);
        assert_eq!(bootstrap_p_value(0.3, &[0.2, 0.3, 0.5]), 0.75);
    }

    #[test]
    fn rejects_zero_replicates() {
        let s = ps(&[(0.2, 0.3), (0.5, 0.6), (0.8, 0.7)]);
        let opts = BootstrapOptions {
            replicates: 0,
            ..Default::default()
        };
        assert!(parametric_bootstrap(&s, Family::Gaussian, &opts).is_err());
    }

    #[test]
    fn bootstrap_is_reproducible_and_in_range() {
        let m = CopulaModel::new(Family::Gaussian, 0.5).unwrap();
        let s = sample(&m, 200, &mut crate::rng::stream(9, &[]))
            .unwrap()
            .reranked()
            .unwrap();
        let opts = BootstrapOptions {
            replicates: 50,
            seed: 4,
            ..Default::default()
        };
        for fam in Family::ALL {
            let a = parametric_bootstrap(&s, fam, &opts).unwrap();
            let b = parametric_bootstrap(&s, fam, &opts).unwrap();
            assert_eq!(a.p_value.to_bits(), b.p_value.to_bits());
            assert!(a.p_value >= 1.0 / 51.0 && a.p_value <= 1.0);
        }
    }

    #[test]
    fn clayton_negative_tau_is_flagged() {
        let s = ps(&[(0.2, 0.8), (0.4, 0.6), (0.6, 0.4), (0.8, 0.2)]);
        let opts = BootstrapOptions {
            replicates: 10,
            ..Default::default()
        };
        let r = parametric_bootstrap(&s, Family::Clayton, &opts).unwrap();
        assert!(r.bounded);
        assert_eq!(r.model.param, 1e-6);
    }

    fn result(family: Family, statistic: f64, p_value: f64) -> GofResult {
        GofResult {
            family,
            statistic,
            replicates: 1000,
            m: 100,
            p_value,
            model: CopulaModel::new(family, if family == Family::Gaussian { 0.5 } else { 1.5 })
                .unwrap(),
            bounded: false,
            replicate_statistics: None,
        }
    }

    #[test]
    fn selection_rules() {
        let rs = [
            result(Family::Gaussian, 2.4e-5, 0.997),
            result(Family::Clayton, 1.93e-4, 0.176),
            result(Family::Gumbel, 9.81e-5, 0.413),
        ];
        assert_eq!(select_best_copula(&rs), Some(Family::Gaussian));
        assert_eq!(select_best_copula(&rs[1..2]), Some(Family::Clayton));
        let tie = [
            result(Family::Clayton, 2e-4, 0.5),
            result(Family::Gumbel, 1e-4, 0.5),
        ];
        assert_eq!(select_best_copula(&tie), Some(Family::Gumbel));
        let full_tie = [
            result(Family::Gumbel, 1e-4, 0.5),
            result(Family::Clayton, 1e-4, 0.5),
        ];
        assert_eq!(select_best_copula(&full_tie), Some(Family::Clayton));
        assert_eq!(select_best_copula(&[]), None);
    }

    #[test]
    fn json_shape() {
        let j = serde_json::to_value(result(Family::Gaussian, 1e-4, 0.9)).unwrap();
        for key in ["family", "statistic", "B", "m", "p_value"] {
            assert!(j.get(key).is_some(), "{key}");
        }
    }
}
