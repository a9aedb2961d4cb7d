use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::normal::{bvn_lower, norm_quantile};
use crate::error::{Error, Result};

/// Lower bound applied to the Clayton parameter when the sample tau is not
/// positive.
pub const CLAYTON_MIN_THETA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Clayton,
    Gumbel,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Gaussian, Family::Clayton, Family::Gumbel];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
        }
    }

    pub(crate) fn stream_id(self) -> u64 {
        match self {
            Family::Gaussian => 1,
            Family::Clayton => 2,
            Family::Gumbel => 3,
        }
    }

    /// Kendall's tau implied by a parameter value.
    pub fn tau_of(self, param: f64) -> f64 {
        match self {
            Family::Gaussian => FRAC_2_PI * param.asin(),
            Family::Clayton => param / (param + 2.0),
            Family::Gumbel => 1.0 - 1.0 / param,
        }
    }

    pub fn validate(self, param: f64) -> Result<()> {
        let ok = match self {
            Family::Gaussian => param.abs() < 1.0,
            Family::Clayton => param > 0.0 && param.is_finite(),
            Family::Gumbel => param >= 1.0 && param.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{} parameter {param} out of range",
                self.as_str()
            )))
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "clayton" => Ok(Family::Clayton),
            "gumbel" => Ok(Family::Gumbel),
            other => Err(Error::Config(format!("unknown copula family `{other}`"))),
        }
    }
}

/// A fitted one-parameter copula with its implied dependence summaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaModel {
    pub family: Family,
    /// rho for Gaussian, theta for Clayton / Gumbel.
    pub param: f64,
    pub tau: f64,
    #[serde(rename = "lambda_L")]
    pub lambda_l: f64,
    #[serde(rename = "lambda_U")]
    pub lambda_u: f64,
}

impl CopulaModel {
    pub fn new(family: Family, param: f64) -> Result<Self> {
        family.validate(param)?;
        let (lambda_l, lambda_u) = tail_coefficients(family, param);
        Ok(Self {
            family,
            param,
            tau: family.tau_of(param),
            lambda_l,
            lambda_u,
        })
    }

    /// Copula CDF. Arguments are clamped to `[0, 1]`; boundaries use exact
    /// limits.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let v = v.clamp(0.0, 1.0);
        if u == 0.0 || v == 0.0 {
            return 0.0;
        }
        if u == 1.0 {
            return v;
        }
        if v == 1.0 {
            return u;
        }
        let c = match self.family {
            Family::Gaussian => bvn_lower(norm_quantile(u), norm_quantile(v), self.param),
            Family::Clayton => clayton_cdf(u, v, self.param),
            Family::Gumbel => gumbel_cdf(u, v, self.param),
        };
        c.clamp((u + v - 1.0).max(0.0), u.min(v))
    }
}

fn tail_coefficients(family: Family, param: f64) -> (f64, f64) {
    match family {
        Family::Gaussian => (0.0, 0.0),
        Family::Clayton => (2f64.powf(-1.0 / param), 0.0),
        Family::Gumbel => (0.0, 2.0 - 2f64.powf(1.0 / param)),
    }
}

/// `(lambda_L, lambda_U)` for a fitted model.
pub fn tail_dependence(model: &CopulaModel) -> (f64, f64) {
    tail_coefficients(model.family, model.param)
}

fn clayton_cdf(u: f64, v: f64, theta: f64) -> f64 {
    // (u^-t + v^-t - 1)^(-1/t), written with expm1/ln_1p so tiny theta stays accurate
    let s = (-theta * u.ln()).exp_m1() + (-theta * v.ln()).exp_m1();
    (-(s.ln_1p()) / theta).exp()
}

fn gumbel_cdf(u: f64, v: f64, theta: f64) -> f64 {
    let a = (-u.ln()).powf(theta);
    let b = (-v.ln()).powf(theta);
    (-(a + b).powf(1.0 / theta)).exp()
}

pub fn fit_gaussian(tau: f64) -> Result<CopulaModel> {
    if !(tau.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gaussian fit needs |tau| < 1, got {tau}"
        )));
    }
    CopulaModel::new(Family::Gaussian, (PI * tau / 2.0).sin())
}

pub fn fit_clayton(tau: f64) -> Result<CopulaModel> {
    if !(tau < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "clayton fit needs tau < 1, got {tau}"
        )));
    }
    let theta = if tau <= 0.0 {
        CLAYTON_MIN_THETA
    } else {
        (2.0 * tau / (1.0 - tau)).max(CLAYTON_MIN_THETA)
    };
    CopulaModel::new(Family::Clayton, theta)
}

pub fn fit_gumbel(tau: f64) -> Result<CopulaModel> {
    if !(tau < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gumbel fit needs tau < 1, got {tau}"
        )));
    }
    CopulaModel::new(Family::Gumbel, (1.0 / (1.0 - tau)).max(1.0))
}

/// Kendall-tau inversion for any family.
pub fn fit(family: Family, tau: f64) -> Result<CopulaModel> {
    match family {
        Family::Gaussian => fit_gaussian(tau),
        Family::Clayton => fit_clayton(tau),
        Family::Gumbel => fit_gumbel(tau),
    }
}

/// True when tau-inversion hit the family's parameter bound.
pub fn fit_is_bounded(family: Family, tau: f64) -> bool {
    match family {
        Family::Gaussian => false,
        Family::Clayton | Family::Gumbel => tau <= 0.0,
    }
}
