//! Exact samplers for the three families.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::family::{CopulaModel, Family};
use super::normal::norm_cdf;
use super::pseudo::PseudoSample;
use crate::error::{Error, Result};

const ROOT_LO: f64 = 1e-12;
const ROOT_HI: f64 = 1.0 - 1e-12;
const ROOT_TOL: f64 = 1e-12;

/// Uniform draw on the open interval (0, 1).
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

/// Keep simulated coordinates strictly inside the unit square.
fn interior(x: f64) -> f64 {
    x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

pub fn sample<R: Rng + ?Sized>(model: &CopulaModel, n: usize, rng: &mut R) -> Result<PseudoSample> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be positive".into()));
    }
    model.family.validate(model.param)?;
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        let (a, b) = match model.family {
            Family::Gaussian => gaussian_pair(model.param, rng),
            Family::Clayton => clayton_pair(model.param, rng),
            Family::Gumbel => gumbel_pair(model.param, rng),
        };
        u.push(interior(a));
        v.push(interior(b));
    }
    PseudoSample::new(u, v)
}

fn gaussian_pair<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> (f64, f64) {
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    let w = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
    (norm_cdf(z1), norm_cdf(w))
}

/// Conditional inversion: V = [U^-t (W^(-t/(1+t)) - 1) + 1]^(-1/t).
fn clayton_pair<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> (f64, f64) {
    let u = open_unit(rng);
    let w = open_unit(rng);
    let a = (-theta / (1.0 + theta) * w.ln()).exp_m1();
    let s = (-theta * u.ln()).exp() * a;
    (u, (-(s.ln_1p()) / theta).exp())
}

/// Genest–Rivest Algorithm I for the Gumbel generator phi(t) = (-ln t)^theta.
fn gumbel_pair<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> (f64, f64) {
    let s = open_unit(rng);
    let w = open_unit(rng);
    let t = gumbel_kendall_inverse(w, theta);
    let phi_t = (-t.ln()).powf(theta);
    let inv = |x: f64| (-x.powf(1.0 / theta)).exp();
    (inv(s * phi_t), inv((1.0 - s) * phi_t))
}

/// Kendall distribution K(t) = t - phi(t)/phi'(t) = t (1 - ln t / theta).
pub(crate) fn gumbel_kendall(t: f64, theta: f64) -> f64 {
    t * (1.0 - t.ln() / theta)
}

/// Solve K(t) = w on [1e-12, 1 - 1e-12] by safeguarded Newton.
pub(crate) fn gumbel_kendall_inverse(w: f64, theta: f64) -> f64 {
    let (mut lo, mut hi) = (ROOT_LO, ROOT_HI);
    if gumbel_kendall(lo, theta) >= w {
        return lo;
    }
    if gumbel_kendall(hi, theta) <= w {
        return hi;
    }
    let mut t = w;
    for _ in 0..200 {
        let f = gumbel_kendall(t, theta) - w;
        if f.abs() <= ROOT_TOL * 1e-3 {
            break;
        }
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        // K'(t) = 1 - (1 + ln t) / theta
        let deriv = 1.0 - (1.0 + t.ln()) / theta;
        let newton = t - f / deriv;
        t = if deriv > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < ROOT_TOL {
            break;
        }
    }
    t
}
