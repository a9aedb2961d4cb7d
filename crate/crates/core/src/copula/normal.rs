//! Univariate and bivariate standard normal distribution functions.

#![allow(clippy::excessive_precision)]

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}

// Gauss-Legendre abscissae on [-1, 0) and weights, 6/12/20 points.
const GL6: [(f64, f64); 3] = [
    (-0.9324695142031522, 0.1713244923791705),
    (-0.6612093864662647, 0.3607615730481384),
    (-0.2386191860831970, 0.4679139345726904),
];

const GL12: [(f64, f64); 6] = [
    (-0.9815606342467191, 0.4717533638651177e-01),
    (-0.9041172563704750, 0.1069393259953183),
    (-0.7699026741943050, 0.1600783285433464),
    (-0.5873179542866171, 0.2031674267230659),
    (-0.3678314989981802, 0.2334925365383547),
    (-0.1252334085114692, 0.2491470458134029),
];

const GL20: [(f64, f64); 10] = [
    (-0.9931285991850949, 0.1761400713915212e-01),
    (-0.9639719272779138, 0.4060142980038694e-01),
    (-0.9122344282513259, 0.6267204833410906e-01),
    (-0.8391169718222188, 0.8327674157670475e-01),
    (-0.7463319064601508, 0.1019301198172404),
    (-0.6360536807265150, 0.1181945319615184),
    (-0.5108670019508271, 0.1316886384491766),
    (-0.3737060887154196, 0.1420961093183821),
    (-0.2277858511416451, 0.1491729864726037),
    (-0.7652652113349733e-01, 0.1527533871307259),
];

/// Upper orthant probability `Pr(X > h, Y > k)` for a standard bivariate
/// normal with correlation `r`.
///
/// Drezner–Wesolowsky correlation-integral form with Genz's double precision
/// refinements: Gauss–Legendre quadrature over `asin(r)` for `|r| < 0.925`,
/// and an asymptotic expansion plus quadrature of the remainder near `|r| = 1`.
fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    let quad: &[(f64, f64)] = if r.abs() < 0.3 {
        &GL6
    } else if r.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    };

    let mut hk = h * k;
    if r.abs() < 0.925 {
        let mut bvn = 0.0;
        if r != 0.0 {
            let hs = (h * h + k * k) / 2.0;
            let asr = r.asin();
            for &(x, w) in quad {
                for sign in [-1.0, 1.0] {
                    let sn = (asr * (sign * x + 1.0) / 2.0).sin();
                    bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
                }
            }
            bvn *= asr / (4.0 * PI);
        }
        return bvn + norm_cdf(-h) * norm_cdf(-k);
    }

    let mut k = k;
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    let mut bvn = 0.0;
    if r.abs() < 1.0 {
        let a2 = (1.0 - r) * (1.0 + r);
        let mut a = a2.sqrt();
        let b2 = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        let asr = -(b2 / a2 + hk) / 2.0;
        if asr > -100.0 {
            bvn = a
                * asr.exp()
                * (1.0 - c * (b2 - a2) * (1.0 - d * b2 / 5.0) / 3.0 + c * d * a2 * a2 / 5.0);
        }
        if -hk < 100.0 {
            let b = b2.sqrt();
            bvn -= (-hk / 2.0).exp()
                * (2.0 * PI).sqrt()
                * norm_cdf(-b / a)
                * b
                * (1.0 - c * b2 * (1.0 - d * b2 / 5.0) / 3.0);
        }
        a /= 2.0;
        for &(x, w) in quad {
            for sign in [-1.0, 1.0] {
                let xs = (a * (sign * x + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                let asr = -(b2 / xs + hk) / 2.0;
                if asr > -100.0 {
                    bvn += a
                        * w
                        * asr.exp()
                        * ((-hk * xs / (2.0 * (1.0 + rs) * (1.0 + rs))).exp() / rs
                            - (1.0 + c * xs * (1.0 + d * xs)));
                }
            }
        }
        bvn = -bvn / (2.0 * PI);
    }
    if r > 0.0 {
        bvn + norm_cdf(-h.max(k))
    } else {
        let mut bvn = -bvn;
        if k > h {
            if h < 0.0 {
                bvn += norm_cdf(k) - norm_cdf(h);
            } else {
                bvn += norm_cdf(-h) - norm_cdf(-k);
            }
        }
        bvn
    }
}

/// `Pr(Z1 <= x, Z2 <= y)` for standard normals with correlation `rho`.
pub fn bivariate_normal_cdf(x: f64, y: f64, rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "correlation {rho} outside (-1, 1)"
        )));
    }
    if x.is_nan() || y.is_nan() {
        return Err(Error::InvalidInput("NaN bivariate normal limit".into()));
    }
    Ok(bvn_lower(x, y, rho))
}

/// Unchecked lower orthant probability; `|rho| < 1` is assumed.
pub(crate) fn bvn_lower(x: f64, y: f64, rho: f64) -> f64 {
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return norm_cdf(y);
    }
    if y == f64::INFINITY {
        return norm_cdf(x);
    }
    // Evaluate with sorted limits so that the result is symmetric bit for bit.
    let (a, b) = if x <= y { (x, y) } else { (y, x) };
    upper_orthant(-a, -b, rho).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn univariate_reference_values() {
        assert_abs_diff_eq!(norm_cdf(0.0), 0.5, epsilon = 1e-16);
        assert_abs_diff_eq!(norm_cdf(1.959963984540054), 0.975, epsilon = 1e-15);
        assert_abs_diff_eq!(norm_cdf(-8.0), 6.22096057427178e-16, epsilon = 1e-25);
        assert_abs_diff_eq!(norm_quantile(0.975), 1.959963984540054, epsilon = 1e-12);
        for p in [1e-10, 1e-4, 0.1, 0.37, 0.5, 0.9, 0.999999] {
            assert_abs_diff_eq!(norm_cdf(norm_quantile(p)), p, epsilon = 1e-14 * p.max(1e-2));
        }
    }

    #[test]
    fn independence_factorizes() {
        for (x, y) in [(0.0, 0.0), (1.0, -0.5), (-2.0, 0.3)] {
            let p = bivariate_normal_cdf(x, y, 0.0).unwrap();
            assert_abs_diff_eq!(p, norm_cdf(x) * norm_cdf(y), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(bivariate_normal_cdf(0.0, 0.0, 0.0).unwrap(), 0.25);
    }

    #[test]
    fn origin_closed_form() {
        // 1/4 + asin(rho)/(2 pi)
        for rho in [-0.99, -0.95, -0.6, 0.1, 0.628, 0.93, 0.999] {
            let p = bivariate_normal_cdf(0.0, 0.0, rho).unwrap();
            assert_abs_diff_eq!(p, 0.25 + f64::asin(rho) / (2.0 * PI), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(
            bivariate_normal_cdf(0.0, 0.0, 0.628).unwrap(),
            0.3580631106,
            epsilon = 1e-10
        );
    }

    #[test]
    fn tails_and_symmetry() {
        assert!(bivariate_normal_cdf(-8.0, 0.0, 0.5).unwrap() <= 1e-12);
        for rho in [-0.97, -0.3, 0.4, 0.96] {
            let a = bivariate_normal_cdf(0.7, -1.3, rho).unwrap();
            let b = bivariate_normal_cdf(-1.3, 0.7, rho).unwrap();
            assert_eq!(a, b);
            assert_abs_diff_eq!(
                bivariate_normal_cdf(0.7, 40.0, rho).unwrap(),
                norm_cdf(0.7),
                epsilon = 1e-7
            );
        }
    }

    #[test]
    fn rejects_degenerate_correlation() {
        assert!(bivariate_normal_cdf(0.0, 0.0, 1.0).is_err());
        assert!(bivariate_normal_cdf(0.0, 0.0, -1.0).is_err());
    }
}
