//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

/// Kendall tau_a by enumerating every pair.
pub fn tau_brute(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut net = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let s = (u[i] - u[j]).signum() * (v[i] - v[j]).signum();
            if u[i] != u[j] && v[i] != v[j] {
                net += s as i64;
            }
        }
    }
    net as f64 / (n * (n - 1) / 2) as f64
}

pub fn emp_copula_brute(u: &[f64], v: &[f64], a: f64, b: f64) -> f64 {
    let hits = u.iter().zip(v).filter(|(&x, &y)| x <= a && y <= b).count();
    hits as f64 / u.len() as f64
}

/// AUC by counting positive/negative pairs, ties one half.
pub fn auc_pairs(s: &[f64], y: &[u8]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..s.len() {
        for j in 0..s.len() {
            if y[i] == 1 && y[j] == 0 {
                den += 1.0;
                if s[i] > s[j] {
                    num += 1.0;
                } else if s[i] == s[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

/// Product-limit estimate recomputed from explicit risk sets:
/// `(t, S(t), deaths, at risk)` at each distinct event time.
pub fn km_oracle(t: &[f64], e: &[u8]) -> Vec<(f64, f64, usize, usize)> {
    let mut times: Vec<f64> = t.iter().zip(e).filter(|(_, &d)| d == 1).map(|(&x, _)| x).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut s = 1.0;
    times
        .into_iter()
        .map(|tj| {
            let d = t.iter().zip(e).filter(|(&x, &ev)| x == tj && ev == 1).count();
            let r = t.iter().filter(|&&x| x >= tj).count();
            s *= 1.0 - d as f64 / r as f64;
            (tj, s, d, r)
        })
        .collect()
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let d = h * XGK[i];
        let s = f(c - d) + f(c + d);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h)
}

/// Adaptive Gauss–Kronrod 7/15 on `[a, b]`.
pub fn integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return k;
    }
    let m = 0.5 * (a + b);
    integrate(f, a, m, tol / 2.0, depth - 1) + integrate(f, m, b, tol / 2.0, depth - 1)
}

/// Bivariate normal lower orthant by nested adaptive quadrature of the density.
pub fn bvn_quad(x: f64, y: f64, rho: f64) -> f64 {
    const LO: f64 = -12.0;
    let q = 1.0 - rho * rho;
    let c = 1.0 / (2.0 * std::f64::consts::PI * q.sqrt());
    let mut outer = |s: f64| {
        let mut inner = |t: f64| c * (-(s * s - 2.0 * rho * s * t + t * t) / (2.0 * q)).exp();
        integrate(&mut inner, LO, y, 1e-13, 40)
    };
    integrate(&mut outer, LO, x, 1e-12, 40)
}

/// Kolmogorov sup distance between the empirical CDF of `p` and U(0, 1).
pub fn ks_uniform(p: &[f64]) -> f64 {
    let mut s = p.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Uniform draws on (0, 1) without ties, then their ranks / (n + 1).
pub fn distinct_unit(raw: &[f64]) -> Vec<f64> {
    let n = raw.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; n];
    for (r, &i) in order.iter().enumerate() {
        out[i] = (r + 1) as f64 / (n + 1) as f64;
    }
    out
}
