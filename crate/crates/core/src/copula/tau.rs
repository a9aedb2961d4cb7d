//! Kendall rank correlation in O(n log n) (Knight's merge-sort algorithm).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauVariant {
    /// (C - D) / (n(n-1)/2); tied pairs count zero.
    #[default]
    A,
    /// Tie-corrected denominator sqrt((n0 - n1)(n0 - n2)).
    B,
}

/// Pair counts needed by both tau variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub total: u64,
    /// concordant minus discordant
    pub net: i64,
    pub ties_x: u64,
    pub ties_y: u64,
}

fn tied_pairs_in_runs<T: PartialEq>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for item in sorted {
        if prev.as_ref() == Some(&item) {
            run += 1;
        } else {
            total += run * run.saturating_sub(1) / 2;
            run = 1;
        }
        prev = Some(item);
    }
    total + run * run.saturating_sub(1) / 2
}

/// Sorts `v` in place and returns the number of strictly inverted pairs.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

pub fn pair_counts(x: &[f64], y: &[f64]) -> PairCounts {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let ties_x = tied_pairs_in_runs(order.iter().map(|&i| x[i].to_bits()));
    let ties_xy = tied_pairs_in_runs(order.iter().map(|&i| (x[i].to_bits(), y[i].to_bits())));

    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);
    let ties_y = tied_pairs_in_runs(ys.iter().map(|v| v.to_bits()));

    let total = (n as u64) * (n as u64).saturating_sub(1) / 2;
    let net = total as i64 - ties_x as i64 - ties_y as i64 + ties_xy as i64 - 2 * swaps as i64;
    PairCounts {
        total,
        net,
        ties_x,
        ties_y,
    }
}

pub fn kendall_tau(u: &[f64], v: &[f64]) -> Result<f64> {
    kendall_tau_with(u, v, TauVariant::A)
}

pub fn kendall_tau_with(u: &[f64], v: &[f64], variant: TauVariant) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    if u.len() < 2 {
        return Err(Error::InvalidInput("kendall tau needs n >= 2".into()));
    }
    if u.iter().chain(v).any(|c| c.is_nan()) {
        return Err(Error::InvalidInput("NaN in kendall tau input".into()));
    }
    let c = pair_counts(u, v);
    let tau = match variant {
        TauVariant::A => c.net as f64 / c.total as f64,
        TauVariant::B => {
            let denom = ((c.total - c.ties_x) as f64 * (c.total - c.ties_y) as f64).sqrt();
            if denom == 0.0 {
                return Err(Error::Numeric("tau-b undefined for a constant margin".into()));
            }
            c.net as f64 / denom
        }
    };
    Ok(tau.clamp(-1.0, 1.0))
}
