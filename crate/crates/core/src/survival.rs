//! Kaplan–Meier estimation and median-split joint risk strata.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmStep {
    pub t: f64,
    pub s_hat: f64,
    pub d: usize,
    pub r: usize,
}

/// Product-limit curve; one step per distinct event time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    pub steps: Vec<KmStep>,
    pub n_start: usize,
}

impl KmCurve {
    /// Right-continuous evaluation: S(t) includes steps at times <= t.
    pub fn survival_at(&self, t: f64) -> f64 {
        let k = self.steps.partition_point(|s| s.t <= t);
        if k == 0 {
            1.0
        } else {
            self.steps[k - 1].s_hat
        }
    }

    pub fn event_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.t)
    }
}

/// Kaplan–Meier estimate. Deaths at time t are processed before censorings
/// at t, so a subject censored at t is still at risk for events at t.
pub fn kaplan_meier(times: &[f64], events: &[u8]) -> Result<KmCurve> {
    if times.is_empty() {
        return Err(Error::InvalidInput("kaplan-meier on empty input".into()));
    }
    if times.len() != events.len() {
        return Err(Error::InvalidInput(format!(
            "{} times but {} events",
            times.len(),
            events.len()
        )));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidInput("times must be finite and >= 0".into()));
    }
    if events.iter().any(|&e| e > 1) {
        return Err(Error::InvalidInput("events must be 0 or 1".into()));
    }

    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));

    let mut steps = Vec::new();
    let mut at_risk = times.len();
    let mut s_hat = 1.0;
    let mut i = 0;
    while i < order.len() {
        let t = times[order[i]];
        let mut j = i;
        let mut deaths = 0;
        while j < order.len() && times[order[j]] == t {
            deaths += usize::from(events[order[j]]);
            j += 1;
        }
        if deaths > 0 {
            s_hat *= 1.0 - deaths as f64 / at_risk as f64;
            steps.push(KmStep {
                t,
                s_hat,
                d: deaths,
                r: at_risk,
            });
        }
        at_risk -= j - i;
        i = j;
    }
    Ok(KmCurve {
        steps,
        n_start: times.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    LowLow,
    HighClinOnly,
    HighGenOnly,
    HighBoth,
}

impl Stratum {
    pub const ALL: [Stratum; 4] = [
        Stratum::LowLow,
        Stratum::HighClinOnly,
        Stratum::HighGenOnly,
        Stratum::HighBoth,
    ];

    pub fn from_flags(high_clin: bool, high_gen: bool) -> Stratum {
        match (high_clin, high_gen) {
            (false, false) => Stratum::LowLow,
            (true, false) => Stratum::HighClinOnly,
            (false, true) => Stratum::HighGenOnly,
            (true, true) => Stratum::HighBoth,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stratum::LowLow => "low_low",
            Stratum::HighClinOnly => "high_clin_only",
            Stratum::HighGenOnly => "high_gen_only",
            Stratum::HighBoth => "high_both",
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sample median; even n takes the mean of the two middle order statistics.
pub fn median(x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Some(if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumAssignment {
    pub labels: Vec<Stratum>,
    pub m_clin: f64,
    pub m_gen: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl StratumAssignment {
    pub fn count(&self, s: Stratum) -> usize {
        self.labels.iter().filter(|&&l| l == s).count()
    }
}

/// Median split on each score; a score equal to its median counts as low.
pub fn joint_strata(p_clin: &[f64], p_gen: &[f64]) -> Result<StratumAssignment> {
    if p_clin.len() != p_gen.len() {
        return Err(Error::InvalidInput(format!(
            "score lengths differ: {} vs {}",
            p_clin.len(),
            p_gen.len()
        )));
    }
    if p_clin.len() < 4 {
        return Err(Error::InvalidInput("joint strata need n >= 4".into()));
    }
    let m_clin = median(p_clin).expect("non-empty");
    let m_gen = median(p_gen).expect("non-empty");
    let mut warnings = Vec::new();
    for (name, x) in [("clinical", p_clin), ("genomic", p_gen)] {
        if x.iter().all(|&v| v == x[0]) {
            let msg = format!("{name} score is constant; every patient is low on that axis");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let labels = p_clin
        .iter()
        .zip(p_gen)
        .map(|(&c, &g)| Stratum::from_flags(c > m_clin, g > m_gen))
        .collect();
    Ok(StratumAssignment {
        labels,
        m_clin,
        m_gen,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrataCurves {
    /// Curves for strata meeting the size threshold, in canonical order.
    pub curves: Vec<(Stratum, KmCurve)>,
    /// Strata left out, with their sizes.
    pub omitted: Vec<(Stratum, usize)>,
}

impl StrataCurves {
    pub fn get(&self, s: Stratum) -> Option<&KmCurve> {
        self.curves.iter().find(|(k, _)| *k == s).map(|(_, c)| c)
    }
}

pub fn strata_km(
    assignment: &StratumAssignment,
    times: &[f64],
    events: &[u8],
    min_size: usize,
) -> Result<StrataCurves> {
    let n = assignment.labels.len();
    if times.len() != n || events.len() != n {
        return Err(Error::InvalidInput(
            "strata, times and events must be aligned".into(),
        ));
    }
    let mut curves = Vec::new();
    let mut omitted = Vec::new();
    for s in Stratum::ALL {
        let rows: Vec<usize> = (0..n).filter(|&i| assignment.labels[i] == s).collect();
        if rows.len() < min_size.max(1) {
            omitted.push((s, rows.len()));
            continue;
        }
        let t: Vec<f64> = rows.iter().map(|&i| times[i]).collect();
        let e: Vec<u8> = rows.iter().map(|&i| events[i]).collect();
        curves.push((s, kaplan_meier(&t, &e)?));
    }
    if curves.is_empty() {
        return Err(Error::InvalidInput(format!(
            "every stratum has fewer than {min_size} patients"
        )));
    }
    Ok(StrataCurves { curves, omitted })
}
