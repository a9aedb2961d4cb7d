//! Acceptance suite: one PASS / FAIL / SKIP line per criterion.
//!
//! Criterion 8 needs the METABRIC clinical + expression CSV; point
//! `FUSE_METABRIC_CSV` at it to enable the check.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::*;
use fuse_core::cohort::{CohortTable, Column, ColumnData};
use fuse_core::copula::{
    bivariate_normal_cdf, fit, kendall_tau, sample, CopulaModel, Family, PseudoSample,
};
use fuse_core::gof::{empirical_copula, empirical_copula_at_points, parametric_bootstrap, select_best_copula, BootstrapOptions};
use fuse_core::ml::{fit_model, oof_scores, roc_auc, stratified_kfold, FeatureMatrix, ModelFamily, ModelParams, ModelSpec};
use fuse_core::pipeline::{run_pipeline, PipelineConfig, ReportBundle};
use fuse_core::rng::stream;
use fuse_core::survival::{kaplan_meier, Stratum};
use fuse_core::Stage;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn ac1() -> Outcome {
    let tau = 0.432;
    let g = fit(Family::Gaussian, tau).unwrap();
    let c = fit(Family::Clayton, tau).unwrap();
    let u = fit(Family::Gumbel, tau).unwrap();
    let ok = (g.param - 0.628).abs() <= 0.01
        && (c.param - 1.523).abs() <= 0.01
        && (u.param - 1.761).abs() <= 0.01
        && (c.lambda_l - 0.634).abs() <= 0.005
        && (u.lambda_u - 0.518).abs() <= 0.005;
    verdict(
        ok,
        format!(
            "rho={:.4} theta_C={:.4} theta_G={:.4} lambda_L={:.4} lambda_U={:.4}",
            g.param, c.param, u.param, c.lambda_l, u.lambda_u
        ),
    )
}

fn ac2() -> Outcome {
    let models = [
        CopulaModel::new(Family::Gaussian, -0.7).unwrap(),
        CopulaModel::new(Family::Gaussian, 0.628).unwrap(),
        CopulaModel::new(Family::Gaussian, 0.95).unwrap(),
        CopulaModel::new(Family::Clayton, 0.3).unwrap(),
        CopulaModel::new(Family::Clayton, 1.523).unwrap(),
        CopulaModel::new(Family::Clayton, 8.0).unwrap(),
        CopulaModel::new(Family::Gumbel, 1.1).unwrap(),
        CopulaModel::new(Family::Gumbel, 1.761).unwrap(),
        CopulaModel::new(Family::Gumbel, 6.0).unwrap(),
    ];
    let mut rng = stream(2, &[]);
    let (mut worst_margin, mut worst_vol, mut frechet) = (0.0f64, 0.0f64, 0usize);
    for m in &models {
        for _ in 0..10_000 {
            let (a, b, c, d): (f64, f64, f64, f64) = (rng.random(), rng.random(), rng.random(), rng.random());
            let (u1, u2) = (a.min(b), a.max(b));
            let (v1, v2) = (c.min(d), c.max(d));
            worst_margin = worst_margin
                .max((m.cdf(a, 1.0) - a).abs())
                .max((m.cdf(1.0, c) - c).abs())
                .max(m.cdf(a, 0.0).abs())
                .max(m.cdf(0.0, c).abs());
            let vol = m.cdf(u2, v2) - m.cdf(u1, v2) - m.cdf(u2, v1) + m.cdf(u1, v1);
            worst_vol = worst_vol.min(vol);
            for (u, v) in [(u1, v1), (u2, v2), (a, c)] {
                let x = m.cdf(u, v);
                if x < (u + v - 1.0).max(0.0) || x > u.min(v) {
                    frechet += 1;
                }
            }
        }
    }
    verdict(
        worst_margin <= 1e-9 && worst_vol >= -1e-9 && frechet == 0,
        format!("max margin/ground error {worst_margin:.1e}, min rectangle volume {worst_vol:.1e}, Frechet violations {frechet}"),
    )
}

fn ac3() -> Outcome {
    let grid = [
        (Family::Gaussian, -0.5),
        (Family::Gaussian, 0.0),
        (Family::Gaussian, 0.63),
        (Family::Clayton, 0.5),
        (Family::Clayton, 1.523),
        (Family::Gumbel, 1.3),
        (Family::Gumbel, 1.761),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (i, (f, p)) in grid.into_iter().enumerate() {
        let m = CopulaModel::new(f, p).unwrap();
        let s = sample(&m, 100_000, &mut stream(3, &[i as u64])).unwrap();
        let err = (kendall_tau(&s.u, &s.v).unwrap() - m.tau).abs();
        worst = worst.max(err);
        parts.push(format!("{}({p})={err:.4}", f.as_str()));
    }
    verdict(worst <= 0.01, format!("max |tau error| {worst:.4}: {}", parts.join(" ")))
}

fn ac4() -> Outcome {
    let gauss = CopulaModel::new(Family::Gaussian, 0.6).unwrap();
    let p: Vec<f64> = (0..200u64)
        .map(|t| {
            let s = sample(&gauss, 300, &mut stream(4, &[t])).unwrap().reranked().unwrap();
            let opts = BootstrapOptions {
                replicates: 200,
                seed: 1000 + t,
                ..Default::default()
            };
            parametric_bootstrap(&s, Family::Gaussian, &opts).unwrap().p_value
        })
        .collect();
    let ks = ks_uniform(&p);

    let truth = CopulaModel::new(Family::Gaussian, 0.628).unwrap();
    let trials = 50u64;
    let mut correct = 0;
    for t in 0..trials {
        let s = sample(&truth, 1400, &mut stream(40, &[t])).unwrap().reranked().unwrap();
        let opts = BootstrapOptions {
            replicates: 200,
            seed: 2000 + t,
            ..Default::default()
        };
        let res: Vec<_> = Family::ALL
            .iter()
            .map(|&f| parametric_bootstrap(&s, f, &opts).unwrap())
            .collect();
        if select_best_copula(&res) == Some(Family::Gaussian) {
            correct += 1;
        }
    }
    let rate = f64::from(correct) / trials as f64;
    let p_above = p.iter().filter(|&&x| x > 0.1).count();
    verdict(
        ks <= 0.12 && rate >= 0.8,
        format!(
            "KS sup distance {ks:.4} (200 datasets, {p_above} with p > 0.1); Gaussian selected {correct}/{trials} at n=1400"
        ),
    )
}

fn ac5() -> Outcome {
    let mut rng = stream(5, &[]);
    let mut fails = Vec::new();
    for rep in 0..20 {
        let n = rng.random_range(2..=200);
        let u: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..15u32))).collect();
        let v: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..15u32))).collect();
        if (kendall_tau(&u, &v).unwrap() - tau_brute(&u, &v)).abs() > 1e-12 {
            fails.push(format!("tau rep {rep}"));
        }
        let y: Vec<u8> = (0..n).map(|i| if i < 2 { i as u8 } else { rng.random_range(0..2u8) }).collect();
        if (roc_auc(&u, &y).unwrap() - auc_pairs(&u, &y)).abs() > 1e-12 {
            fails.push(format!("auc rep {rep}"));
        }

        let m = rng.random_range(1..=500);
        let a: Vec<f64> = (0..m).map(|_| f64::from(rng.random_range(1..50u32)) / 51.0).collect();
        let b: Vec<f64> = (0..m).map(|_| f64::from(rng.random_range(1..50u32)) / 51.0).collect();
        let s = PseudoSample::new(a.clone(), b.clone()).unwrap();
        let at = empirical_copula_at_points(&s);
        let probe_ok = (0..20).all(|_| {
            let (x, z): (f64, f64) = (rng.random(), rng.random());
            empirical_copula(&s, x, z) == emp_copula_brute(&a, &b, x, z)
        });
        if !probe_ok || (0..m).any(|i| at[i] != emp_copula_brute(&a, &b, a[i], b[i])) {
            fails.push(format!("empirical copula rep {rep}"));
        }

        let k = rng.random_range(1..=100);
        let t: Vec<f64> = (0..k).map(|_| f64::from(rng.random_range(0..20u32))).collect();
        let e: Vec<u8> = (0..k).map(|_| rng.random_range(0..2u8)).collect();
        let km = kaplan_meier(&t, &e).unwrap();
        let oracle = km_oracle(&t, &e);
        let same = km.steps.len() == oracle.len()
            && km.steps.iter().zip(&oracle).all(|(s, o)| {
                s.t == o.0 && s.d == o.2 && s.r == o.3 && (s.s_hat - o.1).abs() < 1e-12
            });
        if !same {
            fails.push(format!("kaplan-meier rep {rep}"));
        }
    }
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = rng.random_range(-3.5..3.5);
        let y = rng.random_range(-3.5..3.5);
        let rho = rng.random_range(-0.95..0.95);
        worst = worst.max((bivariate_normal_cdf(x, y, rho).unwrap() - bvn_quad(x, y, rho)).abs());
    }
    if worst > 1e-7 {
        fails.push(format!("bivariate normal max error {worst:.2e}"));
    }
    verdict(
        fails.is_empty(),
        if fails.is_empty() {
            format!("tau, C_n, AUC, KM match brute force on 20 random inputs each; BVN max error {worst:.1e} at 100 points")
        } else {
            fails.join(", ")
        },
    )
}

fn numeric_view(cols: &[Vec<f64>]) -> CohortTable {
    let columns = cols
        .iter()
        .enumerate()
        .map(|(j, c)| Column {
            name: format!("x{j}"),
            data: ColumnData::Numeric(c.iter().map(|&v| Some(v)).collect()),
        })
        .collect();
    CohortTable::new(columns, cols[0].len()).unwrap()
}

fn ac6() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    let draw = |n: usize, seed: u64| -> (Vec<f64>, Vec<u8>) {
        let mut rng = stream(seed, &[]);
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y = x.iter().map(|&v| u8::from(v > 0.0)).collect();
        (x, y)
    };
    let (xtr, ytr) = draw(400, 61);
    let (xte, yte) = draw(400, 62);
    let mtr = FeatureMatrix::from_rows(&xtr.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap();
    let mte = FeatureMatrix::from_rows(&xte.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap();
    for family in ModelFamily::ALL {
        let m = fit_model(&mtr, &ytr, family, &ModelParams::default(), 6).unwrap();
        let auc = roc_auc(&m.predict_proba(&mte), &yte).unwrap();
        ok &= auc >= 0.95;
        parts.push(format!("{} threshold AUC {auc:.3}", family.short()));
    }

    let mut rng = stream(63, &[]);
    let n = 120;
    let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
    let y: Vec<u8> = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            u8::from(cols[0][i] - cols[1][i] + e > 0.0)
        })
        .collect();
    let view = numeric_view(&cols);
    let keys: Vec<u64> = (0..n as u64).collect();
    let folds = stratified_kfold(&y, 5, 64).unwrap();
    let mut leaks = 0;
    let mut checked = 0;
    for family in ModelFamily::ALL {
        let spec = ModelSpec::new(family, 65);
        let base = oof_scores(&view, &y, &spec, &folds, &keys).unwrap();
        for who in (0..n).step_by(6) {
            let mut y2 = y.clone();
            y2[who] ^= 1;
            if let Ok(s) = oof_scores(&view, &y2, &spec, &folds, &keys) {
                checked += 1;
                if s[who].to_bits() != base[who].to_bits() {
                    leaks += 1;
                }
            }
        }
    }
    ok &= leaks == 0 && checked > 0;
    parts.push(format!("leakage {leaks}/{checked}"));

    let cols: Vec<Vec<f64>> = (0..5).map(|_| (0..500).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
    let y: Vec<u8> = (0..500).map(|_| u8::from(rng.random::<bool>())).collect();
    let folds = stratified_kfold(&y, 5, 66).unwrap();
    let keys: Vec<u64> = (0..500).collect();
    for family in ModelFamily::ALL {
        let s = oof_scores(&numeric_view(&cols), &y, &ModelSpec::new(family, 67), &folds, &keys).unwrap();
        let auc = roc_auc(&s, &y).unwrap();
        ok &= (0.40..=0.60).contains(&auc);
        parts.push(format!("{} null AUC {auc:.3}", family.short()));
    }
    verdict(ok, parts.join(", "))
}

/// High/high below low/low at every event time of either curve past the
/// 10th percentile of their pooled event times, up to the shorter curve.
fn km_ordered(b: &ReportBundle) -> Result<(), String> {
    let st = b.strata.as_ref().unwrap();
    let (Some(hb), Some(ll)) = (st.curves.get(Stratum::HighBoth), st.curves.get(Stratum::LowLow)) else {
        return Err("stratum omitted".into());
    };
    let mut times: Vec<f64> = hb.event_times().chain(ll.event_times()).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let end = hb.steps.last().map_or(0.0, |s| s.t).min(ll.steps.last().map_or(0.0, |s| s.t));
    let t10 = times[times.len() / 10];
    match times
        .iter()
        .filter(|&&t| t > t10 && t <= end)
        .find(|&&t| hb.survival_at(t) >= ll.survival_at(t))
    {
        Some(t) => Err(format!("crossing at t={t}")),
        None => Ok(()),
    }
}

fn ac7() -> Outcome {
    let rho = (std::f64::consts::PI * 0.43 / 2.0).sin();
    let dir = tempfile::tempdir().unwrap();
    let mut gaussian = 0;
    let mut confident = 0;
    let mut km_ok = 0;
    let mut notes = Vec::new();
    for seed in 1..=20u64 {
        let out = dir.path().join(format!("s{seed}"));
        let status = Command::new(env!("CARGO_BIN_EXE_fuse"))
            .args(["synth", "--out", out.to_str().unwrap(), "--seed", &seed.to_string(), "--n", "800"])
            .args(["--copula", "gaussian", "--rho", &rho.to_string(), "--hazard-ratio", "4"])
            .env("RUST_LOG", "warn")
            .output()
            .unwrap();
        if !status.status.success() {
            return Outcome::Fail(format!("fuse synth failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        let cfg = PipelineConfig::load(out.join("config.json")).unwrap();
        let b = match run_pipeline(&cfg, Stage::Report) {
            Ok(b) => b,
            Err(e) => return Outcome::Fail(format!("seed {seed}: {e}")),
        };
        let g = b.gof.as_ref().unwrap();
        if g.best == Family::Gaussian {
            gaussian += 1;
            let p = g.results.iter().find(|r| r.family == Family::Gaussian).unwrap().p_value;
            if p > 0.1 {
                confident += 1;
            }
        } else {
            notes.push(format!("seed {seed} chose {}", g.best));
        }
        match km_ordered(&b) {
            Ok(()) => km_ok += 1,
            Err(e) => notes.push(format!("seed {seed} {e}")),
        }
    }
    let detail = format!(
        "Gaussian selected {gaussian}/20 ({confident}/20 with p > 0.1); high_both below low_low {km_ok}/20{}",
        if notes.is_empty() { String::new() } else { format!(" [{}]", notes.join("; ")) }
    );
    verdict(gaussian >= 18 && km_ok == 20, detail)
}

fn ac8() -> Outcome {
    let Ok(path) = std::env::var("FUSE_METABRIC_CSV") else {
        return Outcome::Skip("FUSE_METABRIC_CSV not set".into());
    };
    if !Path::new(&path).is_file() {
        return Outcome::Fail(format!("{path} is not a file"));
    }
    let cfg = PipelineConfig {
        input_csv: path.into(),
        ..Default::default()
    };
    let b = match run_pipeline(&cfg, Stage::Report) {
        Ok(b) => b,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let sc = b.scores.as_ref().unwrap();
    let rf = |view: &str| {
        sc.records
            .iter()
            .find(|r| r.view == view && r.family == ModelFamily::RandomForest)
            .map_or(f64::NAN, |r| r.auc)
    };
    let (clin, gen) = (rf("clinical"), rf("genomic"));
    let tau = b.copula.as_ref().unwrap().tau;
    let best = b.gof.as_ref().unwrap().best;
    let ps: Vec<String> = b
        .gof
        .as_ref()
        .unwrap()
        .results
        .iter()
        .map(|r| format!("{}={:.3}", r.family, r.p_value))
        .collect();
    verdict(
        (0.75..=0.81).contains(&clin)
            && (0.64..=0.72).contains(&gen)
            && (0.37..=0.49).contains(&tau)
            && best == Family::Gaussian,
        format!(
            "RF AUC clinical {clin:.3}, genomic {gen:.3}; tau {tau:.3}; p-values {}",
            ps.join(" ")
        ),
    )
}

fn main() -> ExitCode {
    let checks: [(&str, &str, Duration, Check); 8] = [
        ("AC1", "closed-form parameters and tail coefficients at tau=0.432", Duration::from_secs(1), ac1),
        ("AC2", "copula laws on 10^4 rectangles per family", Duration::from_secs(10), ac2),
        ("AC3", "sampler tau within 0.01 at n=10^5", Duration::from_secs(60), ac3),
        ("AC4", "bootstrap calibration and family selection", Duration::from_secs(300), ac4),
        ("AC5", "oracle equivalences", Duration::from_secs(30), ac5),
        ("AC6", "ML sanity: threshold, leakage, null AUC", Duration::from_secs(120), ac6),
        ("AC7", "end-to-end synthetic, 20 seeds", Duration::from_secs(180), ac7),
        ("AC8", "METABRIC reproduction bands", Duration::from_secs(900), ac8),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in checks {
        let t = Instant::now();
        let outcome = check();
        let dt = t.elapsed();
        let timing = format!("{:.2}s / {}s", dt.as_secs_f64(), budget.as_secs());
        let (tag, detail) = match outcome {
            Outcome::Pass(d) if dt <= budget => ("PASS", d),
            Outcome::Pass(d) => ("FAIL", format!("over time budget; {d}")),
            Outcome::Fail(d) => ("FAIL", d),
            Outcome::Skip(d) => ("SKIP", d),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} {id} {name} ({timing}): {detail}");
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
