//! Report tables and the run manifest.
//!
//! | file | contents |
//! |---|---|
//! | `scores.csv` | `row,patient_id,y,time,event,p_clin,p_gen,u,v,stratum` |
//! | `model_auc.csv` | `view,model,auc,selected` |
//! | `copula_fit.json` | one object per family: `family,param,tau,lambda_L,lambda_U,bounded` |
//! | `gof.json` | one object per family: `family,statistic,B,m,p_value,model,bounded,selected` |
//! | `strata.csv` | `stratum,n,events,included,s_at_horizon` |
//! | `km_curves.csv` | `stratum,t,s_hat,d,r` |
//! | `manifest.json` | config, seeds, versions, input and output SHA-256 |
//!
//! Floats are written in shortest round-trip form, so tables are identical
//! across reruns with the same manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::pipeline::{sha256_file, PipelineConfig, ReportBundle};
use crate::plot::render_plots;
use crate::survival::Stratum;

pub const TOOL_NAME: &str = "fuse";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::InvalidInput(format!("{}: {kind:?}", path.display())),
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(&r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Write every table the bundle has data for. Returns the written paths.
pub fn emit_tables(bundle: &ReportBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    let Some(cohort) = &bundle.cohort else {
        return Ok(out);
    };

    if let Some(sc) = &bundle.scores {
        let p = dir.join("scores.csv");
        let rows = (0..cohort.y.len()).map(|i| {
            vec![
                i.to_string(),
                cohort.ids[i].clone(),
                cohort.y[i].to_string(),
                cohort.time[i].to_string(),
                cohort.event[i].to_string(),
                sc.p_clin[i].to_string(),
                sc.p_gen[i].to_string(),
                opt(bundle.copula.as_ref().map(|c| c.sample.u[i])),
                opt(bundle.copula.as_ref().map(|c| c.sample.v[i])),
                opt(bundle.strata.as_ref().map(|s| s.assignment.labels[i])),
            ]
        });
        write_csv(
            &p,
            &["row", "patient_id", "y", "time", "event", "p_clin", "p_gen", "u", "v", "stratum"],
            rows,
        )?;
        out.push(p);

        let p = dir.join("model_auc.csv");
        let rows = sc.records.iter().map(|r| {
            let chosen = if r.view == "clinical" { sc.clinical_model } else { sc.genomic_model };
            vec![
                r.view.clone(),
                r.family.to_string(),
                r.auc.to_string(),
                u8::from(chosen == r.family).to_string(),
            ]
        });
        write_csv(&p, &["view", "model", "auc", "selected"], rows)?;
        out.push(p);
    }

    if let Some(cop) = &bundle.copula {
        let p = dir.join("copula_fit.json");
        write_json(&p, &cop.fits)?;
        out.push(p);
    }

    if let Some(g) = &bundle.gof {
        let p = dir.join("gof.json");
        let entries: Vec<serde_json::Value> = g
            .results
            .iter()
            .map(|r| {
                let mut v = serde_json::to_value(r).expect("plain data");
                v["selected"] = json!(r.family == g.best);
                v
            })
            .collect();
        write_json(&p, &entries)?;
        out.push(p);
    }

    if let Some(st) = &bundle.strata {
        let horizon = bundle.config.horizon;
        let p = dir.join("strata.csv");
        let rows = Stratum::ALL.iter().map(|&s| {
            let members: Vec<usize> =
                (0..cohort.y.len()).filter(|&i| st.assignment.labels[i] == s).collect();
            let events: usize = members.iter().map(|&i| usize::from(cohort.km_event[i])).sum();
            let curve = st.curves.get(s);
            vec![
                s.to_string(),
                members.len().to_string(),
                events.to_string(),
                u8::from(curve.is_some()).to_string(),
                opt(curve.map(|c| c.survival_at(horizon))),
            ]
        });
        write_csv(&p, &["stratum", "n", "events", "included", "s_at_horizon"], rows)?;
        out.push(p);

        let p = dir.join("km_curves.csv");
        let rows = st.curves.curves.iter().flat_map(|(s, c)| {
            c.steps.iter().map(move |k| {
                vec![s.to_string(), k.t.to_string(), k.s_hat.to_string(), k.d.to_string(), k.r.to_string()]
            })
        });
        write_csv(&p, &["stratum", "t", "s_hat", "d", "r"], rows)?;
        out.push(p);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub completed_stage: String,
    pub config: PipelineConfig,
    pub input_sha256: String,
    pub n_loaded: usize,
    pub n_analytic: Option<usize>,
    pub seeds: serde_json::Value,
    pub selected: serde_json::Value,
    pub outputs: Vec<FileDigest>,
}

pub fn build_manifest(bundle: &ReportBundle, files: &[PathBuf]) -> Result<Manifest> {
    let mut outputs = files
        .iter()
        .map(|p| {
            Ok(FileDigest {
                file: p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                sha256: sha256_file(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    outputs.sort_by(|a, b| a.file.cmp(&b.file));
    let cfg = &bundle.config;
    Ok(Manifest {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        completed_stage: bundle.completed.to_string(),
        config: cfg.clone(),
        input_sha256: bundle.input_sha256.clone(),
        n_loaded: bundle.n_loaded,
        n_analytic: bundle.cohort.as_ref().map(|c| c.y.len()),
        seeds: json!({
            "cv": cfg.cv.seed,
            "folds": bundle.scores.as_ref().map(|s| s.fold_seed),
            "bootstrap": cfg.copula.seed,
        }),
        selected: json!({
            "clinical_model": bundle.scores.as_ref().map(|s| s.clinical_model),
            "genomic_model": bundle.scores.as_ref().map(|s| s.genomic_model),
            "copula": bundle.gof.as_ref().map(|g| g.best),
            "tau": bundle.copula.as_ref().map(|c| c.tau),
        }),
        outputs,
    })
}

/// Tables, figures and `manifest.json`. Returns every written path.
pub fn write_report(bundle: &ReportBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = emit_tables(bundle, dir)?;
    files.extend(render_plots(bundle, dir)?);
    let manifest = build_manifest(bundle, &files)?;
    let p = dir.join("manifest.json");
    write_json(&p, &manifest)?;
    files.push(p);
    Ok(files)
}
