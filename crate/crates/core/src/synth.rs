//! Synthetic cohort with known latent dependence, laid out like the METABRIC
//! clinical + expression file.
//!
//! Two latent risks `(z_c, z_g)` are drawn from a chosen copula with standard
//! normal margins. Clinical columns are noisy readouts of `z_c`, signal genes
//! of `z_g`. Cancer-specific death is exponential with log-hazard
//! `log h0 + gamma (z_c + z_g) + log(HR) (1[z_c > 0] + 1[z_g > 0]) / 2`, so
//! the high/high group carries `HR` times the low/low baseline multiplier.
//! Competing deaths and uniform censoring complete the follow-up.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::cohort::{ViewSpec, CANCER_STATUS_COLUMN, OVERALL_STATUS_COLUMN, TIME_COLUMN};
use crate::copula::{norm_quantile, sample, CopulaModel, Family};
use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::rng::{stream, TAG_SYNTH};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n: usize,
    pub family: Family,
    /// rho for Gaussian, theta for Clayton / Gumbel.
    pub param: f64,
    pub hazard_ratio: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n: 800,
            family: Family::Gaussian,
            param: 0.63,
            hazard_ratio: 4.0,
            seed: 1,
        }
    }
}

const BASE_HAZARD: f64 = 0.0015;
const GAMMA: f64 = 0.5;
const OTHER_HAZARD: f64 = 0.0015;
const CENSOR_MIN: f64 = 24.0;
const CENSOR_MAX: f64 = 300.0;

const N_SIGNAL_GENES: usize = 12;
const N_NOISE_GENES: usize = 80;
const N_MUTATIONS: usize = 6;
const GENE_LOADING: f64 = 0.55;

pub const SYNTH_CLINICAL_COLUMNS: [&str; 11] = [
    "age_at_diagnosis",
    "tumor_size",
    "lymph_nodes_examined_positive",
    "nottingham_prognostic_index",
    "neoplasm_histologic_grade",
    "tumor_stage",
    "chemotherapy",
    "er_status",
    "pam50_+_claudin-low_subtype",
    "type_of_breast_surgery",
    "cohort",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCohort {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub z_clin: Vec<f64>,
    pub z_gen: Vec<f64>,
}

impl SynthCohort {
    pub fn view_spec(&self) -> ViewSpec {
        ViewSpec {
            clinical_columns: SYNTH_CLINICAL_COLUMNS.iter().map(|s| s.to_string()).collect(),
            id_column: "patient_id".into(),
            survival_columns: vec![
                TIME_COLUMN.into(),
                OVERALL_STATUS_COLUMN.into(),
                CANCER_STATUS_COLUMN.into(),
            ],
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// `a z + sqrt(1 - a^2) e`, unit variance.
fn readout<R: Rng + ?Sized>(z: f64, a: f64, rng: &mut R) -> f64 {
    let e: f64 = StandardNormal.sample(rng);
    a * z + (1.0 - a * a).sqrt() * e
}

fn num(x: f64) -> String {
    format!("{x:.4}")
}

pub fn generate(params: &SynthParams) -> Result<SynthCohort> {
    if params.n < 10 {
        return Err(Error::InvalidParameter("synthetic cohort needs n >= 10".into()));
    }
    if !(params.hazard_ratio.is_finite() && params.hazard_ratio > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "hazard ratio {} must be > 0",
            params.hazard_ratio
        )));
    }
    let model = CopulaModel::new(params.family, params.param)?;
    let latent = sample(&model, params.n, &mut stream(params.seed, &[TAG_SYNTH, 0]))?;
    let z_clin: Vec<f64> = latent.u.iter().map(|&u| norm_quantile(u)).collect();
    let z_gen: Vec<f64> = latent.v.iter().map(|&v| norm_quantile(v)).collect();

    let mut header: Vec<String> = vec!["patient_id".into()];
    header.extend(SYNTH_CLINICAL_COLUMNS.iter().map(|s| s.to_string()));
    header.extend([TIME_COLUMN, OVERALL_STATUS_COLUMN, CANCER_STATUS_COLUMN].map(String::from));
    let n_genes = N_SIGNAL_GENES + N_NOISE_GENES;
    header.extend((0..n_genes).map(|j| format!("gene_{j:03}")));
    header.extend((0..N_MUTATIONS).map(|j| format!("gene_{j:03}_mut")));

    let mut gene_rng = stream(params.seed, &[TAG_SYNTH, 1]);
    let scales: Vec<f64> = (0..n_genes)
        .map(|j| {
            if j < N_SIGNAL_GENES {
                gene_rng.random_range(1.2..1.6)
            } else {
                gene_rng.random_range(0.5..1.3)
            }
        })
        .collect();

    let other = Exp::new(OTHER_HAZARD).expect("positive rate");
    let censor = Uniform::new(CENSOR_MIN, CENSOR_MAX).expect("valid range");
    let log_hr = params.hazard_ratio.ln();
    let mut rows = Vec::with_capacity(params.n);
    for i in 0..params.n {
        let rng = &mut stream(params.seed, &[TAG_SYNTH, 2, i as u64]);
        let (zc, zg) = (z_clin[i], z_gen[i]);
        let mut row = vec![format!("SYN-{i:04}")];

        let age = 61.0 + 12.0 * readout(zc, 0.5, rng);
        row.push(num(age.clamp(22.0, 96.0)));
        let size = (3.1 + 0.35 * readout(zc, 0.6, rng)).exp();
        row.push(if rng.random::<f64>() < 0.01 { "NA".into() } else { num(size) });
        let nodes = (0.8 + 0.9 * readout(zc, 0.4, rng)).exp() - 1.0;
        row.push(format!("{}", nodes.max(0.0).floor() as u32));
        row.push(num(4.0 + 1.1 * readout(zc, 0.85, rng)));
        let g = readout(zc, 0.4, rng);
        row.push(if rng.random::<f64>() < 0.04 {
            "NA".into()
        } else {
            (if g < -0.8 { "1" } else if g < 0.4 { "2" } else { "3" }).into()
        });
        let s = readout(zc, 0.3, rng);
        row.push(if rng.random::<f64>() < 0.25 {
            "NA".into()
        } else {
            (if s < -0.6 { "1" } else if s < 0.9 { "2" } else if s < 2.0 { "3" } else { "4" }).into()
        });
        row.push((if readout(zc, 0.3, rng) > 0.6 { "1" } else { "0" }).into());
        row.push((if readout(zc, 0.3, rng) > 0.9 { "Negative" } else { "Positive" }).into());
        let pam50 = ["LumA", "LumB", "Her2", "Basal", "claudin-low", "Normal"];
        row.push(pam50[rng.random_range(0..pam50.len())].into());
        row.push((if rng.random::<bool>() { "MASTECTOMY" } else { "BREAST CONSERVING" }).into());
        row.push(format!("{}", rng.random_range(1..=5)));

        let flags = f64::from(u8::from(zc > 0.0)) + f64::from(u8::from(zg > 0.0));
        let rate = BASE_HAZARD * (GAMMA * (zc + zg) + log_hr * flags / 2.0).exp();
        let t_disease = Exp::new(rate).expect("positive rate").sample(rng);
        let t_other = other.sample(rng);
        let t_censor = censor.sample(rng);
        let (t, status) = if t_disease <= t_other && t_disease <= t_censor {
            (t_disease, "Died of Disease")
        } else if t_other <= t_censor {
            (t_other, "Died of Other Causes")
        } else {
            (t_censor, "Living")
        };
        row.push(num(t));
        row.push((if status == "Living" { "1" } else { "0" }).into());
        row.push(status.into());

        for (j, &sd) in scales.iter().enumerate() {
            let x = if j < N_SIGNAL_GENES {
                let sign = if j % 3 == 2 { -1.0 } else { 1.0 };
                sign * readout(zg, GENE_LOADING, rng)
            } else {
                StandardNormal.sample(rng)
            };
            row.push(num(sd * x));
        }
        for _ in 0..N_MUTATIONS {
            row.push((if rng.random::<f64>() < 0.02 { "1" } else { "0" }).into());
        }
        rows.push(row);
    }
    Ok(SynthCohort {
        header,
        rows,
        z_clin,
        z_gen,
    })
}

/// Write `cohort.csv` and a matching `config.json` into `dir`.
pub fn write_synth(dir: &Path, params: &SynthParams) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cohort = generate(params)?;
    let csv_path = dir.join("cohort.csv");
    cohort.write_csv(&csv_path)?;
    let mut cfg = PipelineConfig {
        input_csv: PathBuf::from("cohort.csv"),
        view_spec: cohort.view_spec(),
        output_dir: PathBuf::from("report"),
        ..Default::default()
    }
    .with_seed(params.seed);
    cfg.genomic_top_k = 50;
    let cfg_path = dir.join("config.json");
    let text = serde_json::to_string_pretty(&cfg)?;
    fs::write(&cfg_path, text + "\n").map_err(|e| Error::io(&cfg_path, e))?;
    Ok((csv_path, cfg_path))
}
