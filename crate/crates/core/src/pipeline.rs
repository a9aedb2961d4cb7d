//! Pipeline configuration and the end-to-end run: load, endpoint, views,
//! out-of-fold scores, copula fits, goodness of fit, strata.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cohort::{
    build_endpoint, filter_cohort, load_cohort, split_views, status_column, variance_filter,
    CohortTable, ViewSpec,
};
use crate::copula::{fit, kendall_tau_with, CopulaModel, Family, PseudoSample, TauVariant};
use crate::copula::family::fit_is_bounded;
use crate::error::{Error, Result, Stage, StageExt};
use crate::gof::{parametric_bootstrap, select_best_copula, BootstrapOptions, GofResult};
use crate::ml::{
    oof_scores, roc_auc, select_best_model, stratified_kfold_keyed, BoostingParams, CvRecord,
    ElasticNetParams, FoldAssignment, ForestParams, ModelFamily, ModelParams, ModelSpec,
};
use crate::rng::{derive_seed, text_key, TAG_FOLDS, TAG_MODEL};
use crate::survival::{joint_strata, strata_km, StrataCurves, StratumAssignment};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            k: 5,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    pub families: Vec<ModelFamily>,
    pub elastic_net: ElasticNetParams,
    pub random_forest: ForestParams,
    pub gradient_boosting: BoostingParams,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        Self {
            families: ModelFamily::ALL.to_vec(),
            elastic_net: ElasticNetParams::default(),
            random_forest: ForestParams::default(),
            gradient_boosting: BoostingParams::default(),
        }
    }
}

impl ModelsConfig {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            elastic_net: self.elastic_net,
            random_forest: self.random_forest,
            gradient_boosting: self.gradient_boosting,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CopulaConfig {
    pub families: Vec<Family>,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub m: Option<usize>,
    pub seed: u64,
    pub refit: bool,
    pub tau: TauVariant,
}

impl Default for CopulaConfig {
    fn default() -> Self {
        Self {
            families: Family::ALL.to_vec(),
            replicates: 1000,
            m: None,
            seed: DEFAULT_SEED,
            refit: true,
            tau: TauVariant::A,
        }
    }
}

impl CopulaConfig {
    pub fn bootstrap_options(&self) -> BootstrapOptions {
        BootstrapOptions {
            replicates: self.replicates,
            m: self.m,
            seed: self.seed,
            refit: self.refit,
            keep_replicates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrataConfig {
    pub min_size: usize,
    /// Status column for Kaplan–Meier events; `None` reuses the endpoint's
    /// cancer-death indicator.
    pub event_column: Option<String>,
}

impl Default for StrataConfig {
    fn default() -> Self {
        Self {
            min_size: 10,
            event_column: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input_csv: PathBuf,
    pub view_spec: ViewSpec,
    pub horizon: f64,
    pub genomic_top_k: usize,
    pub cv: CvConfig,
    pub models: ModelsConfig,
    pub copula: CopulaConfig,
    pub strata: StrataConfig,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input_csv: PathBuf::new(),
            view_spec: ViewSpec::default(),
            horizon: 60.0,
            genomic_top_k: 50,
            cv: CvConfig::default(),
            models: ModelsConfig::default(),
            copula: CopulaConfig::default(),
            strata: StrataConfig::default(),
            output_dir: PathBuf::from("report"),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl PipelineConfig {
    /// Read a JSON config; relative paths resolve against the config's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e).at(Stage::Config))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())).at(Stage::Config))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.input_csv.is_relative() && !cfg.input_csv.as_os_str().is_empty() {
            cfg.input_csv = base.join(&cfg.input_csv);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    /// Seed override: sets the fold/model seed and the bootstrap seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.cv.seed = seed;
        self.copula.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check = || -> Result<()> {
            if self.input_csv.as_os_str().is_empty() {
                return Err(config_err("input_csv is required"));
            }
            if !self.input_csv.is_file() {
                return Err(config_err(format!(
                    "input_csv {} does not exist",
                    self.input_csv.display()
                )));
            }
            if self.cv.k < 2 {
                return Err(config_err(format!("cv.k must be >= 2, got {}", self.cv.k)));
            }
            if self.copula.replicates < 1 {
                return Err(config_err("copula.B must be >= 1"));
            }
            if self.copula.m.is_some_and(|m| m < 2) {
                return Err(config_err("copula.m must be >= 2"));
            }
            if !(self.horizon.is_finite() && self.horizon > 0.0) {
                return Err(config_err(format!("horizon must be > 0, got {}", self.horizon)));
            }
            if self.genomic_top_k == 0 {
                return Err(config_err("genomic_top_k must be >= 1"));
            }
            if self.models.families.is_empty() {
                return Err(config_err("models.families is empty"));
            }
            if self.copula.families.is_empty() {
                return Err(config_err("copula.families is empty"));
            }
            if self.strata.min_size == 0 {
                return Err(config_err("strata.min_size must be >= 1"));
            }
            self.models
                .params()
                .validate()
                .map_err(|e| config_err(e.to_string()))
        };
        check().stage(Stage::Config)
    }
}

/// Patients with a determinate 5-year outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticCohort {
    pub ids: Vec<String>,
    pub y: Vec<u8>,
    pub time: Vec<f64>,
    /// Cancer-death indicator over full follow-up.
    pub event: Vec<u8>,
    /// Event indicator used for Kaplan–Meier curves.
    pub km_event: Vec<u8>,
    pub n_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSummary {
    pub clinical_columns: Vec<String>,
    pub genomic_columns: Vec<String>,
    /// Genomic columns before the variance filter.
    pub genomic_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewScores {
    pub view: String,
    pub family: ModelFamily,
    pub scores: Vec<f64>,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreStage {
    pub fold_seed: u64,
    pub fold_of: Vec<usize>,
    pub runs: Vec<ViewScores>,
    pub records: Vec<CvRecord>,
    pub clinical_model: ModelFamily,
    pub genomic_model: ModelFamily,
    pub p_clin: Vec<f64>,
    pub p_gen: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaFit {
    #[serde(flatten)]
    pub model: CopulaModel,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaStage {
    pub sample: PseudoSample,
    pub tau: f64,
    pub fits: Vec<CopulaFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofStage {
    pub results: Vec<GofResult>,
    pub best: Family,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrataStage {
    pub assignment: StratumAssignment,
    pub curves: StrataCurves,
}

/// Everything a run produced; later stages are `None` when the run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub config: PipelineConfig,
    pub completed: Stage,
    pub input_sha256: String,
    pub n_loaded: usize,
    pub cohort: Option<AnalyticCohort>,
    pub views: Option<ViewSummary>,
    pub scores: Option<ScoreStage>,
    pub copula: Option<CopulaStage>,
    pub gof: Option<GofStage>,
    pub strata: Option<StrataStage>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

fn row_ids(table: &CohortTable, id_column: &str) -> Vec<String> {
    match table.column(id_column) {
        Some(col) => (0..table.n_rows())
            .map(|r| col.data.text(r).unwrap_or_else(|| format!("row{r}")))
            .collect(),
        None => (0..table.n_rows()).map(|r| format!("row{r}")).collect(),
    }
}

fn column_names(t: &CohortTable) -> Vec<String> {
    t.column_names().into_iter().map(str::to_owned).collect()
}

const VIEW_CLINICAL: &str = "clinical";
const VIEW_GENOMIC: &str = "genomic";

/// Run every stage up to and including `until`.
pub fn run_pipeline(config: &PipelineConfig, until: Stage) -> Result<ReportBundle> {
    config.validate()?;
    let mut bundle = ReportBundle {
        config: config.clone(),
        completed: Stage::Config,
        input_sha256: String::new(),
        n_loaded: 0,
        cohort: None,
        views: None,
        scores: None,
        copula: None,
        gof: None,
        strata: None,
    };
    let stop = |b: &ReportBundle| b.completed >= until;
    if stop(&bundle) {
        return Ok(bundle);
    }

    let t0 = Instant::now();
    let table = load_cohort(&config.input_csv).stage(Stage::Load)?;
    bundle.input_sha256 = sha256_file(&config.input_csv).stage(Stage::Load)?;
    bundle.n_loaded = table.n_rows();
    bundle.completed = Stage::Load;
    log::info!("loaded {} rows x {} columns", table.n_rows(), table.n_cols());
    if stop(&bundle) {
        return Ok(bundle);
    }

    let endpoint = build_endpoint(&table, config.horizon).stage(Stage::Endpoint)?;
    let km_status = match &config.strata.event_column {
        Some(name) => Some(status_column(&table, name).stage(Stage::Endpoint)?),
        None => None,
    };
    let keep: Vec<usize> = (0..endpoint.len()).filter(|&r| endpoint.y[r].is_some()).collect();
    let (analytic, ep) = filter_cohort(&table, &endpoint).stage(Stage::Endpoint)?;
    let (time, event) = ep.survival();
    let km_event = match km_status {
        Some(status) => keep
            .iter()
            .map(|&r| {
                status[r].ok_or_else(|| {
                    Error::InvalidInput(format!("unreadable KM event status in row {r}"))
                })
            })
            .collect::<Result<Vec<u8>>>()
            .stage(Stage::Endpoint)?,
        None => event.clone(),
    };
    let ids = row_ids(&analytic, &config.view_spec.id_column);
    let y = ep.labels();
    log::info!(
        "analytic cohort: {} of {} patients, {} events within {} months",
        y.len(),
        table.n_rows(),
        y.iter().filter(|&&l| l == 1).count(),
        config.horizon
    );
    bundle.cohort = Some(AnalyticCohort {
        ids,
        y,
        time,
        event,
        km_event,
        n_excluded: table.n_rows() - analytic.n_rows(),
    });
    bundle.completed = Stage::Endpoint;
    if stop(&bundle) {
        return Ok(bundle);
    }

    let (clinical, genomic_all) = split_views(&analytic, &config.view_spec).stage(Stage::Views)?;
    let genomic = variance_filter(&genomic_all, config.genomic_top_k).stage(Stage::Views)?;
    bundle.views = Some(ViewSummary {
        clinical_columns: column_names(&clinical),
        genomic_columns: column_names(&genomic),
        genomic_candidates: genomic_all.n_cols(),
    });
    bundle.completed = Stage::Views;
    if stop(&bundle) {
        return Ok(bundle);
    }

    let cohort = bundle.cohort.as_ref().expect("endpoint stage ran");
    let scores = score_views(config, cohort, &clinical, &genomic).stage(Stage::Scores)?;
    bundle.scores = Some(scores);
    bundle.completed = Stage::Scores;
    log::info!("scores done in {:.1?}", t0.elapsed());
    if stop(&bundle) {
        return Ok(bundle);
    }

    let sc = bundle.scores.as_ref().expect("scores stage ran");
    let copula = fit_copulas(config, &sc.p_clin, &sc.p_gen).stage(Stage::Copula)?;
    log::info!("kendall tau of the two scores: {:.4}", copula.tau);
    bundle.copula = Some(copula);
    bundle.completed = Stage::Copula;
    if stop(&bundle) {
        return Ok(bundle);
    }

    let cs = bundle.copula.as_ref().expect("copula stage ran");
    let opts = config.copula.bootstrap_options();
    let results = config
        .copula
        .families
        .iter()
        .map(|&fam| parametric_bootstrap(&cs.sample, fam, &opts))
        .collect::<Result<Vec<_>>>()
        .stage(Stage::Gof)?;
    let best = select_best_copula(&results)
        .ok_or_else(|| Error::InvalidInput("no copula family evaluated".into()))
        .stage(Stage::Gof)?;
    for r in &results {
        log::info!("gof {}: S = {:.5}, p = {:.4}", r.family, r.statistic, r.p_value);
    }
    bundle.gof = Some(GofStage { results, best });
    bundle.completed = Stage::Gof;
    log::info!("goodness of fit done in {:.1?}", t0.elapsed());
    if stop(&bundle) {
        return Ok(bundle);
    }

    let sc = bundle.scores.as_ref().expect("scores stage ran");
    let cohort = bundle.cohort.as_ref().expect("endpoint stage ran");
    let assignment = joint_strata(&sc.p_clin, &sc.p_gen).stage(Stage::Strata)?;
    let curves = strata_km(
        &assignment,
        &cohort.time,
        &cohort.km_event,
        config.strata.min_size,
    )
    .stage(Stage::Strata)?;
    for (s, n) in &curves.omitted {
        log::warn!("stratum {s} omitted: {n} patients < min_size {}", config.strata.min_size);
    }
    bundle.strata = Some(StrataStage { assignment, curves });
    bundle.completed = Stage::Strata;
    if stop(&bundle) {
        return Ok(bundle);
    }
    bundle.completed = Stage::Report;
    Ok(bundle)
}

fn view_id(view: &str) -> u64 {
    if view == VIEW_CLINICAL {
        1
    } else {
        2
    }
}

fn family_id(f: ModelFamily) -> u64 {
    match f {
        ModelFamily::ElasticNetLr => 1,
        ModelFamily::RandomForest => 2,
        ModelFamily::GradientBoosting => 3,
    }
}

fn score_views(
    config: &PipelineConfig,
    cohort: &AnalyticCohort,
    clinical: &CohortTable,
    genomic: &CohortTable,
) -> Result<ScoreStage> {
    let keys: Vec<u64> = cohort.ids.iter().map(|s| text_key(s)).collect();
    let fold_seed = derive_seed(config.cv.seed, &[TAG_FOLDS]);
    let folds: FoldAssignment = stratified_kfold_keyed(&cohort.y, &keys, config.cv.k, fold_seed)?;
    let params = config.models.params();

    let mut families = config.models.families.clone();
    families.sort();
    families.dedup();

    let mut runs = Vec::new();
    let mut records = Vec::new();
    for (view, table) in [(VIEW_CLINICAL, clinical), (VIEW_GENOMIC, genomic)] {
        for &family in &families {
            let t = Instant::now();
            let spec = ModelSpec {
                family,
                params,
                seed: derive_seed(config.cv.seed, &[TAG_MODEL, view_id(view), family_id(family)]),
            };
            let scores = oof_scores(table, &cohort.y, &spec, &folds, &keys)?;
            let auc = roc_auc(&scores, &cohort.y)?;
            log::info!("{view} {family}: cv auc {auc:.4} ({:.1?})", t.elapsed());
            records.push(CvRecord {
                view: view.to_owned(),
                family,
                auc,
            });
            runs.push(ViewScores {
                view: view.to_owned(),
                family,
                scores,
                auc,
            });
        }
    }

    let pick = |view: &str| -> Result<(ModelFamily, Vec<f64>)> {
        let view_records: Vec<CvRecord> = records.iter().filter(|r| r.view == view).cloned().collect();
        let best = select_best_model(&view_records)
            .ok_or_else(|| Error::InvalidInput(format!("no models scored for {view}")))?
            .family;
        let scores = runs
            .iter()
            .find(|r| r.view == view && r.family == best)
            .expect("selected run exists")
            .scores
            .clone();
        Ok((best, scores))
    };
    let (clinical_model, p_clin) = pick(VIEW_CLINICAL)?;
    let (genomic_model, p_gen) = pick(VIEW_GENOMIC)?;
    Ok(ScoreStage {
        fold_seed,
        fold_of: folds.fold_of,
        runs,
        records,
        clinical_model,
        genomic_model,
        p_clin,
        p_gen,
    })
}

fn fit_copulas(config: &PipelineConfig, p_clin: &[f64], p_gen: &[f64]) -> Result<CopulaStage> {
    let sample = PseudoSample::from_scores(p_clin, p_gen)?;
    let tau = kendall_tau_with(&sample.u, &sample.v, config.copula.tau)?;
    let fits = Family::ALL
        .into_iter()
        .map(|fam| {
            Ok(CopulaFit {
                model: fit(fam, tau)?,
                bounded: fit_is_bounded(fam, tau),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CopulaStage { sample, tau, fits })
}
