use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fuse_core::cohort::{load_cohort, ColumnData};
use fuse_core::copula::{fit, CopulaModel, Family, PseudoSample};
use fuse_core::gof::{parametric_bootstrap, BootstrapOptions};
use fuse_core::pipeline::{run_pipeline, PipelineConfig, DEFAULT_SEED};
use fuse_core::report::write_report;
use fuse_core::synth::{write_synth, SynthParams};
use fuse_core::{Error, Result, Stage};

/// Copula fusion of clinical and genomic risk scores.
#[derive(Debug, Parser)]
#[command(name = "fuse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the pipeline from a JSON config and write the report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Stop after this stage (config, load, endpoint, views, scores, copula, gof, strata, report).
        #[arg(long, default_value = "report")]
        stage: Stage,
        /// Override the cross-validation and bootstrap seeds.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic cohort and a matching config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 800)]
        n: usize,
        #[arg(long, default_value = "gaussian")]
        copula: Family,
        /// Gaussian correlation of the latent risks.
        #[arg(long, default_value_t = 0.63)]
        rho: f64,
        /// Clayton / Gumbel parameter; defaults to the value with the same tau as `rho`.
        #[arg(long)]
        theta: Option<f64>,
        /// Hazard multiplier of high/high over low/low latent risk.
        #[arg(long, default_value_t = 4.0)]
        hazard_ratio: f64,
    },
    /// Goodness of fit for one family on the `p_clin`, `p_gen` columns of a scores file.
    Gof {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        family: Family,
        #[arg(long = "B", default_value_t = 1000)]
        b: usize,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("FUSE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("FUSE_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn run(config: &Path, stage: Stage, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = PipelineConfig::load(config)?;
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    let bundle = run_pipeline(&cfg, stage)?;
    let files = write_report(&bundle, &cfg.output_dir).map_err(|e| e.at(Stage::Report))?;
    if let (Some(sc), Some(g)) = (&bundle.scores, &bundle.gof) {
        log::info!(
            "selected {} (clinical), {} (genomic), {} copula",
            sc.clinical_model,
            sc.genomic_model,
            g.best
        );
    }
    println!("{}", cfg.output_dir.display());
    for f in files {
        log::debug!("wrote {}", f.display());
    }
    Ok(())
}

fn synth(out: &Path, params: SynthParams) -> Result<()> {
    let (csv, cfg) = write_synth(out, &params)?;
    println!("{}\n{}", csv.display(), cfg.display());
    Ok(())
}

fn synth_param(family: Family, rho: f64, theta: Option<f64>) -> Result<f64> {
    match (family, theta) {
        (Family::Gaussian, _) => Ok(rho),
        (_, Some(t)) => Ok(t),
        (f, None) => {
            let tau = CopulaModel::new(Family::Gaussian, rho)?.tau;
            Ok(fit(f, tau)?.param)
        }
    }
}

fn numeric_column(data: &ColumnData, name: &str) -> Result<Vec<f64>> {
    match data {
        ColumnData::Numeric(v) => v
            .iter()
            .enumerate()
            .map(|(i, x)| x.ok_or_else(|| Error::InvalidInput(format!("missing {name} in row {i}"))))
            .collect(),
        _ => Err(Error::InvalidInput(format!("column {name} is not numeric"))),
    }
}

fn gof(scores: &Path, family: Family, opts: BootstrapOptions) -> Result<()> {
    let table = load_cohort(scores).map_err(|e| e.at(Stage::Load))?;
    let col = |name: &str| -> Result<Vec<f64>> {
        let c = table
            .column(name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))?;
        numeric_column(&c.data, name)
    };
    let sample = PseudoSample::from_scores(&col("p_clin")?, &col("p_gen")?).map_err(|e| e.at(Stage::Copula))?;
    let res = parametric_bootstrap(&sample, family, &opts).map_err(|e| e.at(Stage::Gof))?;
    println!("{}", serde_json::to_string_pretty(&res)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Run {
            config,
            stage,
            seed,
            out,
        } => run(&config, stage, seed, out),
        Command::Synth {
            out,
            seed,
            n,
            copula,
            rho,
            theta,
            hazard_ratio,
        } => synth_param(copula, rho, theta).and_then(|param| {
            synth(
                &out,
                SynthParams {
                    n,
                    family: copula,
                    param,
                    hazard_ratio,
                    seed,
                },
            )
        }),
        Command::Gof {
            scores,
            family,
            b,
            m,
            seed,
        } => gof(
            &scores,
            family,
            BootstrapOptions {
                replicates: b,
                m,
                seed,
                ..Default::default()
            },
        ),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
