use std::path::{Path, PathBuf};
use std::sync::Arc;

use chartquiz_core::features::{FeatureDeltas, McqFeatureSet};
use chartquiz_core::students::CohortSpec;
use chartquiz_core::studio::{BenchmarkRequest, Studio, StudioConfig, StudioError};
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "chartquiz", version, about = "Author chart questions and try them on simulated students")]
pub struct Cli {
    /// TOML config file; CHARTQUIZ_* environment variables override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Generate a question version; the project is created if it does not exist.
    Generate {
        #[arg(long)]
        project: String,
        /// JSON feature values applied over the defaults.
        #[arg(long)]
        features_file: PathBuf,
    },
    /// Simulate the project cohort answering a version.
    Simulate {
        #[arg(long)]
        project: String,
        #[arg(long)]
        version: String,
        /// A cohort spec (.json) or a roster (.csv); replaces the current cohort.
        #[arg(long)]
        cohort_file: Option<PathBuf>,
    },
    /// Write sankey, strategy and version statistics JSON plus SVG plots for a run.
    Report {
        #[arg(long)]
        project: String,
        #[arg(long)]
        run: String,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Score how well each model's simulated students match their personas.
    BenchAlignment {
        #[arg(long, value_delimiter = ',', default_value = "mock-1")]
        models: Vec<String>,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        #[arg(long, default_value_t = 20)]
        cohort_size: usize,
        /// Also write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, StudioError> {
    std::fs::read_to_string(path).map_err(|e| StudioError::InvalidInput(format!("{}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, StudioError> {
    serde_json::from_str(&read(path)?).map_err(|e| StudioError::InvalidInput(format!("{}: {e}", path.display())))
}

fn print(doc: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(doc).expect("documents serialize"));
}

/// Runs a parsed command. Output goes to stdout; errors are returned.
pub fn run(cli: Cli) -> Result<(), StudioError> {
    let config = StudioConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Serve { port } => serve(config, port),
        Command::Generate { project, features_file } => {
            let deltas: FeatureDeltas = parse(&features_file)?;
            let features = McqFeatureSet::default().with_deltas(&deltas);
            let studio = Studio::open(config)?;
            studio.ensure_project(&project)?;
            print(&studio.generate(&project, Some(features))?);
            Ok(())
        }
        Command::Simulate { project, version, cohort_file } => {
            let studio = Studio::open(config)?;
            if let Some(path) = cohort_file {
                if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                    studio.import_cohort(&project, &read(&path)?)?;
                } else {
                    studio.generate_cohort(&project, &parse::<CohortSpec>(&path)?)?;
                }
            }
            let run = studio.simulate(&project, &version)?;
            print(&json!({
                "project": project,
                "run_id": run.id,
                "version_id": run.question_version_id,
                "accuracy": run.accuracy(),
                "responses": run.responses().count(),
                "failed": run.error_count(),
            }));
            Ok(())
        }
        Command::Report { project, run, out } => {
            let studio = Studio::open(config)?;
            for path in crate::report::write_report(&studio, &project, &run, &out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::BenchAlignment { models, rounds, cohort_size, out } => {
            let studio = Studio::open(config)?;
            let report = studio.benchmark(&BenchmarkRequest {
                model_ids: models,
                rounds,
                cohort: Some(CohortSpec { size: cohort_size, ..Default::default() }),
                question_features: Vec::new(),
                weights: None,
            })?;
            print!("{}", report.to_table());
            if let Some(path) = out {
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                std::fs::write(&path, text + "\n").map_err(|e| StudioError::Config(format!("{}: {e}", path.display())))?;
            }
            Ok(())
        }
    }
}

fn serve(config: StudioConfig, port: u16) -> Result<(), StudioError> {
    let studio = Arc::new(Studio::open(config)?);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| StudioError::Config(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", port))
            .await
            .map_err(|e| StudioError::Config(format!("binding port {port}: {e}")))?;
        eprintln!("chartquiz listening on {}", listener.local_addr().map_err(|e| StudioError::Config(e.to_string()))?);
        axum::serve(listener, crate::api::router(studio)).await.map_err(|e| StudioError::Config(e.to_string()))
    })
}
