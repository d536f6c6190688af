//! `cellprobe` command-line tool: phantom data sets, generator training and
//! synthesis, study plans and offline reports, probe-injected annotation
//! tasks, and plot-ready exports.
//!
//! Every command is a plain function returning an [`Outcome`] so the binary
//! and the tests drive exactly the same code.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

mod error;
mod inject;
mod models;
mod study;

pub use error::CliError;
pub use study::{simulate_sessions, Judge};

/// What a successful command did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    fn new(summary: impl Into<String>) -> Self {
        Self {
            summary: summary.into(),
            artifacts: Vec::new(),
        }
    }

    fn with(mut self, path: impl Into<PathBuf>) -> Self {
        self.artifacts.push(path.into());
        self
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cellprobe",
    version,
    about = "Synthetic cell-image studies and annotator quality probes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a labelled phantom catalog (PPM files plus manifest.json).
    Phantoms(PhantomsArgs),
    /// Train a generator on a catalog.
    Train {
        #[command(subcommand)]
        model: TrainModel,
    },
    /// Sample a labelled synthetic catalog from a checkpoint.
    Synthesize(SynthesizeArgs),
    /// Build, simulate and report real-vs-fake studies.
    Study {
        #[command(subcommand)]
        command: StudyCommand,
    },
    /// Plan and score probe-injected annotation tasks.
    Inject {
        #[command(subcommand)]
        command: InjectCommand,
    },
    /// Write report figures in a plot-ready format.
    Export {
        #[command(subcommand)]
        format: ExportFormat,
    },
}

#[derive(Debug, Args)]
pub struct PhantomsArgs {
    #[arg(long)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum TrainModel {
    /// Conditional GAN.
    Gan(TrainArgs),
    /// Conditional denoising diffusion model.
    Dm(TrainArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Catalog directory holding manifest.json and the images.
    #[arg(long)]
    pub dataset: PathBuf,
    /// TOML file with model hyper-parameters; unknown keys are rejected.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured epoch count.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Checkpoint file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// GAN or diffusion checkpoint.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum StudyCommand {
    /// Draw a study plan from a catalog.
    New {
        /// Catalog directory; repeat to merge real and synthetic catalogs.
        #[arg(long, required = true)]
        catalog: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Plan file to write (JSON, holds ground truth).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run scripted participants through a plan and write the response log.
    Simulate(SimulateArgs),
    /// Compute pick rates and confusion reports from a response log.
    Report {
        #[arg(long)]
        log: PathBuf,
        /// Count only single-image trials in the confusion matrices.
        #[arg(long)]
        singles_only: bool,
        /// Directory for report.json, report.txt and relative.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub sessions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probability a cGAN image is recognised as fake.
    #[arg(long, default_value_t = 0.9)]
    pub detect_cgan: f64,
    /// Probability a diffusion image is recognised as fake.
    #[arg(long, default_value_t = 0.5)]
    pub detect_dm: f64,
    /// Probability a real single image is judged real.
    #[arg(long, default_value_t = 0.7)]
    pub trust_real: f64,
    /// Response log to write (CSV).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum InjectCommand {
    /// Interleave labelled probes into a task.
    Plan(InjectPlanArgs),
    /// Score one annotator's submission against a plan.
    Score(InjectScoreArgs),
}

#[derive(Debug, Args)]
pub struct InjectPlanArgs {
    #[arg(long)]
    pub task: String,
    /// Catalog of the images to be annotated (real entries are used).
    #[arg(long)]
    pub items: PathBuf,
    /// Catalog of labelled probe candidates.
    #[arg(long)]
    pub probes: PathBuf,
    /// Use only this many real items, drawn with `--seed`.
    #[arg(long)]
    pub real_items: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0.1)]
    pub tv_budget: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for plan.json (ground truth), task.json and images/ (annotator view).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InjectScoreArgs {
    #[arg(long)]
    pub plan: PathBuf,
    /// JSON array of `{"item": ..., "class": ...}`.
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub annotator: String,
    /// Scoreboard JSON, read if present and rewritten.
    #[arg(long)]
    pub scores: PathBuf,
    /// TOML file with scoring constants.
    #[arg(long)]
    pub scoring: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ExportFormat {
    /// Long-format `scope,metric,value` table.
    Csv(ExportArgs),
    /// The canonical report JSON.
    Json(ExportArgs),
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub singles_only: bool,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Phantoms(a) => models::phantoms(a.per_class, a.seed, &a.out),
        Command::Train {
            model: TrainModel::Gan(a),
        } => models::train_gan(&a),
        Command::Train {
            model: TrainModel::Dm(a),
        } => models::train_dm(&a),
        Command::Synthesize(a) => models::synthesize(&a.model, a.per_class, a.seed, &a.out),
        Command::Study { command } => match command {
            StudyCommand::New { catalog, seed, out } => study::new_plan(&catalog, seed, &out),
            StudyCommand::Simulate(a) => study::simulate(&a),
            StudyCommand::Report { log, singles_only, out } => study::report(&log, !singles_only, out.as_deref()),
        },
        Command::Inject { command } => match command {
            InjectCommand::Plan(a) => inject::plan(&a),
            InjectCommand::Score(a) => inject::score(&a),
        },
        Command::Export { format } => match format {
            ExportFormat::Csv(a) => study::export_csv(&a.log, !a.singles_only, &a.out),
            ExportFormat::Json(a) => study::export_json(&a.log, !a.singles_only, &a.out),
        },
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::input(path, e))
}

fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    toml::from_str(&read_text(path)?).map_err(|e| CliError::input(path, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::output(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::output(path, e))
}
