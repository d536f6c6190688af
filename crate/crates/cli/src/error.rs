use std::path::Path;

use cellprobe::catalog::CatalogError;
use cellprobe::diffusion::DiffusionError;
use cellprobe::gan::GanError;
use cellprobe::inject::InjectError;
use cellprobe::metrics::MetricsError;
use cellprobe::nn::NnError;
use cellprobe::study::StudyError;

/// Exit status 1: the inputs are missing, malformed or inconsistent.
/// Exit status 2: the inputs were fine but the run failed (numeric
/// breakdown, unwritable output).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    /// Prefix the message with an input path.
    pub fn at(self, path: &Path) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            CliError::Runtime(m) => CliError::Runtime(format!("{}: {m}", path.display())),
        }
    }

    pub fn input(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("{}: {e}", path.display()))
    }

    pub fn output(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<InjectError> for CliError {
    fn from(e: InjectError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::Numeric(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<GanError> for CliError {
    fn from(e: GanError) -> Self {
        match e {
            GanError::Validation(m) => CliError::Validation(m),
            GanError::Numeric { .. } => CliError::Runtime(e.to_string()),
            GanError::Nn(e) => e.into(),
        }
    }
}

impl From<DiffusionError> for CliError {
    fn from(e: DiffusionError) -> Self {
        match e {
            DiffusionError::Validation(m) => CliError::Validation(m),
            DiffusionError::Numeric(m) => CliError::Runtime(m),
            DiffusionError::Nn(e) => e.into(),
        }
    }
}
