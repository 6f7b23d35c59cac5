use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::fixture::FixtureError;
use crate::harness::HarnessError;
use crate::quality::QualityError;
use crate::report::ReportError;
use crate::timing::TimingError;
use crate::trace::TraceError;

/// Any error the library can surface, with a stable machine-readable name.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Timing(#[from] TimingError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Trace(e) => e.name(),
            Self::Timing(e) => e.name(),
            Self::Analysis(e) => e.name(),
            Self::Quality(e) => e.name(),
            Self::Harness(e) => e.name(),
            Self::Report(e) => e.name(),
            Self::Fixture(e) => e.name(),
            Self::Usage(_) => "UsageError",
            Self::Io(_) => "Io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
