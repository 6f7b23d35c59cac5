//! Energy per image, the hyperbolic cloud-latency model and speed-ups.

mod energy;
mod fit;
mod speedup;

use thiserror::Error;

pub use energy::{
    energy_rows_from_power, image_energy, summarize_all, summarize_energy, EnergyRow, EnergySummary,
};
pub use fit::{fit_hyperbolic, fit_hyperbolic_weighted, predict_latency, FitWeighting, HyperbolicFit};
pub use speedup::{asymptotic_speedup, min_speedup, SpeedupResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("no input rows")]
    EmptyInput,
    #[error("fit needs at least two distinct dataset sizes")]
    DegenerateInput,
    #[error("the two latency series share no usable dataset size")]
    NoCommonSizes,
    #[error("independent term {0} ms is not positive")]
    NonPositiveIT(f64),
    #[error("rows mix several task/device groups")]
    MixedGroups,
    #[error("no usable latency for dataset size {0}")]
    MissingLatency(u32),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl AnalysisError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::EmptyInput => "EmptyInput",
            Self::DegenerateInput => "DegenerateInput",
            Self::NoCommonSizes => "NoCommonSizes",
            Self::NonPositiveIT(_) => "NonPositiveIT",
            Self::MixedGroups => "MixedGroups",
            Self::MissingLatency(_) => "MissingLatency",
            Self::InvalidInput(_) => "InvalidInput",
        }
    }
}
