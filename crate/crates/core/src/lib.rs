//! Benchmarking and energy analysis for edge ML inference accelerators.
//!
//! The crate measures or replays per-image inference latency, segments
//! power-meter traces into experiment phases, computes per-image energy,
//! fits the cloud-latency overhead model, computes speed-ups, and compares
//! prediction outputs across devices.
//!
//! | module | purpose |
//! |---|---|
//! | [`trace`] | power logs, phase segmentation, stable power |
//! | [`timing`] | per-image latency under the three timing protocols |
//! | [`analysis`] | energy, latency-model fit, speed-ups |
//! | [`quality`] | Dice, classification error, confusion matrices |
//! | [`harness`] | runner protocol, benchmark loop, fixture replay |
//! | [`report`] | CSV/markdown tables and plot data |
//! | [`cli`] | the `edgebench` command |

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fixture;
pub mod harness;
pub mod quality;
pub mod report;
pub mod stats;
pub mod timing;
pub mod trace;

pub use error::{Error, Result};

/// Environment variable selecting the log level (`error`, `warn`, `info`,
/// `debug`); defaults to `warn`.
pub const LOG_ENV: &str = "EDGEBENCH_LOG";

/// Installs the stderr logger; later calls are no-ops.
pub fn init_logging() {
    let level = std::env::var(LOG_ENV).unwrap_or_else(|_| "warn".into());
    let _ = env_logger::Builder::new()
        .parse_filters(&level)
        .format_timestamp(None)
        .try_init();
}
