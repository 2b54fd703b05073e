//! Experiment harness around the numerical core: configuration, deterministic
//! RNG streams, the equidistribution runner with CSV/JSON reporting, rate and
//! exceptional-set fitting, and the moderate/covering/Hölder suites exposed by
//! the `zerolab` binary.
//!
//! Determinism contract: every sample draws from its own counter-derived RNG
//! stream, so reports are byte-identical for a fixed config and seed no matter
//! how many workers run the samples or in which order they finish.

pub mod config;
pub mod ratefit;
pub mod runner;
pub mod stream;
pub mod suites;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("measure: {0}")]
    Measure(#[from] zerolab_core::measures::MeasureError),
    #[error("potential: {0}")]
    Potential(#[from] zerolab_core::potentials::PotentialError),
    #[error("section space: {0}")]
    Section(#[from] zerolab_core::sections::SectionError),
    #[error("rate fit: {0}")]
    Fit(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}
