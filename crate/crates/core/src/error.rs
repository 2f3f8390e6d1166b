//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by timing, simulation, budget and pipeline operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Numerology outside the supported set (mu 0..=3, SCS 15/30/60/120 kHz).
    #[error("unsupported numerology: {0}")]
    UnsupportedNumerology(String),

    /// Timing-advance index outside its permitted range.
    #[error("TA index {index} out of range 0..={max}")]
    TaIndexOutOfRange { index: i64, max: u16 },

    /// Scenario or pipeline configuration rejected by validation.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// Operation requires at least one sample or command.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Quantile probability outside (0, 1].
    #[error("quantile probability {0} outside (0, 1]")]
    InvalidQuantile(f64),

    /// Subcarrier spacing not one of 15/30/60/120 kHz.
    #[error("unknown subcarrier spacing {0} kHz (supported: 15, 30, 60, 120)")]
    UnknownScs(u32),

    /// Budget component name not present in the component list.
    #[error("unknown budget component: {0}")]
    UnknownComponent(String),

    /// Simulation result and budget computed for different numerologies.
    #[error("numerology mismatch: simulation ran at {sim_scs_khz} kHz, budget requested {budget_scs_khz} kHz")]
    NumerologyMismatch {
        sim_scs_khz: u32,
        budget_scs_khz: u32,
    },

    /// Trial count beyond what full sample retention supports.
    #[error("{requested} trials exceed the retention limit of {limit}")]
    TooManyTrials { requested: u64, limit: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
