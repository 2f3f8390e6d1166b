//! Device-level time synchronization error analysis for 5G NR.
//!
//! Reference time reaches a device over the air as a broadcast timestamp
//! corrected by a timing-advance (TA) derived propagation delay estimate.
//! Every step contributes error: timestamp granularity, TA quantization,
//! TOA measurement noise and multipath, device adjustment jitter, and
//! clock drift between resyncs. This crate models those pieces end to end:
//!
//! * [`timing`] — NR numerology constants and TOA <-> TA conversion.
//! * [`channel`] — LOS/NLOS perturbation models over deterministic
//!   seeded random streams.
//! * [`simulator`] — Monte Carlo engine: empirical CDFs, quantiles, the
//!   confidence bound `P_e`, and multi-TA averaging.
//! * [`budget`] — published timing-error components, aggregation policies
//!   and the 1 us target check.
//! * [`pipeline`] — periodic-resync traces of a drifting device clock.
//! * [`config`] — JSON-facing configuration for scenarios and pipelines.
//!
//! Everything is deterministic: a scenario is a pure function of its
//! configuration, including the seed, independent of worker count.

pub mod budget;
pub mod channel;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod simulator;
pub mod timing;

pub use budget::{
    aggregate, builtin_components, substitute_ta_error, tae_requirements, BudgetComponent,
    BudgetReport, BudgetValue, Policy, TaeVariant,
};
pub use channel::{
    perturb_toa, sample_error, LosGaussianModel, NlosModel, RandomStream, ToaErrorModel,
};
pub use config::{ErrorModelConfig, PipelineFileConfig, ScenarioConfig, ToaPriorConfig};
pub use error::{Error, Result};
pub use pipeline::{
    broadcast_rti, device_correct, max_resync_interval, simulate_sync_epochs, DeviceClock,
    EpochRecord, PipelineConfig, ResyncBound, RtiMessage,
};
pub use simulator::{
    average_ta, run_scenario, sweep_avg_windows, EmpiricalCdf, Scenario, SimResult, ToaPrior,
};
pub use timing::{
    apply_relative_ta, max_quantization_error, quantize_to_grid, quantize_toa, ta_to_toa_estimate,
    timing_constants, Numerology, QuantizedToa, Saturation, TaCommandAbsolute, TaCommandRelative,
    TimingConstants,
};
