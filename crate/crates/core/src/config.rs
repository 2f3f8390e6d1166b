//! Serializable configuration mirroring the scenario and pipeline types.
//!
//! Time-valued model parameters are given in seconds, either absolutely
//! (`sigma`) or relative to the slot width of the configured subcarrier
//! spacing (`sigma_rel`, in units of `T`). Exactly one of the two must be
//! present per quantity; `resolve` turns a config into validated domain
//! types with everything in absolute seconds.

use serde::{Deserialize, Serialize};

use crate::channel::{LosGaussianModel, NlosModel, ToaErrorModel};
use crate::error::{Error, Result};
use crate::pipeline::{DeviceClock, PipelineConfig};
use crate::simulator::{Scenario, ToaPrior};
use crate::timing::Numerology;

/// TOA prior in configuration form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ToaPriorConfig {
    UniformInSlot { center_index: u16 },
    UniformInRange { lo: f64, hi: f64 },
    Fixed { toa: f64 },
}

impl ToaPriorConfig {
    pub fn resolve(self) -> ToaPrior {
        match self {
            ToaPriorConfig::UniformInSlot { center_index } => {
                ToaPrior::UniformInSlot { center_index }
            }
            ToaPriorConfig::UniformInRange { lo, hi } => ToaPrior::UniformInRange { lo, hi },
            ToaPriorConfig::Fixed { toa } => ToaPrior::Fixed { toa },
        }
    }

    pub fn from_prior(prior: ToaPrior) -> Self {
        match prior {
            ToaPrior::UniformInSlot { center_index } => {
                ToaPriorConfig::UniformInSlot { center_index }
            }
            ToaPrior::UniformInRange { lo, hi } => ToaPriorConfig::UniformInRange { lo, hi },
            ToaPrior::Fixed { toa } => ToaPriorConfig::Fixed { toa },
        }
    }
}

/// Error model in configuration form; `*_rel` fields are in slot widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ErrorModelConfig {
    Los {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_rel: Option<f64>,
    },
    Nlos {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_detected: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_detected_rel: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_blocked: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_blocked_rel: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bias_bp: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bias_bp_rel: Option<f64>,
        p_detect: f64,
    },
}

fn resolve_pair(name: &str, abs: Option<f64>, rel: Option<f64>, slot_width: f64) -> Result<f64> {
    match (abs, rel) {
        (Some(v), None) => Ok(v),
        (None, Some(r)) => Ok(r * slot_width),
        (None, None) => Err(Error::InvalidScenario(format!(
            "missing `{name}` (or `{name}_rel`)"
        ))),
        (Some(_), Some(_)) => Err(Error::InvalidScenario(format!(
            "both `{name}` and `{name}_rel` given; pick one"
        ))),
    }
}

impl ErrorModelConfig {
    /// A LOS model with sigma given in slot widths.
    pub fn los_rel(sigma_rel: f64) -> Self {
        ErrorModelConfig::Los {
            sigma: None,
            sigma_rel: Some(sigma_rel),
        }
    }

    /// A LOS model with sigma in seconds.
    pub fn los_abs(sigma: f64) -> Self {
        ErrorModelConfig::Los {
            sigma: Some(sigma),
            sigma_rel: None,
        }
    }

    pub fn resolve(self, slot_width: f64) -> Result<ToaErrorModel> {
        match self {
            ErrorModelConfig::Los { sigma, sigma_rel } => {
                let sigma = resolve_pair("sigma", sigma, sigma_rel, slot_width)?;
                Ok(ToaErrorModel::Los(LosGaussianModel::new(sigma)?))
            }
            ErrorModelConfig::Nlos {
                sigma_detected,
                sigma_detected_rel,
                sigma_blocked,
                sigma_blocked_rel,
                bias_bp,
                bias_bp_rel,
                p_detect,
            } => {
                let sigma_detected = resolve_pair(
                    "sigma_detected",
                    sigma_detected,
                    sigma_detected_rel,
                    slot_width,
                )?;
                let sigma_blocked = resolve_pair(
                    "sigma_blocked",
                    sigma_blocked,
                    sigma_blocked_rel,
                    slot_width,
                )?;
                let bias_bp = resolve_pair("bias_bp", bias_bp, bias_bp_rel, slot_width)?;
                Ok(ToaErrorModel::Nlos(NlosModel::new(
                    sigma_detected,
                    sigma_blocked,
                    bias_bp,
                    p_detect,
                )?))
            }
        }
    }

    /// Canonical (absolute seconds) form of a resolved model.
    pub fn from_model(model: &ToaErrorModel) -> Self {
        match model {
            ToaErrorModel::Los(m) => ErrorModelConfig::los_abs(m.sigma),
            ToaErrorModel::Nlos(m) => ErrorModelConfig::Nlos {
                sigma_detected: Some(m.sigma_detected),
                sigma_detected_rel: None,
                sigma_blocked: Some(m.sigma_blocked),
                sigma_blocked_rel: None,
                bias_bp: Some(m.bias_bp),
                bias_bp_rel: None,
                p_detect: m.p_detect,
            },
        }
    }
}

fn default_bias_correction() -> f64 {
    0.0
}

/// File form of a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scs_khz: u32,
    pub toa_prior: ToaPriorConfig,
    pub error_model: ErrorModelConfig,
    pub trials: u64,
    pub avg_window: usize,
    pub seed: u64,
    pub confidence: f64,
    /// Constant subtracted from every estimate (seconds). Optional knob.
    #[serde(default = "default_bias_correction")]
    pub bias_correction: f64,
}

impl ScenarioConfig {
    pub fn resolve(&self) -> Result<Scenario> {
        let numerology = Numerology::from_scs_khz(self.scs_khz)?;
        let slot_width = numerology.constants().slot_width;
        let scenario = Scenario {
            numerology,
            toa_prior: self.toa_prior.resolve(),
            error_model: self.error_model.resolve(slot_width)?,
            trials: self.trials,
            avg_window: self.avg_window,
            seed: self.seed,
            confidence: self.confidence,
            bias_correction: self.bias_correction,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Canonical config for a resolved scenario, absolute units throughout.
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            scs_khz: s.numerology.scs_khz(),
            toa_prior: ToaPriorConfig::from_prior(s.toa_prior),
            error_model: ErrorModelConfig::from_model(&s.error_model),
            trials: s.trials,
            avg_window: s.avg_window,
            seed: s.seed,
            confidence: s.confidence,
            bias_correction: s.bias_correction,
        }
    }
}

fn default_granularity() -> f64 {
    PipelineConfig::DEFAULT_GRANULARITY
}

fn default_pipeline_prior() -> ToaPriorConfig {
    ToaPriorConfig::UniformInSlot { center_index: 100 }
}

/// File form of a [`PipelineConfig`] plus the clock drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineFileConfig {
    pub scs_khz: u32,
    #[serde(default = "default_pipeline_prior")]
    pub toa_prior: ToaPriorConfig,
    pub error_model: ErrorModelConfig,
    /// Timestamp grid step in seconds; 250 ns when omitted.
    #[serde(default = "default_granularity")]
    pub granularity: f64,
    /// Broadcast phase jitter in seconds; defaults to the granularity so
    /// the timestamp error is uniform over the grid interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_jitter: Option<f64>,
    #[serde(default)]
    pub dl_timing_error: f64,
    #[serde(default)]
    pub dl_ul_asymmetry: f64,
    #[serde(default)]
    pub modem_host_delay: f64,
    pub drift_ppm: f64,
    /// Seconds between corrections.
    pub resync_period: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl PipelineFileConfig {
    pub fn resolve(&self) -> Result<(DeviceClock, PipelineConfig)> {
        let numerology = Numerology::from_scs_khz(self.scs_khz)?;
        let slot_width = numerology.constants().slot_width;
        let cfg = PipelineConfig {
            numerology,
            toa_prior: self.toa_prior.resolve(),
            error_model: self.error_model.resolve(slot_width)?,
            granularity: self.granularity,
            timestamp_jitter: self.timestamp_jitter.unwrap_or(self.granularity),
            dl_timing_error: self.dl_timing_error,
            dl_ul_asymmetry: self.dl_ul_asymmetry,
            modem_host_delay: self.modem_host_delay,
            resync_period: self.resync_period,
            epochs: self.epochs,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok((DeviceClock::new(self.drift_ppm), cfg))
    }
}
