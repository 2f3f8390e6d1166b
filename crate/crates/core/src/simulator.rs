//! Seeded Monte Carlo engine for TOA-from-TA error analysis.
//!
//! Each trial draws a true TOA from the configured prior, perturbs it with
//! `avg_window` independent measurement errors, quantizes every measurement
//! to a TA command and estimates the TOA back as the mean of the reported
//! bin centers. The absolute estimation error feeds an empirical CDF from
//! which quantiles and the confidence bound `P_e` are read.
//!
//! Trial `t` always consumes the random stream `(seed, t)`, so results are
//! bit-identical no matter how trials are partitioned across workers.

use rayon::prelude::*;

use crate::channel::{perturb_toa, RandomStream, ToaErrorModel};
use crate::error::{Error, Result};
use crate::timing::{
    quantize_toa, ta_to_toa_estimate, Numerology, TaCommandAbsolute, TimingConstants,
    TA_ABSOLUTE_MAX,
};

/// Full per-trial error samples are retained; past this the memory cost is
/// no longer acceptable and the run is rejected rather than approximated.
pub const MAX_RETAINED_TRIALS: u64 = 10_000_000;

/// Distribution of the true TOA across trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ToaPrior {
    /// Uniform across one TA slot: `t_i +- slot_width/2`. The index must be
    /// in `1..=3846` so the span stays non-negative.
    UniformInSlot { center_index: u16 },
    /// Uniform in `[lo, hi)` seconds.
    UniformInRange { lo: f64, hi: f64 },
    /// The same TOA every trial.
    Fixed { toa: f64 },
}

impl ToaPrior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ToaPrior::UniformInSlot { center_index } => {
                if center_index == 0 || center_index > TA_ABSOLUTE_MAX {
                    return Err(Error::InvalidScenario(format!(
                        "uniform-in-slot center index {center_index} outside 1..={TA_ABSOLUTE_MAX} \
                         (index 0 would allow negative TOA)"
                    )));
                }
            }
            ToaPrior::UniformInRange { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                    return Err(Error::InvalidScenario(format!(
                        "uniform range [{lo}, {hi}) must be ordered and non-negative"
                    )));
                }
            }
            ToaPrior::Fixed { toa } => {
                if !(toa.is_finite() && toa >= 0.0) {
                    return Err(Error::InvalidScenario(format!(
                        "fixed TOA {toa} must be finite and non-negative"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, constants: &TimingConstants, stream: &mut RandomStream) -> f64 {
        match *self {
            ToaPrior::UniformInSlot { center_index } => {
                let center = f64::from(center_index) * constants.slot_width;
                center + (stream.next_f64() - 0.5) * constants.slot_width
            }
            ToaPrior::UniformInRange { lo, hi } => stream.next_range(lo, hi),
            ToaPrior::Fixed { toa } => toa,
        }
    }
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub numerology: Numerology,
    pub toa_prior: ToaPrior,
    pub error_model: ToaErrorModel,
    pub trials: u64,
    /// Number of consecutive TA measurements averaged per trial (K).
    pub avg_window: usize,
    pub seed: u64,
    /// Probability for the `P_e` quantile.
    pub confidence: f64,
    /// Constant subtracted from every TOA estimate. A crude NLOS bias
    /// correction knob; zero by default.
    pub bias_correction: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidScenario("trials must be >= 1".into()));
        }
        if self.trials > MAX_RETAINED_TRIALS {
            return Err(Error::TooManyTrials {
                requested: self.trials,
                limit: MAX_RETAINED_TRIALS,
            });
        }
        if self.avg_window == 0 {
            return Err(Error::InvalidScenario("avg_window must be >= 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence <= 1.0) {
            return Err(Error::InvalidScenario(format!(
                "confidence {} outside (0, 1]",
                self.confidence
            )));
        }
        if !self.bias_correction.is_finite() {
            return Err(Error::InvalidScenario(
                "bias correction must be finite".into(),
            ));
        }
        self.toa_prior.validate()?;
        self.error_model.validate()
    }
}

/// Empirical distribution of error samples; evaluation is the
/// right-continuous step function `F(x) = #{s <= x} / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted_samples: Vec<f64>,
}

impl EmpiricalCdf {
    /// Build from unsorted samples. Fails on an empty slice.
    pub fn from_samples(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("empirical CDF needs at least one sample"));
        }
        samples.sort_unstable_by(f64::total_cmp);
        Ok(Self {
            sorted_samples: samples,
        })
    }

    pub fn n(&self) -> usize {
        self.sorted_samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted_samples
    }

    pub fn min(&self) -> f64 {
        self.sorted_samples[0]
    }

    pub fn max(&self) -> f64 {
        *self.sorted_samples.last().unwrap()
    }

    /// `F(x) = #{s <= x} / n`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let count = self.sorted_samples.partition_point(|&s| s <= x);
        count as f64 / self.n() as f64
    }

    /// Inverse CDF with lower interpolation: `sorted[ceil(q * n) - 1]`.
    /// `q` must lie in `(0, 1]`; `q = 1` returns the maximum sample.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidQuantile(q));
        }
        let n = self.n();
        let rank = (q * n as f64).ceil() as usize;
        Ok(self.sorted_samples[rank.clamp(1, n) - 1])
    }

    /// Distinct sample values with the CDF evaluated at each; the rows of
    /// the `error_ns,cdf` export.
    pub fn distinct_points(&self) -> Vec<(f64, f64)> {
        let n = self.n() as f64;
        let mut points = Vec::new();
        let mut count = 0usize;
        let mut idx = 0usize;
        while idx < self.sorted_samples.len() {
            let value = self.sorted_samples[idx];
            while idx < self.sorted_samples.len() && self.sorted_samples[idx] == value {
                idx += 1;
                count += 1;
            }
            points.push((value, count as f64 / n));
        }
        points
    }
}

/// Aggregated outcome of [`run_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub numerology: Numerology,
    /// CDF of the absolute error `|estimate - true TOA|`.
    pub cdf: EmpiricalCdf,
    /// Error bound at the scenario confidence: `quantile(confidence)`.
    pub p_e: f64,
    pub confidence: f64,
    pub mean_abs_error: f64,
    /// Mean of the signed error, for bias diagnostics.
    pub mean_signed_error: f64,
    /// `(probability, error)` pairs, nondecreasing in probability.
    pub quantiles: Vec<(f64, f64)>,
    /// Quantizer clamp events across all measurements.
    pub saturation_count: u64,
    pub trials: u64,
}

/// Probabilities always reported alongside the scenario confidence.
pub const REPORT_QUANTILES: [f64; 4] = [0.5, 0.9, 0.99, 0.999];

struct TrialOutcome {
    abs_error: f64,
    signed_error: f64,
    saturations: u32,
}

fn run_trial(
    s: &Scenario,
    constants: &TimingConstants,
    commands: &mut Vec<TaCommandAbsolute>,
    trial: u64,
) -> TrialOutcome {
    let mut stream = RandomStream::new(s.seed, trial);
    let true_toa = s.toa_prior.sample(constants, &mut stream);

    commands.clear();
    let mut saturations = 0u32;
    for _ in 0..s.avg_window {
        let measured = perturb_toa(true_toa, &s.error_model, &mut stream);
        let q = quantize_toa(measured, s.numerology);
        if q.is_saturated() {
            saturations += 1;
        }
        commands.push(q.command);
    }
    let averaged = average_ta(commands, s.numerology).expect("avg_window >= 1");
    let estimate = averaged - s.bias_correction;
    let signed_error = estimate - true_toa;

    TrialOutcome {
        abs_error: signed_error.abs(),
        signed_error,
        saturations,
    }
}

/// Run a scenario to completion.
///
/// Trials fan out over the ambient rayon pool; per-trial streams and a
/// merge in trial order make the result independent of worker count.
pub fn run_scenario(s: &Scenario) -> Result<SimResult> {
    s.validate()?;
    let constants = s.numerology.constants();

    let outcomes: Vec<TrialOutcome> = (0..s.trials)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(s.avg_window),
            |commands, trial| run_trial(s, &constants, commands, trial),
        )
        .collect();

    // Sequential reduction in trial order keeps sums bit-stable.
    let mut abs_errors = Vec::with_capacity(outcomes.len());
    let mut sum_abs = 0.0;
    let mut sum_signed = 0.0;
    let mut saturation_count = 0u64;
    for o in &outcomes {
        abs_errors.push(o.abs_error);
        sum_abs += o.abs_error;
        sum_signed += o.signed_error;
        saturation_count += u64::from(o.saturations);
    }
    let n = s.trials as f64;

    let cdf = EmpiricalCdf::from_samples(abs_errors)?;
    let p_e = cdf.quantile(s.confidence)?;

    let mut probs: Vec<f64> = REPORT_QUANTILES.to_vec();
    if !probs.contains(&s.confidence) {
        probs.push(s.confidence);
    }
    probs.sort_unstable_by(f64::total_cmp);
    let quantiles = probs
        .into_iter()
        .map(|p| Ok((p, cdf.quantile(p)?)))
        .collect::<Result<Vec<_>>>()?;

    Ok(SimResult {
        numerology: s.numerology,
        cdf,
        p_e,
        confidence: s.confidence,
        mean_abs_error: sum_abs / n,
        mean_signed_error: sum_signed / n,
        quantiles,
        saturation_count,
        trials: s.trials,
    })
}

/// Estimate a TOA from several consecutive TA commands: the arithmetic mean
/// of the reported bin centers.
pub fn average_ta(commands: &[TaCommandAbsolute], n: Numerology) -> Result<f64> {
    if commands.is_empty() {
        return Err(Error::EmptyInput("TA averaging needs at least one command"));
    }
    let sum: f64 = commands.iter().map(|&c| ta_to_toa_estimate(c, n)).sum();
    Ok(sum / commands.len() as f64)
}

/// Run the base scenario once per averaging window size. Scenarios share
/// the seed, so the true-TOA draw and the first `min(K, K')` measurement
/// errors of each trial coincide across window sizes.
pub fn sweep_avg_windows(base: &Scenario, windows: &[usize]) -> Result<Vec<(usize, SimResult)>> {
    if windows.is_empty() {
        return Err(Error::EmptyInput(
            "averaging sweep needs at least one window",
        ));
    }
    windows
        .iter()
        .map(|&k| {
            let mut scenario = base.clone();
            scenario.avg_window = k;
            Ok((k, run_scenario(&scenario)?))
        })
        .collect()
}
