//! End-to-end reference time indication (RTI) model.
//!
//! A base station periodically broadcasts a reference timestamp quantized
//! to the signaling granularity. The device adds its TA-derived propagation
//! delay estimate and DL frame-timing correction when the message arrives,
//! and its clock then drifts freely until the next resync. The timestamp is
//! taken to describe the instant the frame leaves the antenna.
//!
//! Epochs are simulated in sequence (the clock carries state); all times
//! within an epoch are relative to that epoch's nominal broadcast instant,
//! which keeps grid arithmetic exact regardless of how long the trace runs.

use crate::channel::{perturb_toa, RandomStream, ToaErrorModel};
use crate::error::{Error, Result};
use crate::simulator::ToaPrior;
use crate::timing::{quantize_toa, ta_to_toa_estimate, Numerology};

/// Device clock state relative to the reference time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceClock {
    /// Current error versus the reference, seconds.
    pub offset: f64,
    /// Constant frequency error, parts per million.
    pub drift_ppm: f64,
    /// Reference time of the last correction, seconds.
    pub last_sync: f64,
}

impl DeviceClock {
    /// A perfectly aligned clock with the given frequency error.
    pub fn new(drift_ppm: f64) -> Self {
        Self {
            offset: 0.0,
            drift_ppm,
            last_sync: 0.0,
        }
    }
}

/// A broadcast reference timestamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtiMessage {
    /// Reference time quantized to the granularity grid, seconds.
    pub timestamp: f64,
    /// Grid step, seconds.
    pub granularity: f64,
}

/// Quantize a reference time onto the granularity grid.
///
/// The timestamp floors (a broadcast cannot claim a future instant), so the
/// quantization error lies in `[0, granularity)`. Inputs already on the
/// grid pass through bit-exactly.
pub fn broadcast_rti(true_time: f64, granularity: f64) -> RtiMessage {
    assert!(
        granularity > 0.0 && granularity.is_finite(),
        "granularity must be positive"
    );
    let ratio = true_time / granularity;
    let k = ratio.round();
    let timestamp = if k * granularity == true_time {
        true_time
    } else {
        ratio.floor() * granularity
    };
    RtiMessage {
        timestamp,
        granularity,
    }
}

/// Apply one reference-time correction at the device.
///
/// On arrival the device sets its clock to
/// `timestamp + toa_estimate + dl_timing_error`; the resulting offset is
/// that value minus the true reference time at the arrival instant. All
/// time arguments must share an origin; the choice of origin cancels.
pub fn device_correct(
    clock: &DeviceClock,
    msg: &RtiMessage,
    toa_estimate: f64,
    dl_timing_error: f64,
    true_arrival: f64,
) -> DeviceClock {
    let set_value = msg.timestamp + toa_estimate + dl_timing_error;
    DeviceClock {
        offset: set_value - true_arrival,
        drift_ppm: clock.drift_ppm,
        last_sync: true_arrival,
    }
}

/// How long a clock may free-run before drift exhausts a budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResyncBound {
    /// Longest permissible resync interval, seconds.
    Finite(f64),
    /// Zero drift never exhausts the budget.
    Unbounded,
}

/// Maximum resync interval for a drift rate (ppm) and a residual error
/// budget (ns): `budget / drift`. Zero drift yields [`ResyncBound::Unbounded`].
pub fn max_resync_interval(drift_ppm: f64, residual_budget_ns: f64) -> ResyncBound {
    debug_assert!(residual_budget_ns >= 0.0);
    if drift_ppm == 0.0 {
        return ResyncBound::Unbounded;
    }
    // ns * 1e-9 / (ppm * 1e-6) with one rounding fewer
    ResyncBound::Finite(residual_budget_ns / (drift_ppm.abs() * 1e3))
}

/// Configuration of a periodic-resync trace.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub numerology: Numerology,
    /// True propagation delay drawn fresh each epoch.
    pub toa_prior: ToaPrior,
    pub error_model: ToaErrorModel,
    /// Timestamp grid step, seconds.
    pub granularity: f64,
    /// Broadcast phase jitter: the emission instant is offset by
    /// `U[0, timestamp_jitter)` from the grid each epoch. Zero keeps every
    /// broadcast exactly on the grid (no granularity error).
    pub timestamp_jitter: f64,
    /// Constant DL frame-timing estimation error, seconds (signed).
    pub dl_timing_error: f64,
    /// Constant DL/UL asymmetry added to the TOA estimate, seconds (signed).
    pub dl_ul_asymmetry: f64,
    /// Uncompensated modem-to-host interface delay, seconds (>= 0); the
    /// host clock lags the corrected time by this much.
    pub modem_host_delay: f64,
    /// Time between corrections, seconds.
    pub resync_period: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl PipelineConfig {
    /// Reference-time signaling granularity commonly quoted: 250 ns.
    pub const DEFAULT_GRANULARITY: f64 = 250e-9;

    pub fn validate(&self) -> Result<()> {
        if !(self.granularity > 0.0 && self.granularity.is_finite()) {
            return Err(Error::InvalidScenario(
                "granularity must be positive".into(),
            ));
        }
        if !(self.timestamp_jitter >= 0.0 && self.timestamp_jitter.is_finite()) {
            return Err(Error::InvalidScenario(
                "timestamp jitter must be finite and >= 0".into(),
            ));
        }
        if !(self.resync_period > 0.0 && self.resync_period.is_finite()) {
            return Err(Error::InvalidScenario(
                "resync period must be positive".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidScenario("epochs must be >= 1".into()));
        }
        if !(self.modem_host_delay >= 0.0 && self.modem_host_delay.is_finite()) {
            return Err(Error::InvalidScenario(
                "modem-to-host delay must be finite and >= 0".into(),
            ));
        }
        if !self.dl_timing_error.is_finite() || !self.dl_ul_asymmetry.is_finite() {
            return Err(Error::InvalidScenario(
                "constant error terms must be finite".into(),
            ));
        }
        self.toa_prior.validate()?;
        self.error_model.validate()
    }
}

/// Clock offset immediately before and after one correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub pre_offset: f64,
    pub post_offset: f64,
}

/// Simulate periodic resyncs: drift accrues over each period, then a fresh
/// TOA measurement, TA quantization and timestamp-granularity error drive
/// one correction. Epoch `e` consumes the random stream `(seed, e)` with
/// the draw order: true TOA, measurement error, broadcast phase.
pub fn simulate_sync_epochs(
    initial: DeviceClock,
    cfg: &PipelineConfig,
) -> Result<Vec<EpochRecord>> {
    cfg.validate()?;
    let constants = cfg.numerology.constants();
    let drift_per_period = initial.drift_ppm * 1e-6 * cfg.resync_period;

    let mut clock = initial;
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut stream = RandomStream::new(cfg.seed, epoch as u64);

        let pre_offset = clock.offset + drift_per_period;
        clock.offset = pre_offset;

        let true_toa = cfg.toa_prior.sample(&constants, &mut stream);
        let measured = perturb_toa(true_toa, &cfg.error_model, &mut stream);
        let command = quantize_toa(measured, cfg.numerology).command;
        let toa_estimate = ta_to_toa_estimate(command, cfg.numerology) + cfg.dl_ul_asymmetry;

        // Times relative to this epoch's nominal broadcast instant.
        let emission = if cfg.timestamp_jitter > 0.0 {
            stream.next_f64() * cfg.timestamp_jitter
        } else {
            0.0
        };
        let msg = broadcast_rti(emission, cfg.granularity);
        let true_arrival = emission + true_toa;

        clock = device_correct(
            &clock,
            &msg,
            toa_estimate,
            cfg.dl_timing_error,
            true_arrival,
        );
        // the host clock trails the corrected value by the interface delay
        clock.offset -= cfg.modem_host_delay;

        trace.push(EpochRecord {
            epoch,
            pre_offset,
            post_offset: clock.offset,
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LosGaussianModel;

    const NS: f64 = 1e-9;

    fn zero_error_config() -> PipelineConfig {
        let numerology = Numerology::from_mu(0).unwrap();
        let slot = numerology.constants().slot_width;
        PipelineConfig {
            numerology,
            toa_prior: ToaPrior::Fixed { toa: 40.0 * slot },
            error_model: ToaErrorModel::Los(LosGaussianModel::new(0.0).unwrap()),
            granularity: PipelineConfig::DEFAULT_GRANULARITY,
            timestamp_jitter: 0.0,
            dl_timing_error: 0.0,
            dl_ul_asymmetry: 0.0,
            modem_host_delay: 0.0,
            resync_period: 10e-3,
            epochs: 100,
            seed: 42,
        }
    }

    #[test]
    fn broadcast_on_grid_passes_through() {
        let g = 250.0 * NS;
        for k in [0u32, 1, 4, 5, 17, 4001] {
            let t = f64::from(k) * g;
            let msg = broadcast_rti(t, g);
            assert_eq!(msg.timestamp, t, "k={k}");
        }
    }

    #[test]
    fn broadcast_floors_between_grid_points() {
        let g = 250.0 * NS;
        let msg = broadcast_rti(1000.1 * NS, g);
        assert!((msg.timestamp - 1000.0 * NS).abs() < 1e-24);
        assert!(msg.timestamp <= 1000.1 * NS);
    }

    #[test]
    fn broadcast_fine_grid_limit() {
        let g = 1e-12;
        let t = 3.7e-6;
        let msg = broadcast_rti(t, g);
        assert!((msg.timestamp - t).abs() < g + 1e-24);
    }

    #[test]
    fn broadcast_error_always_in_grid_interval() {
        let g = 250.0 * NS;
        let mut stream = RandomStream::new(5, 0);
        for _ in 0..10_000 {
            let t = stream.next_f64() * 1e-3;
            let msg = broadcast_rti(t, g);
            let loss = t - msg.timestamp;
            assert!((0.0..g).contains(&loss), "loss {loss} for t {t}");
        }
    }

    #[test]
    fn correct_with_perfect_inputs_zeroes_offset() {
        let clock = DeviceClock::new(5.0);
        let g = 250.0 * NS;
        let emission = 4000.0 * g;
        let msg = broadcast_rti(emission, g);
        assert_eq!(msg.timestamp, emission);
        let prop = 2.0e-6;
        let corrected = device_correct(&clock, &msg, prop, 0.0, emission + prop);
        assert_eq!(corrected.offset, 0.0);
        assert_eq!(corrected.drift_ppm, 5.0);
        assert_eq!(corrected.last_sync, emission + prop);
    }

    #[test]
    fn correct_is_linear_in_each_error_term() {
        let clock = DeviceClock::new(0.0);
        let msg = RtiMessage {
            timestamp: 0.0,
            granularity: 250.0 * NS,
        };
        let arrival = 1e-6;

        // +130 ns TOA estimate error alone
        let one = device_correct(&clock, &msg, 1e-6 + 130.0 * NS, 0.0, arrival);
        assert!((one.offset - 130.0 * NS).abs() < 1e-22);
        let two = device_correct(&clock, &msg, 1e-6 + 260.0 * NS, 0.0, arrival);
        assert!((two.offset - 2.0 * one.offset).abs() < 1e-22);

        // DL timing error alone
        let dl = device_correct(&clock, &msg, 1e-6, 40.0 * NS, arrival);
        assert!((dl.offset - 40.0 * NS).abs() < 1e-22);
    }

    #[test]
    fn correct_sums_signed_errors() {
        // timestamp floor loss of 200 ns and a -100 ns TOA error
        let clock = DeviceClock::new(0.0);
        let true_emission = 200.0 * NS; // floors to 0 on a 250 ns grid
        let msg = broadcast_rti(true_emission, 250.0 * NS);
        assert_eq!(msg.timestamp, 0.0);
        let prop = 1e-6;
        let corrected = device_correct(&clock, &msg, prop - 100.0 * NS, 0.0, true_emission + prop);
        assert!((corrected.offset - (-300.0 * NS)).abs() < 1e-22);
    }

    #[test]
    fn resync_interval_examples() {
        assert_eq!(max_resync_interval(10.0, 100.0), ResyncBound::Finite(0.01));
        assert_eq!(max_resync_interval(1.0, 1000.0), ResyncBound::Finite(1.0));
        assert_eq!(max_resync_interval(10.0, 0.0), ResyncBound::Finite(0.0));
        assert_eq!(max_resync_interval(0.0, 100.0), ResyncBound::Unbounded);
    }

    #[test]
    fn resync_interval_monotonicity() {
        let at = |ppm: f64, ns: f64| match max_resync_interval(ppm, ns) {
            ResyncBound::Finite(s) => s,
            ResyncBound::Unbounded => f64::INFINITY,
        };
        assert!(at(10.0, 200.0) > at(10.0, 100.0));
        assert!(at(20.0, 100.0) < at(10.0, 100.0));
    }

    #[test]
    fn zero_error_trace_is_identically_zero() {
        let trace = simulate_sync_epochs(DeviceClock::new(0.0), &zero_error_config()).unwrap();
        assert_eq!(trace.len(), 100);
        for record in trace {
            assert_eq!(record.pre_offset, 0.0);
            assert_eq!(record.post_offset, 0.0);
        }
    }

    #[test]
    fn pure_drift_pre_offset_is_exact() {
        let cfg = zero_error_config();
        let drift = 10.0;
        let trace = simulate_sync_epochs(DeviceClock::new(drift), &cfg).unwrap();
        let expected = drift * 1e-6 * cfg.resync_period;
        for record in trace {
            assert_eq!(record.pre_offset, expected);
            assert_eq!(record.post_offset, 0.0);
        }
    }

    #[test]
    fn drift_accrual_chains_between_epochs() {
        let mut cfg = zero_error_config();
        cfg.error_model = ToaErrorModel::Los(LosGaussianModel::new(20.0 * NS).unwrap());
        cfg.timestamp_jitter = cfg.granularity;
        cfg.epochs = 50;
        let drift = 3.0;
        let trace = simulate_sync_epochs(DeviceClock::new(drift), &cfg).unwrap();
        let step = drift * 1e-6 * cfg.resync_period;
        for pair in trace.windows(2) {
            assert_eq!(pair[1].pre_offset, pair[0].post_offset + step);
        }
    }

    #[test]
    fn modem_delay_shifts_post_offset() {
        let mut cfg = zero_error_config();
        cfg.modem_host_delay = 65.0 * NS;
        let trace = simulate_sync_epochs(DeviceClock::new(0.0), &cfg).unwrap();
        for record in trace {
            assert_eq!(record.post_offset, -65.0 * NS);
        }
    }

    #[test]
    fn trace_is_deterministic() {
        let mut cfg = zero_error_config();
        cfg.error_model = ToaErrorModel::Los(LosGaussianModel::new(50.0 * NS).unwrap());
        cfg.timestamp_jitter = cfg.granularity;
        let a = simulate_sync_epochs(DeviceClock::new(2.0), &cfg).unwrap();
        let b = simulate_sync_epochs(DeviceClock::new(2.0), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let mut cfg = zero_error_config();
        cfg.granularity = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = zero_error_config();
        cfg.epochs = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = zero_error_config();
        cfg.resync_period = -1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = zero_error_config();
        cfg.modem_host_delay = -1e-9;
        assert!(cfg.validate().is_err());
    }
}
