//! NR numerology timing constants and timing-advance (TA) quantization.
//!
//! A base station measures the one-way time of arrival (TOA) of an uplink
//! signal and reports it back as a quantized TA command. The TA grid is
//! derived from the NR basic time unit `T_c = 1/(480 kHz * 4096)`: the
//! alignment unit is `T_mu = 16 * 64 * T_c / 2^mu` and, because TA advances
//! the uplink by the full round trip, one TA step corresponds to a one-way
//! TOA slot of width `T = T_mu / 2`.
//!
//! This module provides:
//!
//! * [`Numerology`] and [`TimingConstants`] — the supported subcarrier
//!   spacings (15/30/60/120 kHz) and their derived time units.
//! * [`quantize_toa`] / [`ta_to_toa_estimate`] — conversion between a
//!   measured TOA in seconds and the absolute TA index space `0..=3846`,
//!   using the slot center as the estimator.
//! * [`apply_relative_ta`] — connected-mode adjustment by `(index - 31)`
//!   alignment units, index space `0..=63`.
//! * [`max_quantization_error`] — worst-case error bounds of the center
//!   estimator.
//!
//! All arithmetic is double-precision seconds. Slot widths are exact
//! power-of-two multiples of `T_c`, so scaling between numerologies is
//! bit-exact.

use crate::error::{Error, Result};

/// NR basic time unit `1/(480e3 * 4096)` seconds (about 0.509 ns).
pub const T_C: f64 = 1.0 / (480_000.0 * 4096.0);

/// Highest absolute TA index issued in a random access response.
pub const TA_ABSOLUTE_MAX: u16 = 3846;

/// Highest relative TA index issued in connected mode.
pub const TA_RELATIVE_MAX: u8 = 63;

/// Relative TA index that leaves the current advance unchanged.
pub const TA_RELATIVE_NEUTRAL: u8 = 31;

/// A supported NR numerology: subcarrier spacing `15 * 2^mu` kHz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Numerology {
    mu: u8,
}

impl Numerology {
    /// Subcarrier spacings with published timing-error figures, in kHz.
    pub const SUPPORTED_SCS_KHZ: [u32; 4] = [15, 30, 60, 120];

    /// Numerology from the exponent `mu` (0..=3).
    pub fn from_mu(mu: u8) -> Result<Self> {
        if mu > 3 {
            return Err(Error::UnsupportedNumerology(format!(
                "mu={mu} (supported: 0..=3)"
            )));
        }
        Ok(Self { mu })
    }

    /// Numerology from a subcarrier spacing in kHz (15, 30, 60 or 120).
    pub fn from_scs_khz(scs_khz: u32) -> Result<Self> {
        match scs_khz {
            15 => Ok(Self { mu: 0 }),
            30 => Ok(Self { mu: 1 }),
            60 => Ok(Self { mu: 2 }),
            120 => Ok(Self { mu: 3 }),
            other => Err(Error::UnknownScs(other)),
        }
    }

    /// All supported numerologies in ascending SCS order.
    pub fn all() -> [Numerology; 4] {
        [0, 1, 2, 3].map(|mu| Self { mu })
    }

    pub fn mu(self) -> u8 {
        self.mu
    }

    /// Subcarrier spacing in kHz: `15 * 2^mu`.
    pub fn scs_khz(self) -> u32 {
        15 << self.mu
    }

    /// Derived timing constants for this numerology.
    pub fn constants(self) -> TimingConstants {
        let t_mu = 16.0 * 64.0 * T_C / f64::from(1u32 << self.mu);
        TimingConstants {
            t_c: T_C,
            t_mu,
            slot_width: t_mu / 2.0,
        }
    }
}

/// Timing constants derived from a [`Numerology`], in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingConstants {
    /// Basic time unit `T_c`.
    pub t_c: f64,
    /// TA alignment unit `T_mu = 16 * 64 * T_c / 2^mu`.
    pub t_mu: f64,
    /// One-way TOA slot width `T = T_mu / 2`.
    pub slot_width: f64,
}

/// Timing constants for a numerology.
pub fn timing_constants(n: Numerology) -> TimingConstants {
    n.constants()
}

/// Absolute TA command index `0..=3846`, issued at network access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaCommandAbsolute {
    index: u16,
}

impl TaCommandAbsolute {
    pub fn new(index: u16) -> Result<Self> {
        if index > TA_ABSOLUTE_MAX {
            return Err(Error::TaIndexOutOfRange {
                index: i64::from(index),
                max: TA_ABSOLUTE_MAX,
            });
        }
        Ok(Self { index })
    }

    pub fn index(self) -> u16 {
        self.index
    }
}

/// Relative TA command index `0..=63`, issued in connected mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaCommandRelative {
    index: u8,
}

impl TaCommandRelative {
    pub fn new(index: u8) -> Result<Self> {
        if index > TA_RELATIVE_MAX {
            return Err(Error::TaIndexOutOfRange {
                index: i64::from(index),
                max: u16::from(TA_RELATIVE_MAX),
            });
        }
        Ok(Self { index })
    }

    pub fn index(self) -> u8 {
        self.index
    }
}

/// Which clamp, if any, a quantization hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Saturation {
    None,
    /// Measured TOA was negative and snapped up to index 0.
    Low,
    /// Nearest index exceeded the TA range and was clamped to the maximum.
    High,
}

/// Result of quantizing a measured TOA.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizedToa {
    pub command: TaCommandAbsolute,
    pub saturation: Saturation,
}

impl QuantizedToa {
    pub fn is_saturated(self) -> bool {
        self.saturation != Saturation::None
    }
}

/// Quantize a measured one-way TOA (seconds) to the nearest TA bin center.
///
/// Bin `i` has center `i * slot_width`; the nearest center wins, with ties
/// broken toward the lower index. Negative measurements (routine near zero
/// under Gaussian noise) clamp to index 0 and set [`Saturation::Low`];
/// measurements beyond the last bin clamp to 3846 and set
/// [`Saturation::High`].
pub fn quantize_toa(toa: f64, n: Numerology) -> QuantizedToa {
    debug_assert!(toa.is_finite(), "measured TOA must be finite");
    quantize_to_grid(toa, n.constants().slot_width, TA_ABSOLUTE_MAX)
}

/// Nearest-center quantization onto the grid `{0, w, 2w, .., max_index*w}`.
///
/// [`quantize_toa`] instantiates this with the TA slot width and index
/// range; smaller grids are useful for exhaustive-enumeration checks.
///
/// The initial guess from division is refined against the actual center
/// distances so results match a brute-force argmin over all centers (ties
/// to the lower index) even when the measurement sits on a bin boundary.
pub fn quantize_to_grid(toa: f64, width: f64, max_index: u16) -> QuantizedToa {
    let raw = (toa / width).round();

    if raw <= 0.0 {
        let saturation = if toa < 0.0 {
            Saturation::Low
        } else {
            Saturation::None
        };
        return QuantizedToa {
            command: TaCommandAbsolute { index: 0 },
            saturation,
        };
    }
    if raw > f64::from(max_index) {
        return QuantizedToa {
            command: TaCommandAbsolute { index: max_index },
            saturation: Saturation::High,
        };
    }

    // raw is within one index of the true argmin; settle it locally.
    let guess = raw as u16;
    let lo = guess.saturating_sub(1);
    let hi = guess.saturating_add(1).min(max_index);
    let mut best = lo;
    let mut best_dist = (toa - f64::from(lo) * width).abs();
    for i in (lo + 1)..=hi {
        let dist = (toa - f64::from(i) * width).abs();
        if dist < best_dist {
            best = i;
            best_dist = dist;
        }
    }

    let saturation = if toa < 0.0 {
        Saturation::Low
    } else {
        Saturation::None
    };
    QuantizedToa {
        command: TaCommandAbsolute { index: best },
        saturation,
    }
}

/// TOA estimate (seconds) a device recovers from an absolute TA command:
/// the center of the reported bin, `index * slot_width`.
pub fn ta_to_toa_estimate(ta: TaCommandAbsolute, n: Numerology) -> f64 {
    f64::from(ta.index) * n.constants().slot_width
}

/// Outcome of a relative TA adjustment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustedAdvance {
    /// New uplink advance in seconds, clamped at zero.
    pub advance: f64,
    /// Set when the adjustment would have driven the advance negative.
    pub saturated_low: bool,
}

/// Apply a connected-mode relative TA command: the current advance moves by
/// `(index - 31) * T_mu` seconds. Index 31 leaves it unchanged.
pub fn apply_relative_ta(
    current_advance: f64,
    cmd: TaCommandRelative,
    n: Numerology,
) -> AdjustedAdvance {
    debug_assert!(current_advance >= 0.0, "advance must be non-negative");
    let delta = (f64::from(cmd.index) - f64::from(TA_RELATIVE_NEUTRAL)) * n.constants().t_mu;
    let adjusted = current_advance + delta;
    if adjusted < 0.0 {
        AdjustedAdvance {
            advance: 0.0,
            saturated_low: true,
        }
    } else {
        AdjustedAdvance {
            advance: adjusted,
            saturated_low: false,
        }
    }
}

/// Worst-case TOA error bounds from TA granularity alone (no measurement
/// noise), in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationErrorBound {
    /// Half a slot: the worst case for the center estimator.
    pub center_estimator_bound: f64,
    /// A full slot: the conservative one-slot figure quoted in budget tables.
    pub full_slot_bound: f64,
}

/// Maximum quantization error for a numerology.
pub fn max_quantization_error(n: Numerology) -> QuantizationErrorBound {
    let slot = n.constants().slot_width;
    QuantizationErrorBound {
        center_estimator_bound: slot / 2.0,
        full_slot_bound: slot,
    }
}
