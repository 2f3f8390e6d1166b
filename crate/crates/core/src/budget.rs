//! Device synchronization error budget for reference time delivered over
//! the NR air interface.
//!
//! The built-in component catalog carries the published per-SCS timing
//! error figures for reference-time indication, TA-related errors and the
//! modem-to-host interface, and checks the aggregate against the 1 us
//! target for time-critical machine communication. The TA granularity row
//! can be replaced by a simulated confidence bound `P_e`, which subsumes
//! quantization plus measurement noise.

use crate::error::{Error, Result};
use crate::simulator::SimResult;
use crate::timing::Numerology;

/// Default budget target: 1 us device-level synchronization error.
pub const DEFAULT_TARGET_NS: f64 = 1000.0;

/// Component names used by the built-in catalog.
pub mod component {
    pub const TAE_TX_DIVERSITY: &str = "tae-tx-diversity";
    pub const TAE_POSITIONING: &str = "tae-positioning";
    pub const REFERENCE_TIME_GRANULARITY: &str = "reference-time-granularity";
    pub const UE_DL_FRAME_TIMING: &str = "ue-dl-frame-timing";
    pub const TA_GRANULARITY: &str = "ta-granularity";
    pub const TA_ADJUSTMENT: &str = "ta-adjustment";
    pub const ASYMMETRIC_DL_UL_DELAY: &str = "asymmetric-dl-ul-delay";
    pub const UE_UL_TRANSMIT_TIMING: &str = "ue-ul-transmit-timing";
    pub const MODEM_HOST_INTERFACE: &str = "modem-host-interface";
}

/// Which error family a component belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    ReferenceTimeIndication,
    TaRelated,
    Other,
}

/// A component value: either one figure for all subcarrier spacings or one
/// per SCS in `[15, 30, 60, 120]` kHz order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetValue {
    Scalar(f64),
    PerScs([f64; 4]),
}

impl BudgetValue {
    /// Value in nanoseconds at the given SCS.
    pub fn at_scs(&self, scs_khz: u32) -> Result<f64> {
        let idx = Numerology::from_scs_khz(scs_khz)?.mu() as usize;
        Ok(match *self {
            BudgetValue::Scalar(v) => v,
            BudgetValue::PerScs(values) => values[idx],
        })
    }
}

/// One row of the error budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetComponent {
    pub name: String,
    pub category: Category,
    /// Nanoseconds, per SCS or scalar. Non-negative.
    pub value_ns: BudgetValue,
    pub included: bool,
    pub note: String,
}

impl BudgetComponent {
    fn new(
        name: &str,
        category: Category,
        value_ns: BudgetValue,
        included: bool,
        note: &str,
    ) -> Self {
        Self {
            name: name.to_string(),
            category,
            value_ns,
            included,
            note: note.to_string(),
        }
    }
}

/// Aggregation policy over included components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Arithmetic sum: the guarantee-style worst case.
    WorstCaseSum,
    /// Root sum of squares: statistical combination.
    RootSumSquare,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::WorstCaseSum => "worst-case-sum",
            Policy::RootSumSquare => "root-sum-square",
        }
    }
}

/// Selectable variant of the time alignment error row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaeVariant {
    TxDiversity,
    Positioning,
}

/// The built-in component catalog with default inclusions.
///
/// The Tx-diversity TAE variant is active by default; the positioning
/// variant is present but excluded. UL transmit timing is excluded because
/// it is taken as negated by the DL frame timing row and counting both
/// would double-count.
pub fn builtin_components() -> Vec<BudgetComponent> {
    use component::*;
    vec![
        BudgetComponent::new(
            TAE_TX_DIVERSITY,
            Category::ReferenceTimeIndication,
            BudgetValue::Scalar(65.0),
            true,
            "time alignment error among BSs, Tx diversity grade (~65 ns)",
        ),
        BudgetComponent::new(
            TAE_POSITIONING,
            Category::ReferenceTimeIndication,
            BudgetValue::Scalar(10.0),
            false,
            "time alignment error among BSs, positioning grade (~10 ns); \
             alternative to tae-tx-diversity",
        ),
        BudgetComponent::new(
            REFERENCE_TIME_GRANULARITY,
            Category::ReferenceTimeIndication,
            BudgetValue::Scalar(250.0),
            true,
            "timestamp granularity of the broadcast reference time",
        ),
        BudgetComponent::new(
            UE_DL_FRAME_TIMING,
            Category::ReferenceTimeIndication,
            BudgetValue::PerScs([390.0, 260.0, 227.0, 114.0]),
            true,
            "DL signal detection error and device processing jitter",
        ),
        BudgetComponent::new(
            TA_GRANULARITY,
            Category::TaRelated,
            BudgetValue::PerScs([260.0, 130.0, 65.0, 32.5]),
            true,
            "limited TA granularity; replaceable by a simulated P_e",
        ),
        BudgetComponent::new(
            TA_ADJUSTMENT,
            Category::TaRelated,
            BudgetValue::PerScs([130.0, 130.0, 65.0, 16.0]),
            true,
            "device-side TA adjustment error, systematic and dynamic",
        ),
        BudgetComponent::new(
            ASYMMETRIC_DL_UL_DELAY,
            Category::TaRelated,
            BudgetValue::Scalar(0.0),
            true,
            "DL/UL propagation asymmetry; negligible in TDD, set explicitly for FDD",
        ),
        BudgetComponent::new(
            UE_UL_TRANSMIT_TIMING,
            Category::TaRelated,
            BudgetValue::PerScs([390.0, 260.0, 227.0, 114.0]),
            false,
            "UL transmit jitter, taken as negated by DL frame timing; \
             including it double-counts",
        ),
        BudgetComponent::new(
            MODEM_HOST_INTERFACE,
            Category::Other,
            BudgetValue::Scalar(65.0),
            true,
            "modem-to-host chipset interface delay (~65 ns)",
        ),
    ]
}

/// Toggle a component's inclusion by name.
pub fn set_included(components: &mut [BudgetComponent], name: &str, included: bool) -> Result<()> {
    match components.iter_mut().find(|c| c.name == name) {
        Some(c) => {
            c.included = included;
            Ok(())
        }
        None => Err(Error::UnknownComponent(name.to_string())),
    }
}

/// Activate one TAE variant and exclude the other.
pub fn select_tae_variant(components: &mut [BudgetComponent], variant: TaeVariant) -> Result<()> {
    let (on, off) = match variant {
        TaeVariant::TxDiversity => (component::TAE_TX_DIVERSITY, component::TAE_POSITIONING),
        TaeVariant::Positioning => (component::TAE_POSITIONING, component::TAE_TX_DIVERSITY),
    };
    set_included(components, on, true)?;
    set_included(components, off, false)
}

/// One row of a [`BudgetReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentContribution {
    pub name: String,
    /// Nanoseconds entering the aggregate; zero when excluded.
    pub contribution_ns: f64,
    pub included: bool,
    pub note: String,
}

/// Aggregated budget with the pass verdict against the target.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub scs_khz: u32,
    pub policy: Policy,
    pub components: Vec<ComponentContribution>,
    pub total_ns: f64,
    pub target_ns: f64,
    pub pass: bool,
    /// `target - total`; negative when the budget is blown.
    pub margin_ns: f64,
}

/// Combine the included components at one SCS under a policy.
///
/// Every component appears in the report; excluded ones contribute zero and
/// keep their note as the reason.
pub fn aggregate(
    components: &[BudgetComponent],
    scs_khz: u32,
    policy: Policy,
    target_ns: f64,
) -> Result<BudgetReport> {
    let mut rows = Vec::with_capacity(components.len());
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for c in components {
        let value = c.value_ns.at_scs(scs_khz)?;
        let contribution = if c.included { value } else { 0.0 };
        if c.included {
            sum += value;
            sum_sq += value * value;
        }
        rows.push(ComponentContribution {
            name: c.name.clone(),
            contribution_ns: contribution,
            included: c.included,
            note: if c.included {
                c.note.clone()
            } else {
                format!("excluded: {}", c.note)
            },
        });
    }

    let total_ns = match policy {
        Policy::WorstCaseSum => sum,
        Policy::RootSumSquare => sum_sq.sqrt(),
    };

    Ok(BudgetReport {
        scs_khz,
        policy,
        components: rows,
        total_ns,
        target_ns,
        pass: total_ns <= target_ns,
        margin_ns: target_ns - total_ns,
    })
}

/// Replace the TA granularity row with a simulated `P_e` and re-aggregate.
///
/// The simulation must have run at the budget's numerology; `P_e` already
/// subsumes quantization, so the static granularity figure is dropped.
pub fn substitute_ta_error(
    components: &[BudgetComponent],
    scs_khz: u32,
    policy: Policy,
    target_ns: f64,
    sim: &SimResult,
) -> Result<BudgetReport> {
    if sim.numerology.scs_khz() != scs_khz {
        return Err(Error::NumerologyMismatch {
            sim_scs_khz: sim.numerology.scs_khz(),
            budget_scs_khz: scs_khz,
        });
    }
    let p_e_ns = sim.p_e * 1e9;
    let substituted = with_simulated_ta_error(components, p_e_ns);
    aggregate(&substituted, scs_khz, policy, target_ns)
}

/// Copy of the component list with the TA granularity value replaced by a
/// simulated error bound in nanoseconds.
pub fn with_simulated_ta_error(
    components: &[BudgetComponent],
    p_e_ns: f64,
) -> Vec<BudgetComponent> {
    components
        .iter()
        .map(|c| {
            if c.name == component::TA_GRANULARITY {
                let mut c = c.clone();
                c.value_ns = BudgetValue::Scalar(p_e_ns);
                c.note = "simulated P_e (quantization plus measurement noise)".to_string();
                c
            } else {
                c.clone()
            }
        })
        .collect()
}

/// A published inter-BS time alignment requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct TaeRequirement {
    pub service: &'static str,
    pub requirement_ns: f64,
    pub note: &'static str,
}

/// Catalog of TAE requirements per NR service.
pub fn tae_requirements() -> Vec<TaeRequirement> {
    vec![
        TaeRequirement {
            service: "tx-diversity",
            requirement_ns: 65.0,
            note: "MIMO and Tx diversity: +-65 ns",
        },
        TaeRequirement {
            service: "inter-bs-carrier-aggregation",
            requirement_ns: 260.0,
            note: "inter-BS carrier aggregation: < 260 ns",
        },
        TaeRequirement {
            service: "comp-inter-site",
            requirement_ns: 260.0,
            note: "coordinated multi-point, inter-site: <= 260 ns; \
                   device time offset window [-0.5, 2] us",
        },
        TaeRequirement {
            service: "tdd-frame-structure",
            requirement_ns: 390.0,
            note: "TDD UL/DL slot alignment: +-390 ns",
        },
        TaeRequirement {
            service: "positioning",
            requirement_ns: 10.0,
            note: "3 m positioning accuracy: +-10 ns among BSs",
        },
    ]
}
