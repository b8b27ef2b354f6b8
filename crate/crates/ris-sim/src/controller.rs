//! Three-stage mode selection: classify the operating point by transmit
//! power, estimate what the surface is worth there, then pick the surface
//! mode.
//!
//! Operating points fall into three classes — weak, strong, and high
//! transmit power — with strict-inequality thresholds. The selector compares
//! SE-ratio gains (in dB) against the minimum-worthwhile-gain threshold rho:
//! weak points take the active surface only when it clearly pays, strong
//! points take whichever of active/passive is ahead, and high points never
//! amplify — they fall back to passive when the surface still helps, else
//! power it down.

use crate::channel::ChannelSet;
use crate::optimize::{
    evaluate_fixed, optimize_active, optimize_passive, OptimizeError, OptimizerOptions,
};
use crate::signal::{NoisePowers, RisMode, RisState};

// ====================================================================
// Reports and thresholds
// ====================================================================

/// Transmit-power class of one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerClass {
    /// Below the weak threshold.
    Weak,
    /// Between the thresholds (boundaries land here).
    Strong,
    /// Above the high threshold.
    High,
}

impl PowerClass {
    /// Stable lowercase token used in CSV output.
    pub fn token(self) -> &'static str {
        match self {
            PowerClass::Weak => "weak",
            PowerClass::Strong => "strong",
            PowerClass::High => "high",
        }
    }
}

/// Decision thresholds for classification and mode selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerThresholds {
    /// Operating points below this transmit power (dBm) are Weak.
    pub weak_below_dbm: f64,
    /// Operating points above this transmit power (dBm) are High.
    pub high_above_dbm: f64,
    /// Minimum worthwhile SE gain (dB); gains at or below it do not justify
    /// the costlier mode.
    pub rho_db: f64,
}

impl Default for ControllerThresholds {
    fn default() -> Self {
        ControllerThresholds {
            weak_below_dbm: 40.0,
            high_above_dbm: 60.0,
            rho_db: 0.0,
        }
    }
}

impl ControllerThresholds {
    /// Checks the structural invariant weak_below < high_above.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.weak_below_dbm < self.high_above_dbm) {
            return Err(format!(
                "weak_below_dbm ({}) must be < high_above_dbm ({})",
                self.weak_below_dbm, self.high_above_dbm
            ));
        }
        if !self.rho_db.is_finite() {
            return Err("rho_db must be finite".into());
        }
        Ok(())
    }
}

/// One classified operating point with its estimated SE gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementReport {
    /// Transmit power of the operating point (dBm).
    pub tx_power_dbm: f64,
    /// Power class implied by the thresholds in force.
    pub class: PowerClass,
    /// Active-over-passive SE gain tau (dB).
    pub active_gain_db: f64,
    /// Passive-over-no-surface SE gain (dB).
    pub passive_gain_db: f64,
}

// ====================================================================
// Classification and selection
// ====================================================================

/// Classifies a transmit power: Weak strictly below `weak_below_dbm`, High
/// strictly above `high_above_dbm`, Strong otherwise (boundaries resolve to
/// Strong).
pub fn classify_report(tx_power_dbm: f64, th: &ControllerThresholds) -> PowerClass {
    assert!(tx_power_dbm.is_finite(), "tx power must be finite");
    if tx_power_dbm < th.weak_below_dbm {
        PowerClass::Weak
    } else if tx_power_dbm > th.high_above_dbm {
        PowerClass::High
    } else {
        PowerClass::Strong
    }
}

/// Selects the surface mode for a classified report. Active is never
/// returned for the High class.
pub fn select_mode(report: &MeasurementReport, th: &ControllerThresholds) -> RisMode {
    match report.class {
        PowerClass::Weak => {
            if report.active_gain_db > th.rho_db {
                RisMode::Active
            } else {
                RisMode::Passive
            }
        }
        PowerClass::Strong => {
            if report.active_gain_db > report.passive_gain_db {
                RisMode::Active
            } else {
                RisMode::Passive
            }
        }
        PowerClass::High => {
            if report.passive_gain_db > th.rho_db {
                RisMode::Passive
            } else {
                RisMode::Dormant
            }
        }
    }
}

/// Element-wise `select_mode` over a report sequence; stateless and
/// order-preserving.
pub fn controller_trace(reports: &[MeasurementReport], th: &ControllerThresholds) -> Vec<RisMode> {
    reports.iter().map(|r| select_mode(r, th)).collect()
}

// ====================================================================
// Gain estimation
// ====================================================================

/// Realized mode SEs for one channel drop at one total power, plus the two
/// derived dB gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEstimate {
    /// Active-over-passive gain tau (dB).
    pub tau_db: f64,
    /// Passive-over-no-surface gain (dB).
    pub passive_gain_db: f64,
    /// Sum SE with the optimized active surface.
    pub active_se: f64,
    /// Sum SE with the optimized passive surface.
    pub passive_se: f64,
    /// Sum SE with no surface (direct links only).
    pub noris_se: f64,
}

/// 10 log10(num/den) with the identical-value shortcut to exactly 0 dB.
fn ratio_db(num: f64, den: f64) -> f64 {
    if num == den {
        return 0.0;
    }
    10.0 * (num / den).log10()
}

/// Runs the active and passive optimizers plus the no-surface baseline at the
/// same total power and returns the realized SEs with their dB gains.
pub fn estimate_gains(
    ch: &ChannelSet,
    total_power_watts: f64,
    noise: &NoisePowers,
    opts: &OptimizerOptions,
) -> Result<GainEstimate, OptimizeError> {
    let active = optimize_active(ch, total_power_watts, noise, opts)?;
    let passive = optimize_passive(ch, total_power_watts, noise, opts)?;
    let (noris_se, _) = evaluate_fixed(
        ch,
        &RisState::no_ris(),
        total_power_watts,
        noise,
        opts,
    )?;
    Ok(GainEstimate {
        tau_db: ratio_db(active.sum_se, passive.sum_se),
        passive_gain_db: ratio_db(passive.sum_se, noris_se),
        active_se: active.sum_se,
        passive_se: passive.sum_se,
        noris_se,
    })
}

/// Convenience wrapper returning just (tau dB, passive gain dB).
pub fn estimate_tau(
    ch: &ChannelSet,
    total_power_watts: f64,
    noise: &NoisePowers,
    opts: &OptimizerOptions,
) -> Result<(f64, f64), OptimizeError> {
    let g = estimate_gains(ch, total_power_watts, noise, opts)?;
    Ok((g.tau_db, g.passive_gain_db))
}

// ====================================================================
// Tests
// ====================================================================
