//! Seeded Monte-Carlo harness: fixed-mode and hybrid sweeps over a transmit
//! power grid, CSV persistence, and the crossover summary.
//!
//! Every drop's channel realization is seeded from (master seed, drop index)
//! alone, so the same channel set is reused across scenarios, modes, and
//! power points. Comparisons along those axes are therefore paired, which
//! makes mode crossovers detectable at desk-scale drop counts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::channel::{realize_channels, ChannelSet, SceneConfig, Scenario};
use crate::controller::{
    classify_report, estimate_gains, select_mode, ControllerThresholds, MeasurementReport,
    PowerClass,
};
use crate::optimize::{
    evaluate_fixed, optimize_active, optimize_passive, OptimizeError, OptimizerOptions,
};
use crate::signal::{NoisePowers, RisMode, RisState};
use crate::units::dbm_to_watts;

/// Harness failures.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

// ====================================================================
// Config and result types
// ====================================================================

/// What a sweep evaluates at each operating point: one of the four fixed
/// surface modes, or the adaptive controller choosing among them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Direct links only.
    NoRis,
    /// Surface present but powered down (all-zero phases).
    Dormant,
    /// Phase-optimized unit-modulus surface.
    Passive,
    /// Phase- and gain-optimized amplifying surface.
    Active,
    /// Per-drop adaptive mode selection.
    Hybrid,
}

impl SweepMode {
    /// Stable lowercase token used in config files and CSV output.
    pub fn token(self) -> &'static str {
        match self {
            SweepMode::Hybrid => "hybrid",
            _ => self.ris_mode().expect("fixed mode").token(),
        }
    }

    /// Parses a config token.
    pub fn from_token(s: &str) -> Option<SweepMode> {
        match s {
            "noris" => Some(SweepMode::NoRis),
            "dormant" => Some(SweepMode::Dormant),
            "passive" => Some(SweepMode::Passive),
            "active" => Some(SweepMode::Active),
            "hybrid" => Some(SweepMode::Hybrid),
            _ => None,
        }
    }

    /// The fixed surface mode this sweep mode evaluates; `None` for Hybrid.
    pub fn ris_mode(self) -> Option<RisMode> {
        match self {
            SweepMode::NoRis => Some(RisMode::NoRis),
            SweepMode::Dormant => Some(RisMode::Dormant),
            SweepMode::Passive => Some(RisMode::Passive),
            SweepMode::Active => Some(RisMode::Active),
            SweepMode::Hybrid => None,
        }
    }
}

/// Full description of one sweep run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Scene geometry and fading parameters (the scenario field is
    /// overridden per scenario block by `run_sweep`).
    pub scene: SceneConfig,
    /// Total power points (dBm), strictly increasing.
    pub power_grid_dbm: Vec<f64>,
    /// Modes to evaluate, without duplicates.
    pub modes: Vec<SweepMode>,
    /// Channel drops per operating point.
    pub drops: usize,
    /// Master seed; per-drop seeds derive from it.
    pub master_seed: u64,
    /// Optimizer tuning shared by all points.
    pub optimizer: OptimizerOptions,
    /// Controller thresholds for hybrid points.
    pub thresholds: ControllerThresholds,
    /// Destination for the results CSV.
    pub output_path: PathBuf,
}

impl SweepConfig {
    /// Checks all structural invariants of the config.
    pub fn validate(&self) -> Result<(), SimError> {
        self.scene
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        self.optimizer
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        self.thresholds
            .validate()
            .map_err(SimError::InvalidConfig)?;
        if self.drops < 1 {
            return Err(SimError::InvalidConfig("drops must be >= 1".into()));
        }
        if self.power_grid_dbm.is_empty() {
            return Err(SimError::InvalidConfig("power grid is empty".into()));
        }
        if self.power_grid_dbm.iter().any(|p| !p.is_finite()) {
            return Err(SimError::InvalidConfig("power grid must be finite".into()));
        }
        if self.power_grid_dbm.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::InvalidConfig(
                "power grid must be strictly increasing".into(),
            ));
        }
        if self.modes.is_empty() {
            return Err(SimError::InvalidConfig("modes is empty".into()));
        }
        for (i, m) in self.modes.iter().enumerate() {
            if self.modes[..i].contains(m) {
                return Err(SimError::InvalidConfig(format!(
                    "duplicate mode `{}`",
                    m.token()
                )));
            }
        }
        Ok(())
    }
}

/// One (scenario, mode, power) result line.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario: Scenario,
    pub mode: SweepMode,
    pub total_power_dbm: f64,
    /// Sample mean of sum SE over drops (bits/s/Hz).
    pub mean_se: f64,
    /// Standard error of that mean (0 for a single drop).
    pub stderr: f64,
    pub drops: usize,
    pub seed: u64,
}

/// All rows of one sweep, in (scenario, mode, ascending power) order.
#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// One controller decision, logged per hybrid drop.
#[derive(Debug, Clone)]
pub struct DecisionRecord {
    /// Running index over the whole run's hybrid drops.
    pub index: usize,
    pub tx_power_dbm: f64,
    pub class: PowerClass,
    pub tau_db: f64,
    pub rho_db: f64,
    /// Mode the controller chose.
    pub mode: RisMode,
}

// ====================================================================
// Seeding and single-point evaluation
// ====================================================================

/// Derives the channel seed of one drop from the master seed and the drop
/// index only, so the realization is shared across scenarios, modes, and
/// power points.
pub fn derive_drop_seed(master_seed: u64, drop_index: u64) -> u64 {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&drop_index.to_le_bytes());
    ChaCha8Rng::from_seed(key).next_u64()
}

/// Sum SE of one channel drop under one fixed mode at one total power.
/// NoRis and Dormant need no search: their surface state is fixed, so the
/// matched precoder is the whole evaluation.
pub fn evaluate_drop(
    ch: &ChannelSet,
    mode: RisMode,
    total_power_watts: f64,
    noise: &NoisePowers,
    opts: &OptimizerOptions,
) -> Result<f64, OptimizeError> {
    match mode {
        RisMode::NoRis => evaluate_fixed(ch, &RisState::no_ris(), total_power_watts, noise, opts)
            .map(|(se, _)| se),
        RisMode::Dormant => evaluate_fixed(
            ch,
            &RisState::dormant(ch.num_ris_elements()),
            total_power_watts,
            noise,
            opts,
        )
        .map(|(se, _)| se),
        RisMode::Passive => optimize_passive(ch, total_power_watts, noise, opts).map(|o| o.sum_se),
        RisMode::Active => optimize_active(ch, total_power_watts, noise, opts).map(|o| o.sum_se),
    }
}

/// One hybrid drop: classify the power, estimate the mode gains, select, and
/// return the chosen mode's realized SE with the filled-in report.
fn evaluate_hybrid_drop(
    ch: &ChannelSet,
    total_power_dbm: f64,
    total_power_watts: f64,
    noise: &NoisePowers,
    opts: &OptimizerOptions,
    th: &ControllerThresholds,
) -> Result<(f64, MeasurementReport, RisMode), OptimizeError> {
    let class = classify_report(total_power_dbm, th);
    let g = estimate_gains(ch, total_power_watts, noise, opts)?;
    let report = MeasurementReport {
        tx_power_dbm: total_power_dbm,
        class,
        active_gain_db: g.tau_db,
        passive_gain_db: g.passive_gain_db,
    };
    let mode = select_mode(&report, th);
    let se = match mode {
        RisMode::Active => g.active_se,
        RisMode::Passive => g.passive_se,
        RisMode::Dormant => evaluate_drop(ch, RisMode::Dormant, total_power_watts, noise, opts)?,
        RisMode::NoRis => unreachable!("the selector only returns surface modes"),
    };
    Ok((se, report, mode))
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 1, "need at least one sample");
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

fn run_point_inner(
    scene: &SceneConfig,
    mode: SweepMode,
    total_power_dbm: f64,
    drops: usize,
    master_seed: u64,
    opts: &OptimizerOptions,
    th: &ControllerThresholds,
    mut log: Option<&mut Vec<DecisionRecord>>,
) -> Result<(f64, f64), SimError> {
    let noise = NoisePowers {
        receiver_watts: scene.receiver_noise_watts(),
        ris_element_watts: scene.ris_noise_watts(),
    };
    let watts = dbm_to_watts(total_power_dbm);
    let mut ses = Vec::with_capacity(drops);
    for d in 0..drops {
        let ch = realize_channels(scene, derive_drop_seed(master_seed, d as u64));
        let se = match mode.ris_mode() {
            Some(fixed) => evaluate_drop(&ch, fixed, watts, &noise, opts)?,
            None => {
                let (se, report, chosen) =
                    evaluate_hybrid_drop(&ch, total_power_dbm, watts, &noise, opts, th)?;
                if let Some(lg) = log.as_deref_mut() {
                    lg.push(DecisionRecord {
                        index: lg.len(),
                        tx_power_dbm: report.tx_power_dbm,
                        class: report.class,
                        tau_db: report.active_gain_db,
                        rho_db: th.rho_db,
                        mode: chosen,
                    });
                }
                se
            }
        };
        ses.push(se);
    }
    Ok(mean_and_stderr(&ses))
}

/// Monte-Carlo evaluation of one (mode, power) operating point: realizes
/// `drops` channel sets from the derived per-drop seeds, evaluates each, and
/// returns (sample mean, standard error) of the sum SE.
pub fn run_point(
    scene: &SceneConfig,
    mode: SweepMode,
    total_power_dbm: f64,
    drops: usize,
    master_seed: u64,
    opts: &OptimizerOptions,
    th: &ControllerThresholds,
) -> Result<(f64, f64), SimError> {
    assert!(drops >= 1, "drops must be >= 1");
    run_point_inner(
        scene,
        mode,
        total_power_dbm,
        drops,
        master_seed,
        opts,
        th,
        None,
    )
}

// ====================================================================
// Sweeps
// ====================================================================

fn sweep_impl(cfg: &SweepConfig) -> Result<(SweepResult, Vec<DecisionRecord>), SimError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut log = Vec::new();
    for scenario in [Scenario::StrongDirect, Scenario::WeakDirect] {
        let scene = SceneConfig {
            scenario,
            ..cfg.scene.clone()
        };
        for &mode in &cfg.modes {
            for &p in &cfg.power_grid_dbm {
                let sink = if mode == SweepMode::Hybrid {
                    Some(&mut log)
                } else {
                    None
                };
                let (mean_se, stderr) = run_point_inner(
                    &scene,
                    mode,
                    p,
                    cfg.drops,
                    cfg.master_seed,
                    &cfg.optimizer,
                    &cfg.thresholds,
                    sink,
                )?;
                rows.push(SweepRow {
                    scenario,
                    mode,
                    total_power_dbm: p,
                    mean_se,
                    stderr,
                    drops: cfg.drops,
                    seed: cfg.master_seed,
                });
            }
        }
    }
    Ok((SweepResult { rows }, log))
}

/// Full sweep: both scenarios x configured modes x ascending power grid,
/// each point via the paired-seed Monte-Carlo evaluation.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult, SimError> {
    sweep_impl(cfg).map(|(rows, _)| rows)
}

/// Like [`run_sweep`] but also returns the controller decision log of the
/// hybrid points. The config must include the hybrid mode.
pub fn run_hybrid_sweep(cfg: &SweepConfig) -> Result<(SweepResult, Vec<DecisionRecord>), SimError> {
    if !cfg.modes.contains(&SweepMode::Hybrid) {
        return Err(SimError::InvalidConfig(
            "hybrid sweep requires `hybrid` in modes".into(),
        ));
    }
    sweep_impl(cfg)
}

// ====================================================================
// CSV output and summary
// ====================================================================

fn write_text(path: &Path, text: &str) -> Result<(), SimError> {
    fs::write(path, text).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Writes the sweep rows as CSV: fixed header, `.` decimal point, LF line
/// terminators, full-precision round-trippable floats.
pub fn write_csv(result: &SweepResult, path: &Path) -> Result<(), SimError> {
    let mut s = String::from("scenario,mode,total_power_dbm,mean_se,stderr,drops,seed\n");
    for r in &result.rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.scenario.token(),
            r.mode.token(),
            r.total_power_dbm,
            r.mean_se,
            r.stderr,
            r.drops,
            r.seed
        )
        .expect("string write");
    }
    write_text(path, &s)
}

/// Writes the controller decision log as CSV.
pub fn write_decision_csv(records: &[DecisionRecord], path: &Path) -> Result<(), SimError> {
    let mut s = String::from("index,tx_power_dbm,class,tau_db,rho_db,mode\n");
    for r in records {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            r.index,
            r.tx_power_dbm,
            r.class.token(),
            r.tau_db,
            r.rho_db,
            r.mode.token()
        )
        .expect("string write");
    }
    write_text(path, &s)
}

/// Per-scenario passive-over-active crossover power, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverSummary {
    pub scenario: Scenario,
    /// Smallest grid power from which mean passive SE >= mean active SE for
    /// the rest of the grid; `None` if the grid ends with active ahead.
    pub crossover_dbm: Option<f64>,
}

/// Finds, per scenario with both passive and active rows, the power point
/// above which the passive mean stays at or above the active mean.
pub fn crossover_summary(result: &SweepResult) -> Vec<CrossoverSummary> {
    let mut out = Vec::new();
    for scenario in [Scenario::StrongDirect, Scenario::WeakDirect] {
        let pick = |mode: SweepMode| -> Vec<&SweepRow> {
            result
                .rows
                .iter()
                .filter(|r| r.scenario == scenario && r.mode == mode)
                .collect()
        };
        let passive = pick(SweepMode::Passive);
        let active = pick(SweepMode::Active);
        if passive.is_empty() || passive.len() != active.len() {
            continue;
        }
        let mut crossover = None;
        for (p, a) in passive.iter().zip(&active).rev() {
            assert_eq!(p.total_power_dbm, a.total_power_dbm, "misaligned grids");
            if p.mean_se >= a.mean_se {
                crossover = Some(p.total_power_dbm);
            } else {
                break;
            }
        }
        out.push(CrossoverSummary {
            scenario,
            crossover_dbm: crossover,
        });
    }
    out
}

/// Human-readable one-line-per-scenario rendering of the crossover summary.
pub fn format_crossover_summary(summary: &[CrossoverSummary]) -> String {
    let mut s = String::new();
    for c in summary {
        match c.crossover_dbm {
            Some(p) => writeln!(
                s,
                "{}: passive mean SE >= active mean SE from {} dBm upward",
                c.scenario.token(),
                p
            ),
            None => writeln!(
                s,
                "{}: no passive-over-active crossover within the grid",
                c.scenario.token()
            ),
        }
        .expect("string write");
    }
    s
}

// ====================================================================
// Tests
// ====================================================================
