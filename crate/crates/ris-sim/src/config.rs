//! Sweep configuration: built-in defaults, TOML files, and key=value
//! overrides, merged in that order (later sources win), with `--seed` and
//! `--out` applied last.
//!
//! The file schema is flat: every key matches one field of the scene,
//! optimizer, thresholds, or harness config, so the same key names work in
//! both the file and `--set` overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::channel::{SceneConfig, Scenario};
use crate::controller::ControllerThresholds;
use crate::optimize::{OptimizerOptions, PrecoderKind};
use crate::sim::{SweepConfig, SweepMode};

/// Config loading failures.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error("malformed override `{0}` (expected key=value)")]
    BadOverride(String),
    #[error("no config source: pass --config <path> or --defaults")]
    MissingSource,
    #[error("invalid config: {0}")]
    Invalid(String),
}

// ====================================================================
// Defaults and raw schema
// ====================================================================

/// Built-in reference configuration: the default scene, a 30-80 dBm grid in
/// 5 dB steps, all four fixed modes, 100 drops, and default optimizer and
/// controller settings.
pub fn default_config() -> SweepConfig {
    SweepConfig {
        scene: SceneConfig::default(),
        power_grid_dbm: (0..=10).map(|i| 30.0 + 5.0 * i as f64).collect(),
        modes: vec![
            SweepMode::NoRis,
            SweepMode::Dormant,
            SweepMode::Passive,
            SweepMode::Active,
        ],
        drops: 100,
        master_seed: 1,
        optimizer: OptimizerOptions::default(),
        thresholds: ControllerThresholds::default(),
        output_path: PathBuf::from("sweep.csv"),
    }
}

/// All config keys, each optional; unset keys keep their defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    bs_position: Option<[f64; 2]>,
    ris_position: Option<[f64; 2]>,
    user_center: Option<[f64; 2]>,
    user_radius: Option<f64>,
    num_users: Option<usize>,
    num_bs_antennas: Option<usize>,
    num_ris_elements: Option<usize>,
    noise_power_receiver_dbm: Option<f64>,
    noise_power_ris_element_dbm: Option<f64>,
    rician_k_direct_db: Option<f64>,
    rician_k_ris_db: Option<f64>,
    power_grid_dbm: Option<Vec<f64>>,
    modes: Option<Vec<String>>,
    drops: Option<usize>,
    master_seed: Option<u64>,
    output_path: Option<String>,
    max_outer_iters: Option<usize>,
    phase_grid_size: Option<usize>,
    tolerance: Option<f64>,
    precoder: Option<String>,
    power_split: Option<f64>,
    split_grid: Option<Vec<f64>>,
    phase_range_deg: Option<f64>,
    weak_below_dbm: Option<f64>,
    high_above_dbm: Option<f64>,
    rho_db: Option<f64>,
}

fn bad(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.into(),
        msg: msg.into(),
    }
}

impl RawConfig {
    /// Overlays every set key onto `cfg`.
    fn apply(&self, cfg: &mut SweepConfig) -> Result<(), ConfigError> {
        if let Some(s) = &self.scenario {
            cfg.scene.scenario = Scenario::from_token(s)
                .ok_or_else(|| bad("scenario", format!("`{s}` (use strong_direct|weak_direct)")))?;
        }
        if let Some(v) = self.bs_position {
            cfg.scene.bs_position = v;
        }
        if let Some(v) = self.ris_position {
            cfg.scene.ris_position = v;
        }
        if let Some(v) = self.user_center {
            cfg.scene.user_center = v;
        }
        if let Some(v) = self.user_radius {
            cfg.scene.user_radius = v;
        }
        if let Some(v) = self.num_users {
            cfg.scene.num_users = v;
        }
        if let Some(v) = self.num_bs_antennas {
            cfg.scene.num_bs_antennas = v;
        }
        if let Some(v) = self.num_ris_elements {
            cfg.scene.num_ris_elements = v;
        }
        if let Some(v) = self.noise_power_receiver_dbm {
            cfg.scene.noise_power_receiver_dbm = v;
        }
        if let Some(v) = self.noise_power_ris_element_dbm {
            cfg.scene.noise_power_ris_element_dbm = v;
        }
        if let Some(v) = self.rician_k_direct_db {
            cfg.scene.rician_k_direct_db = v;
        }
        if let Some(v) = self.rician_k_ris_db {
            cfg.scene.rician_k_ris_db = v;
        }
        if let Some(v) = &self.power_grid_dbm {
            cfg.power_grid_dbm = v.clone();
        }
        if let Some(tokens) = &self.modes {
            cfg.modes = tokens
                .iter()
                .map(|t| {
                    SweepMode::from_token(t).ok_or_else(|| {
                        bad(
                            "modes",
                            format!("`{t}` (use noris|dormant|passive|active|hybrid)"),
                        )
                    })
                })
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = self.drops {
            cfg.drops = v;
        }
        if let Some(v) = self.master_seed {
            cfg.master_seed = v;
        }
        if let Some(v) = &self.output_path {
            cfg.output_path = PathBuf::from(v);
        }
        if let Some(v) = self.max_outer_iters {
            cfg.optimizer.max_outer_iters = v;
        }
        if let Some(v) = self.phase_grid_size {
            cfg.optimizer.phase_grid_size = v;
        }
        if let Some(v) = self.tolerance {
            cfg.optimizer.tolerance = v;
        }
        if let Some(s) = &self.precoder {
            cfg.optimizer.precoder_kind = PrecoderKind::from_token(s)
                .ok_or_else(|| bad("precoder", format!("`{s}` (use mrt|rzf)")))?;
        }
        if let Some(v) = self.power_split {
            cfg.optimizer.power_split = v;
        }
        if let Some(v) = &self.split_grid {
            cfg.optimizer.split_grid = v.clone();
        }
        if let Some(v) = self.phase_range_deg {
            cfg.optimizer.phase_range = Some(v.to_radians());
        }
        if let Some(v) = self.weak_below_dbm {
            cfg.thresholds.weak_below_dbm = v;
        }
        if let Some(v) = self.high_above_dbm {
            cfg.thresholds.high_above_dbm = v;
        }
        if let Some(v) = self.rho_db {
            cfg.thresholds.rho_db = v;
        }
        Ok(())
    }

    /// Applies one `key=value` override; lists use comma separators.
    fn apply_set(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError::BadOverride(spec.into()))?;
        let key = key.trim();
        let value = value.trim();

        fn scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e| bad(key, format!("{e}")))
        }
        fn floats(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
            value.split(',').map(|p| scalar(key, p.trim())).collect()
        }
        fn pair(key: &str, value: &str) -> Result<[f64; 2], ConfigError> {
            let v = floats(key, value)?;
            v.try_into()
                .map_err(|_| bad(key, "expected exactly two comma-separated numbers"))
        }
        fn strings(value: &str) -> Vec<String> {
            value.split(',').map(|p| p.trim().to_string()).collect()
        }

        match key {
            "scenario" => self.scenario = Some(value.into()),
            "bs_position" => self.bs_position = Some(pair(key, value)?),
            "ris_position" => self.ris_position = Some(pair(key, value)?),
            "user_center" => self.user_center = Some(pair(key, value)?),
            "user_radius" => self.user_radius = Some(scalar(key, value)?),
            "num_users" => self.num_users = Some(scalar(key, value)?),
            "num_bs_antennas" => self.num_bs_antennas = Some(scalar(key, value)?),
            "num_ris_elements" => self.num_ris_elements = Some(scalar(key, value)?),
            "noise_power_receiver_dbm" => {
                self.noise_power_receiver_dbm = Some(scalar(key, value)?)
            }
            "noise_power_ris_element_dbm" => {
                self.noise_power_ris_element_dbm = Some(scalar(key, value)?)
            }
            "rician_k_direct_db" => self.rician_k_direct_db = Some(scalar(key, value)?),
            "rician_k_ris_db" => self.rician_k_ris_db = Some(scalar(key, value)?),
            "power_grid_dbm" => self.power_grid_dbm = Some(floats(key, value)?),
            "modes" => self.modes = Some(strings(value)),
            "drops" => self.drops = Some(scalar(key, value)?),
            "master_seed" => self.master_seed = Some(scalar(key, value)?),
            "output_path" => self.output_path = Some(value.into()),
            "max_outer_iters" => self.max_outer_iters = Some(scalar(key, value)?),
            "phase_grid_size" => self.phase_grid_size = Some(scalar(key, value)?),
            "tolerance" => self.tolerance = Some(scalar(key, value)?),
            "precoder" => self.precoder = Some(value.into()),
            "power_split" => self.power_split = Some(scalar(key, value)?),
            "split_grid" => self.split_grid = Some(floats(key, value)?),
            "phase_range_deg" => self.phase_range_deg = Some(scalar(key, value)?),
            "weak_below_dbm" => self.weak_below_dbm = Some(scalar(key, value)?),
            "high_above_dbm" => self.high_above_dbm = Some(scalar(key, value)?),
            "rho_db" => self.rho_db = Some(scalar(key, value)?),
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }
}

// ====================================================================
// Loading
// ====================================================================

/// Loads the sweep config with precedence defaults < file < `--set`
/// overrides < seed/out overrides, then validates it.
///
/// Without a path, or with a path that does not exist, `use_defaults` must
/// be set for the built-in defaults to be used; otherwise the absence is an
/// error.
pub fn load_config(
    path: Option<&Path>,
    use_defaults: bool,
    sets: &[String],
    seed_override: Option<u64>,
    out_override: Option<&Path>,
) -> Result<SweepConfig, ConfigError> {
    let mut raw: RawConfig = match path {
        Some(p) => match fs::read_to_string(p) {
            Ok(text) => toml::from_str(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound && use_defaults => {
                RawConfig::default()
            }
            Err(e) => {
                return Err(ConfigError::Io {
                    path: p.display().to_string(),
                    source: e,
                })
            }
        },
        None => {
            if !use_defaults {
                return Err(ConfigError::MissingSource);
            }
            RawConfig::default()
        }
    };
    for spec in sets {
        raw.apply_set(spec)?;
    }
    let mut cfg = default_config();
    raw.apply(&mut cfg)?;
    if let Some(s) = seed_override {
        cfg.master_seed = s;
    }
    if let Some(o) = out_override {
        cfg.output_path = o.to_path_buf();
    }
    cfg.validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(cfg)
}

// ====================================================================
// Tests
// ====================================================================
