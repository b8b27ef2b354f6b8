//! Received-signal statistics: effective channels, SINR, spectral
//! efficiency, and per-mode power accounting.
//!
//! The simulator never synthesizes sample-level waveforms; spectral
//! efficiency is computed in closed form from channel realizations:
//!
//! - effective channel  v_k^H = h_k^H + p * f_k^H Phi^H G
//! - SINR_k = |v_k^H w_k|^2 / (sum_{j!=k} |v_k^H w_j|^2
//!            + p^2 sigma_ris^2 ||f_k||^2 [active] + sigma_rx^2)
//! - sum SE = sum_k log2(1 + SINR_k)
//!
//! The amplified-noise term exists only in active mode; passive and dormant
//! surfaces reflect with unit modulus (p = 1), and a no-RIS evaluation drops
//! the reflected path entirely.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::units::watts_to_dbm;

/// Signal-model contract violations.
#[derive(Debug, Error)]
pub enum SignalError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

// ====================================================================
// RIS operating state
// ====================================================================

/// RIS operating mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RisMode {
    /// Reflected path excluded entirely (no surface deployed).
    NoRis,
    /// Control electronics off: fixed specular reflector, all-zero phases.
    Dormant,
    /// Phase-only reflection with unit modulus.
    Passive,
    /// Phase shifts plus uniform amplification gain p, injecting amplifier noise.
    Active,
}

impl RisMode {
    /// Stable lowercase token used in CSV output and config files.
    pub fn token(self) -> &'static str {
        match self {
            RisMode::NoRis => "noris",
            RisMode::Dormant => "dormant",
            RisMode::Passive => "passive",
            RisMode::Active => "active",
        }
    }
}

/// Operating state of the surface: mode, per-element phases, and gain.
#[derive(Debug, Clone, PartialEq)]
pub struct RisState {
    /// Operating mode.
    pub mode: RisMode,
    /// Per-element phase shifts (radians, the diagonal of Phi).
    pub phases: Vec<f64>,
    /// Uniform amplification gain p (1 for passive/dormant, 0 irrelevant for no-RIS).
    pub gain: f64,
    /// Optional symmetric phase bound (radians): every phase within +/- bound.
    pub phase_range: Option<f64>,
}

impl RisState {
    /// State with the reflected path excluded.
    pub fn no_ris() -> Self {
        RisState {
            mode: RisMode::NoRis,
            phases: Vec::new(),
            gain: 0.0,
            phase_range: None,
        }
    }

    /// Dormant surface: all-zero phases, unit modulus.
    pub fn dormant(num_elements: usize) -> Self {
        RisState {
            mode: RisMode::Dormant,
            phases: vec![0.0; num_elements],
            gain: 1.0,
            phase_range: None,
        }
    }

    /// Passive surface with the given phases (unit modulus enforced).
    pub fn passive(phases: Vec<f64>) -> Self {
        RisState {
            mode: RisMode::Passive,
            phases,
            gain: 1.0,
            phase_range: None,
        }
    }

    /// Active surface with the given phases and uniform gain.
    pub fn active(phases: Vec<f64>, gain: f64) -> Self {
        RisState {
            mode: RisMode::Active,
            phases,
            gain,
            phase_range: None,
        }
    }

    /// Checks the per-mode structural invariants.
    pub fn validate(&self) -> Result<(), SignalError> {
        let ok = match self.mode {
            RisMode::NoRis => true,
            RisMode::Dormant => self.gain == 1.0 && self.phases.iter().all(|&p| p == 0.0),
            RisMode::Passive => self.gain == 1.0,
            RisMode::Active => self.gain >= 0.0,
        };
        if !ok {
            return Err(SignalError::DimensionMismatch(format!(
                "invalid state for mode {:?}",
                self.mode
            )));
        }
        if let Some(bound) = self.phase_range {
            if self.phases.iter().any(|p| p.abs() > bound + 1e-12) {
                return Err(SignalError::DimensionMismatch(
                    "phase outside configured range".into(),
                ));
            }
        }
        Ok(())
    }
}

// ====================================================================
// Precoder and power budget
// ====================================================================

/// BS precoder: one length-M column per user plus the power budget it was
/// normalized to.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    /// Per-user precoding vectors w_k.
    pub columns: Vec<DVector<Complex64>>,
    /// BS transmit power budget the columns are normalized to (watts).
    pub bs_power_watts: f64,
}

impl Precoder {
    /// Total transmit power actually allocated, sum_k ||w_k||^2.
    pub fn total_power(&self) -> f64 {
        self.columns.iter().map(|w| w.norm_squared()).sum()
    }
}

/// Power budget breakdown for one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Total consumed power (dBm).
    pub total_power_dbm: f64,
    /// BS transmit power (watts).
    pub bs_power_watts: f64,
    /// RIS amplification power (watts); zero outside active mode.
    pub amp_power_watts: f64,
    /// Static overhead power (watts).
    pub static_power_watts: f64,
}

impl LinkBudget {
    /// Sum of the watt-denominated fields.
    pub fn total_watts(&self) -> f64 {
        self.bs_power_watts + self.amp_power_watts + self.static_power_watts
    }
}

/// Builds the per-mode power budget. Active mode charges BS + amplification
/// + static power to the total; every other mode charges only BS + static
/// (the amplification term is forced to zero).
pub fn power_account(
    mode: RisMode,
    bs_power_watts: f64,
    amp_power_watts: f64,
    static_power_watts: f64,
) -> LinkBudget {
    let amp = match mode {
        RisMode::Active => amp_power_watts,
        _ => 0.0,
    };
    let total = bs_power_watts + amp + static_power_watts;
    LinkBudget {
        total_power_dbm: watts_to_dbm(total),
        bs_power_watts,
        amp_power_watts: amp,
        static_power_watts,
    }
}

// ====================================================================
// Effective channel and SINR
// ====================================================================

/// Noise powers entering the SINR denominator, in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePowers {
    /// Receiver noise power sigma_rx^2.
    pub receiver_watts: f64,
    /// Per-element RIS amplifier noise power sigma_ris^2.
    pub ris_element_watts: f64,
}

/// Combined direct-plus-reflected channel v_k for one user, with
/// v_k^H = h_k^H + p * f_k^H Phi^H G (reflected term omitted for no-RIS).
pub fn effective_channel(
    h: &DVector<Complex64>,
    f: &DVector<Complex64>,
    g: &DMatrix<Complex64>,
    ris: &RisState,
) -> Result<DVector<Complex64>, SignalError> {
    if ris.mode == RisMode::NoRis {
        return Ok(h.clone());
    }
    let (n, m) = g.shape();
    if h.len() != m || f.len() != n || ris.phases.len() != n {
        return Err(SignalError::DimensionMismatch(format!(
            "h len {} vs M {}, f len {} / phases {} vs N {}",
            h.len(),
            m,
            f.len(),
            ris.phases.len(),
            n
        )));
    }
    // v = h + p * G^H Phi f, accumulated row by row of G.
    let mut v = h.clone();
    for (i, &theta) in ris.phases.iter().enumerate() {
        let c = f[i] * Complex64::from_polar(ris.gain, theta);
        for j in 0..m {
            v[j] += g[(i, j)].conj() * c;
        }
    }
    Ok(v)
}

/// Per-user SINR under the given effective channels, precoder, and RIS state.
///
/// `f` supplies the RIS-user vectors whose norms scale the amplified-noise
/// term in active mode; it is ignored in every other mode.
pub fn sinr(
    v: &[DVector<Complex64>],
    w: &Precoder,
    ris: &RisState,
    f: &[DVector<Complex64>],
    sigma_ris_sq: f64,
    sigma_rx_sq: f64,
) -> Vec<f64> {
    let k = v.len();
    assert_eq!(w.columns.len(), k, "precoder/user count mismatch");
    (0..k)
        .map(|i| {
            let mut signal = 0.0;
            let mut interference = 0.0;
            for j in 0..k {
                let x = v[i].dotc(&w.columns[j]).norm_sqr();
                if j == i {
                    signal = x;
                } else {
                    interference += x;
                }
            }
            let amplified = if ris.mode == RisMode::Active {
                ris.gain * ris.gain * sigma_ris_sq * f[i].norm_squared()
            } else {
                0.0
            };
            signal / (interference + amplified + sigma_rx_sq)
        })
        .collect()
}

/// Sum spectral efficiency, sum_k log2(1 + SINR_k), in bits/s/Hz.
pub fn sum_se(sinrs: &[f64]) -> f64 {
    sinrs.iter().map(|&s| (1.0 + s).log2()).sum()
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn effective_channel_scalar_hand_case() {
        // N=M=1, h=1, f=1, G=1, theta=0, p=2 -> v = 1 + 2*1*1*1 = 3.
        let h = dvector![c(1.0, 0.0)];
        let f = dvector![c(1.0, 0.0)];
        let g = DMatrix::from_vec(1, 1, vec![c(1.0, 0.0)]);
        let ris = RisState::active(vec![0.0], 2.0);
        let v = effective_channel(&h, &f, &g, &ris).unwrap();
        assert!((v[0] - c(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn effective_channel_no_link_reductions() {
        let h = dvector![c(0.3, -0.1), c(1.0, 0.2)];
        let f = dvector![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let g = DMatrix::from_fn(3, 2, |i, j| c(0.1 * (i + j) as f64, 0.05));
        // f = 0: reflected term vanishes exactly.
        let ris = RisState::passive(vec![0.4, -0.2, 1.0]);
        assert_eq!(effective_channel(&h, &f, &g, &ris).unwrap(), h);
        // Active with p = 0: amplifier off removes the reflection exactly.
        let f = dvector![c(0.5, 0.1), c(-0.2, 0.3), c(0.0, 0.9)];
        let ris = RisState::active(vec![0.4, -0.2, 1.0], 0.0);
        assert_eq!(effective_channel(&h, &f, &g, &ris).unwrap(), h);
        // NoRis ignores the RIS inputs entirely.
        assert_eq!(effective_channel(&h, &f, &g, &RisState::no_ris()).unwrap(), h);
    }

    #[test]
    fn effective_channel_rejects_mismatched_dims() {
        let h = dvector![c(1.0, 0.0)];
        let f = dvector![c(1.0, 0.0), c(1.0, 0.0)];
        let g = DMatrix::from_vec(1, 1, vec![c(1.0, 0.0)]);
        let ris = RisState::passive(vec![0.0]);
        assert!(effective_channel(&h, &f, &g, &ris).is_err());
    }

    #[test]
    fn sinr_textbook_single_user() {
        // K=1, NoRis, |h|^2 = g, ||w||^2 = P -> P*g/sigma^2.
        let gch: f64 = 2.5;
        let p: f64 = 4.0;
        let v = vec![dvector![c(gch.sqrt(), 0.0)]];
        let w = Precoder {
            columns: vec![dvector![c(p.sqrt(), 0.0)]],
            bs_power_watts: p,
        };
        let f = vec![dvector![]];
        let s = sinr(&v, &w, &RisState::no_ris(), &f, 1e-9, 0.5);
        assert!((s[0] - p * gch / 0.5).abs() < 1e-12);
    }

    #[test]
    fn sinr_active_noise_halves() {
        // With p^2 sigma_ris^2 ||f||^2 = sigma_rx^2 the denominator doubles,
        // halving the SINR relative to passive with identical v.
        let v = vec![dvector![c(1.0, 0.5), c(-0.2, 0.1)]];
        let w = Precoder {
            columns: vec![dvector![c(0.7, 0.0), c(0.1, -0.3)]],
            bs_power_watts: 1.0,
        };
        let sigma_rx = 2e-3;
        let f = vec![dvector![c(1.0, 0.0), c(1.0, 0.0)]]; // ||f||^2 = 2
        let gain: f64 = 2.0;
        let sigma_ris = sigma_rx / (gain * gain * 2.0);
        let passive = sinr(
            &v,
            &w,
            &RisState::passive(vec![0.0, 0.0]),
            &f,
            sigma_ris,
            sigma_rx,
        );
        let active = sinr(
            &v,
            &w,
            &RisState::active(vec![0.0, 0.0], gain),
            &f,
            sigma_ris,
            sigma_rx,
        );
        assert!((active[0] - passive[0] / 2.0).abs() / passive[0] < 1e-12);
    }

    #[test]
    fn sinr_zero_precoder_column() {
        let v = vec![
            dvector![c(1.0, 0.0)],
            dvector![c(0.5, 0.5)],
        ];
        let w = Precoder {
            columns: vec![dvector![c(0.0, 0.0)], dvector![c(1.0, 0.0)]],
            bs_power_watts: 1.0,
        };
        let f = vec![dvector![], dvector![]];
        let s = sinr(&v, &w, &RisState::no_ris(), &f, 1e-9, 1e-3);
        assert_eq!(s[0], 0.0);
        assert!(s[1] > 0.0);
    }

    #[test]
    fn sinr_invariant_to_common_phase_rotation() {
        let v = vec![
            dvector![c(1.0, 0.2), c(0.3, -0.4)],
            dvector![c(-0.6, 0.9), c(0.05, 0.7)],
        ];
        let w = Precoder {
            columns: vec![
                dvector![c(0.8, 0.1), c(-0.2, 0.3)],
                dvector![c(0.1, -0.5), c(0.6, 0.2)],
            ],
            bs_power_watts: 1.0,
        };
        let f = vec![dvector![c(0.1, 0.0)], dvector![c(0.2, 0.0)]];
        let ris = RisState::passive(vec![0.0]);
        let base = sinr(&v, &w, &ris, &f, 1e-6, 1e-6);
        let rot = Complex64::from_polar(1.0, 1.234);
        let w_rot = Precoder {
            columns: w.columns.iter().map(|col| col * rot).collect(),
            bs_power_watts: 1.0,
        };
        let rotated = sinr(&v, &w_rot, &ris, &f, 1e-6, 1e-6);
        for (a, b) in base.iter().zip(rotated.iter()) {
            assert!((a - b).abs() / a < 1e-12);
        }
    }

    #[test]
    fn sum_se_reference_points() {
        assert_eq!(sum_se(&[]), 0.0);
        assert!((sum_se(&[1.0; 5]) - 5.0).abs() < 1e-12);
        assert!((sum_se(&[3.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sum_se_monotone_in_each_sinr() {
        let base = [0.5, 1.0, 2.0];
        let se = sum_se(&base);
        for i in 0..base.len() {
            let mut bumped = base;
            bumped[i] += 0.1;
            assert!(sum_se(&bumped) > se);
        }
    }

    #[test]
    fn power_account_reference_points() {
        // Passive 1 W BS -> 30 dBm; only BS power counted.
        let b = power_account(RisMode::Passive, 1.0, 5.0, 0.0);
        assert!((b.total_power_dbm - 30.0).abs() < 1e-9);
        assert_eq!(b.amp_power_watts, 0.0);
        // Active 1 W + 1 W -> 10 log10(2000) = 33.01 dBm.
        let b = power_account(RisMode::Active, 1.0, 1.0, 0.0);
        assert!((b.total_power_dbm - 33.01).abs() < 0.005);
        assert!((b.total_watts() - 2.0).abs() < 1e-12);
        // Dormant 1 W BS -> 30 dBm, amplification term zeroed.
        let b = power_account(RisMode::Dormant, 1.0, 3.0, 0.0);
        assert!((b.total_power_dbm - 30.0).abs() < 1e-9);
        assert_eq!(b.amp_power_watts, 0.0);
    }

    #[test]
    fn ris_state_invariants() {
        assert!(RisState::dormant(4).validate().is_ok());
        assert!(RisState::passive(vec![0.1, -0.2]).validate().is_ok());
        let mut bad = RisState::dormant(2);
        bad.phases[0] = 0.5;
        assert!(bad.validate().is_err());
        let mut bounded = RisState::passive(vec![0.5, -0.5]);
        bounded.phase_range = Some(0.6);
        assert!(bounded.validate().is_ok());
        bounded.phase_range = Some(0.4);
        assert!(bounded.validate().is_err());
    }
}
