//! Joint BS-precoder / RIS-coefficient design under a shared power budget.
//!
//! - `precoder`: MRT and regularized zero-forcing (RZF) precoders, exactly
//!   normalized to the BS power budget.
//! - `optimize_passive`: alternating optimization for the phase-only surface
//!   — precoder update, then per-element coordinate ascent over a Q-point
//!   phase grid — accepting only steps that do not decrease sum SE.
//! - `optimize_active`: same alternation plus the uniform amplification gain,
//!   refreshed from the amplification power budget after each precoder step.
//! - `split_search`: best BS/amplification power split over a grid of
//!   fractions.
//!
//! The coordinate ascent evaluates candidates incrementally: with the
//! precoder fixed, changing one phase perturbs every user-pair inner product
//! v_i^H w_j by one rank-one term, so a candidate costs O(K^2) instead of a
//! full O(NK^2) re-evaluation. Accepted updates reuse the exact candidate
//! arithmetic, which keeps the recorded objective trace nondecreasing by
//! construction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::channel::ChannelSet;
use crate::signal::{
    effective_channel, power_account, sinr, sum_se, LinkBudget, NoisePowers, Precoder, RisMode,
    RisState, SignalError,
};

/// Optimizer failures.
#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("degenerate all-zero channel matrix")]
    DegenerateChannel,
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("invalid optimizer options: {0}")]
    InvalidOptions(String),
}

// ====================================================================
// Options
// ====================================================================

/// BS precoder family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecoderKind {
    /// Maximum-ratio transmission.
    Mrt,
    /// Regularized zero-forcing.
    Rzf,
}

impl PrecoderKind {
    /// Stable lowercase token used in config files.
    pub fn token(self) -> &'static str {
        match self {
            PrecoderKind::Mrt => "mrt",
            PrecoderKind::Rzf => "rzf",
        }
    }

    /// Parses a config token.
    pub fn from_token(s: &str) -> Option<PrecoderKind> {
        match s {
            "mrt" => Some(PrecoderKind::Mrt),
            "rzf" => Some(PrecoderKind::Rzf),
            _ => None,
        }
    }
}

/// Tuning knobs shared by both optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    /// Maximum alternating outer iterations.
    pub max_outer_iters: usize,
    /// Number of candidate phases per element (Q).
    pub phase_grid_size: usize,
    /// Relative sum-SE improvement below which the alternation stops.
    pub tolerance: f64,
    /// BS precoder family.
    pub precoder_kind: PrecoderKind,
    /// Fraction of the total budget given to amplification (active mode).
    pub power_split: f64,
    /// Candidate fractions for `split_search`.
    pub split_grid: Vec<f64>,
    /// Optional symmetric phase bound (radians); `None` = full circle.
    pub phase_range: Option<f64>,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            max_outer_iters: 20,
            phase_grid_size: 64,
            tolerance: 1e-4,
            precoder_kind: PrecoderKind::Rzf,
            power_split: 0.5,
            split_grid: (1..=9).map(|i| i as f64 / 10.0).collect(),
            phase_range: None,
        }
    }
}

impl OptimizerOptions {
    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.max_outer_iters < 1 {
            return Err(OptimizeError::InvalidOptions(
                "max_outer_iters must be >= 1".into(),
            ));
        }
        if self.phase_grid_size < 2 {
            return Err(OptimizeError::InvalidOptions(
                "phase_grid_size must be >= 2".into(),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(OptimizeError::InvalidOptions(
                "tolerance must be > 0".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.power_split) {
            return Err(OptimizeError::InvalidOptions(
                "power_split must be in [0, 1)".into(),
            ));
        }
        if self.split_grid.iter().any(|e| !(0.0..1.0).contains(e)) {
            return Err(OptimizeError::InvalidOptions(
                "split_grid entries must be in [0, 1)".into(),
            ));
        }
        if let Some(b) = self.phase_range {
            if !(b > 0.0) {
                return Err(OptimizeError::InvalidOptions(
                    "phase_range must be > 0".into(),
                ));
            }
        }
        Ok(())
    }
}

// ====================================================================
// Precoders
// ====================================================================

/// Builds the BS precoder for the given effective channels, exactly
/// normalized so sum_k ||w_k||^2 = bs_power.
///
/// MRT: w_k = sqrt(bs_power/K) v_k/||v_k||. RZF: columns of
/// V (V^H V + alpha I)^-1 with alpha = K sigma_rx^2 / bs_power, rescaled by a
/// common factor to the power budget.
pub fn precoder(
    v: &[DVector<Complex64>],
    bs_power_watts: f64,
    kind: PrecoderKind,
    sigma_rx_sq_watts: f64,
) -> Result<Precoder, OptimizeError> {
    assert!(bs_power_watts > 0.0, "bs_power must be > 0");
    let k = v.len();
    assert!(k >= 1, "need at least one user");
    let columns = match kind {
        PrecoderKind::Mrt => {
            let scale = (bs_power_watts / k as f64).sqrt();
            v.iter()
                .map(|vk| {
                    let norm = vk.norm();
                    if norm == 0.0 {
                        return Err(OptimizeError::DegenerateChannel);
                    }
                    Ok(vk * Complex64::new(scale / norm, 0.0))
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        PrecoderKind::Rzf => {
            let vmat = DMatrix::from_columns(v);
            let alpha = k as f64 * sigma_rx_sq_watts / bs_power_watts;
            let gram = vmat.adjoint() * &vmat
                + DMatrix::<Complex64>::identity(k, k) * Complex64::new(alpha, 0.0);
            let inv = gram
                .try_inverse()
                .ok_or(OptimizeError::DegenerateChannel)?;
            let raw = vmat * inv;
            let norm_sq = raw.norm_squared();
            if norm_sq == 0.0 || !norm_sq.is_finite() {
                return Err(OptimizeError::DegenerateChannel);
            }
            let scale = Complex64::new((bs_power_watts / norm_sq).sqrt(), 0.0);
            raw.column_iter().map(|c| DVector::from(c) * scale).collect()
        }
    };
    Ok(Precoder {
        columns,
        bs_power_watts,
    })
}

/// Uniform amplification gain that saturates the amplification output-power
/// budget: p = sqrt(amp_power / (||G W||_F^2 + N sigma_ris^2)).
///
/// Unit-modulus phase shifts do not change the amplifier input power, so the
/// gain depends only on the precoder.
pub fn active_gain(
    bs_ris: &DMatrix<Complex64>,
    w: &Precoder,
    sigma_ris_sq_watts: f64,
    amp_power_watts: f64,
) -> f64 {
    if amp_power_watts == 0.0 {
        return 0.0;
    }
    let wmat = DMatrix::from_columns(&w.columns);
    let gw_norm_sq = (bs_ris * wmat).norm_squared();
    let input = gw_norm_sq + bs_ris.nrows() as f64 * sigma_ris_sq_watts;
    (amp_power_watts / input).sqrt()
}

// ====================================================================
// Alternating optimizer
// ====================================================================

/// Result of one optimizer run.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    /// Final surface state (phases, gain, mode).
    pub ris: RisState,
    /// Final BS precoder.
    pub precoder: Precoder,
    /// Achieved sum spectral efficiency (bits/s/Hz).
    pub sum_se: f64,
    /// Sum SE after each outer iteration (nondecreasing).
    pub trace: Vec<f64>,
    /// Power budget breakdown of this operating point.
    pub budget: LinkBudget,
}

/// Incremental evaluation state for one precoder: inner products
/// x_ij = v_i^H w_j decomposed as b_ij + t_ij with b the direct part and
/// t = sum_n e^{-j theta_n} d_n the reflected part (gain folded in).
struct Frame {
    /// Direct-link inner products h_i^H w_j, flattened K x K.
    b: Vec<Complex64>,
    /// Per-element reflected contributions p conj(f_i[n]) (G w_j)[n], N x K x K.
    d: Vec<Complex64>,
    /// Current reflected inner products, flattened K x K.
    t: Vec<Complex64>,
    /// Per-user amplified-noise constants p^2 sigma_ris^2 ||f_i||^2.
    amp_noise: Vec<f64>,
}

impl Frame {
    fn build(
        ch: &ChannelSet,
        w: &Precoder,
        gain: f64,
        mode: RisMode,
        sigma_ris_sq: f64,
        cur_phasor: &[Complex64],
        f_norm_sq: &[f64],
    ) -> Frame {
        let k = ch.num_users();
        let n = ch.num_ris_elements();
        let kk = k * k;
        let wmat = DMatrix::from_columns(&w.columns);
        let gw = &ch.bs_ris * wmat; // N x K

        let mut b = vec![Complex64::ZERO; kk];
        for i in 0..k {
            for j in 0..k {
                b[i * k + j] = ch.direct[i].dotc(&w.columns[j]);
            }
        }

        let mut d = vec![Complex64::ZERO; n * kk];
        for el in 0..n {
            let base = el * kk;
            for i in 0..k {
                let fc = ch.ris_user[i][el].conj() * gain;
                for j in 0..k {
                    d[base + i * k + j] = fc * gw[(el, j)];
                }
            }
        }

        let mut t = vec![Complex64::ZERO; kk];
        for el in 0..n {
            let base = el * kk;
            let ph = cur_phasor[el];
            for (idx, slot) in t.iter_mut().enumerate() {
                *slot += ph * d[base + idx];
            }
        }

        let amp_noise = (0..k)
            .map(|i| {
                if mode == RisMode::Active {
                    gain * gain * sigma_ris_sq * f_norm_sq[i]
                } else {
                    0.0
                }
            })
            .collect();

        Frame { b, d, t, amp_noise }
    }

    /// Sum SE at the current t.
    fn sum_se(&self, k: usize, sigma_rx_sq: f64) -> f64 {
        let mut se = 0.0;
        for i in 0..k {
            let off = i * k;
            let mut sig = 0.0;
            let mut intf = 0.0;
            for j in 0..k {
                let pw = (self.b[off + j] + self.t[off + j]).norm_sqr();
                if j == i {
                    sig = pw;
                } else {
                    intf += pw;
                }
            }
            se += (1.0 + sig / (intf + self.amp_noise[i] + sigma_rx_sq)).log2();
        }
        se
    }
}

/// Phase candidates over the allowed range: Q evenly spaced points over the
/// full circle, or Q points spanning [-bound, +bound] inclusive.
fn phase_grid(q: usize, phase_range: Option<f64>) -> Vec<f64> {
    match phase_range {
        None => (0..q)
            .map(|i| i as f64 * std::f64::consts::TAU / q as f64)
            .collect(),
        Some(b) => (0..q)
            .map(|i| -b + 2.0 * b * i as f64 / (q - 1) as f64)
            .collect(),
    }
}

fn check_channels(ch: &ChannelSet) -> Result<(), OptimizeError> {
    let k = ch.num_users();
    let (n, m) = ch.bs_ris.shape();
    if k == 0
        || ch.ris_user.len() != k
        || ch.direct.iter().any(|h| h.len() != m)
        || ch.ris_user.iter().any(|f| f.len() != n)
    {
        return Err(SignalError::DimensionMismatch("channel set inconsistent".into()).into());
    }
    Ok(())
}

/// Shared alternating-ascent engine for the passive and active modes.
fn run_ascent(
    ch: &ChannelSet,
    mode: RisMode,
    bs_power_watts: f64,
    amp_power_watts: f64,
    noise: &NoisePowers,
    opts: &OptimizerOptions,
) -> Result<OptimizeOutcome, OptimizeError> {
    opts.validate()?;
    check_channels(ch)?;
    let k = ch.num_users();
    let n = ch.num_ris_elements();
    let kk = k * k;
    let sigma_rx = noise.receiver_watts;
    let sigma_ris = noise.ris_element_watts;
    let f_norm_sq: Vec<f64> = ch.ris_user.iter().map(|f| f.norm_squared()).collect();

    let grid = phase_grid(opts.phase_grid_size, opts.phase_range);
    // Conjugated phasors e^{-j phi}, the factors appearing in t.
    let grid_phasors: Vec<Complex64> = grid
        .iter()
        .map(|&p| Complex64::from_polar(1.0, -p))
        .collect();

    // Dormant-equivalent start: all-zero phases.
    let mut theta = vec![0.0f64; n];
    let mut cur_phasor = vec![Complex64::new(1.0, 0.0); n];
    let mut gain = match mode {
        RisMode::Active => 0.0,
        _ => 1.0,
    };
    let mut best_w: Option<Precoder> = None;
    let mut frame: Option<Frame> = None;
    let mut current_se = f64::NEG_INFINITY;
    let mut trace = Vec::with_capacity(opts.max_outer_iters);
    let mut t_base = vec![Complex64::ZERO; kk];

    for _iter in 0..opts.max_outer_iters {
        let se_start = current_se;

        // (a) Precoder update on the current effective channels; in active
        // mode the gain is refreshed from the candidate precoder. Accepted
        // only if the objective does not decrease.
        let state = RisState {
            mode,
            phases: theta.clone(),
            gain,
            phase_range: opts.phase_range,
        };
        let vs: Vec<DVector<Complex64>> = (0..k)
            .map(|i| effective_channel(&ch.direct[i], &ch.ris_user[i], &ch.bs_ris, &state))
            .collect::<Result<_, _>>()?;
        let w_cand = precoder(&vs, bs_power_watts, opts.precoder_kind, sigma_rx)?;
        let gain_cand = match mode {
            RisMode::Active => active_gain(&ch.bs_ris, &w_cand, sigma_ris, amp_power_watts),
            _ => 1.0,
        };
        let frame_cand = Frame::build(
            ch,
            &w_cand,
            gain_cand,
            mode,
            sigma_ris,
            &cur_phasor,
            &f_norm_sq,
        );
        let se_cand = frame_cand.sum_se(k, sigma_rx);
        if se_cand >= current_se {
            best_w = Some(w_cand);
            gain = gain_cand;
            frame = Some(frame_cand);
            current_se = se_cand;
        }
        let fr = frame.as_mut().expect("first precoder step always accepted");

        // (b) Per-element coordinate ascent: for each element evaluate all Q
        // candidate phases against the current objective, keeping the argmax
        // only if it strictly improves (earliest grid index wins ties).
        for el in 0..n {
            let dn = &fr.d[el * kk..(el + 1) * kk];
            let pc = cur_phasor[el];
            for idx in 0..kk {
                t_base[idx] = fr.t[idx] - pc * dn[idx];
            }
            let mut best_se = current_se;
            let mut best_q: Option<usize> = None;
            for (qi, &ph) in grid_phasors.iter().enumerate() {
                let mut se = 0.0;
                for i in 0..k {
                    let off = i * k;
                    let mut sig = 0.0;
                    let mut intf = 0.0;
                    for j in 0..k {
                        let idx = off + j;
                        let pw = (fr.b[idx] + t_base[idx] + ph * dn[idx]).norm_sqr();
                        if j == i {
                            sig = pw;
                        } else {
                            intf += pw;
                        }
                    }
                    se += (1.0 + sig / (intf + fr.amp_noise[i] + sigma_rx)).log2();
                }
                if se > best_se {
                    best_se = se;
                    best_q = Some(qi);
                }
            }
            if let Some(qi) = best_q {
                theta[el] = grid[qi];
                cur_phasor[el] = grid_phasors[qi];
                let ph = grid_phasors[qi];
                // Recompose t with the exact candidate arithmetic so the
                // stored objective matches the accepted evaluation bit for bit.
                for idx in 0..kk {
                    fr.t[idx] = t_base[idx] + ph * dn[idx];
                }
                current_se = best_se;
            }
        }

        trace.push(current_se);
        debug_assert!(
            trace.windows(2).all(|w| w[1] >= w[0]),
            "objective trace must be nondecreasing"
        );
        if se_start.is_finite() {
            let rel = (current_se - se_start) / se_start.abs().max(f64::MIN_POSITIVE);
            if rel < opts.tolerance {
                break;
            }
        }
    }

    let precoder = best_w.expect("at least one outer iteration runs");
    debug_assert!(precoder.total_power() <= bs_power_watts * (1.0 + 1e-9));
    let (ris, budget) = match mode {
        RisMode::Active => (
            RisState {
                mode,
                phases: theta,
                gain,
                phase_range: opts.phase_range,
            },
            power_account(mode, bs_power_watts, amp_power_watts, 0.0),
        ),
        _ => (
            RisState {
                mode,
                phases: theta,
                gain: 1.0,
                phase_range: opts.phase_range,
            },
            power_account(mode, bs_power_watts, 0.0, 0.0),
        ),
    };
    Ok(OptimizeOutcome {
        ris,
        precoder,
        sum_se: current_se,
        trace,
        budget,
    })
}

/// Optimizes the passive (phase-only, unit-modulus) surface for the given BS
/// power budget.
pub fn optimize_passive(
    ch: &ChannelSet,
    bs_power_watts: f64,
    noise: &NoisePowers,
    opts: &OptimizerOptions,
) -> Result<OptimizeOutcome, OptimizeError> {
    run_ascent(ch, RisMode::Passive, bs_power_watts, 0.0, noise, opts)
}

/// Optimizes the active surface under a shared total budget split as
/// bs = (1 - eta) total, amplification = eta total, with eta =
/// `opts.power_split`.
pub fn optimize_active(
    ch: &ChannelSet,
    total_power_watts: f64,
    noise: &NoisePowers,
    opts: &OptimizerOptions,
) -> Result<OptimizeOutcome, OptimizeError> {
    assert!(total_power_watts > 0.0, "total power must be > 0");
    let amp = opts.power_split * total_power_watts;
    let bs = total_power_watts - amp;
    run_ascent(ch, RisMode::Active, bs, amp, noise, opts)
}

/// Best split found by `split_search`.
#[derive(Debug, Clone)]
pub struct SplitOutcome {
    /// Winning amplification fraction.
    pub eta: f64,
    /// Optimizer result at that fraction.
    pub outcome: OptimizeOutcome,
}

/// Runs `optimize_active` for every fraction in `opts.split_grid` and returns
/// the argmax-SE split; ties break toward the smaller fraction.
pub fn split_search(
    ch: &ChannelSet,
    total_power_watts: f64,
    noise: &NoisePowers,
    opts: &OptimizerOptions,
) -> Result<SplitOutcome, OptimizeError> {
    opts.validate()?;
    if opts.split_grid.is_empty() {
        return Err(OptimizeError::InvalidOptions("split_grid is empty".into()));
    }
    let mut grid = opts.split_grid.clone();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best: Option<SplitOutcome> = None;
    for eta in grid {
        let mut eta_opts = opts.clone();
        eta_opts.power_split = eta;
        let outcome = optimize_active(ch, total_power_watts, noise, &eta_opts)?;
        let better = match &best {
            None => true,
            Some(b) => outcome.sum_se > b.outcome.sum_se,
        };
        if better {
            best = Some(SplitOutcome { eta, outcome });
        }
    }
    Ok(best.expect("nonempty grid"))
}

/// Evaluates a fixed surface state without any phase search: builds the
/// precoder matched to the effective channels that state induces and returns
/// the resulting sum SE. This is the whole evaluation for the no-RIS and
/// dormant modes.
pub fn evaluate_fixed(
    ch: &ChannelSet,
    state: &RisState,
    bs_power_watts: f64,
    noise: &NoisePowers,
    opts: &OptimizerOptions,
) -> Result<(f64, Precoder), OptimizeError> {
    opts.validate()?;
    check_channels(ch)?;
    let k = ch.num_users();
    let vs: Vec<DVector<Complex64>> = (0..k)
        .map(|i| effective_channel(&ch.direct[i], &ch.ris_user[i], &ch.bs_ris, state))
        .collect::<Result<_, _>>()?;
    let w = precoder(&vs, bs_power_watts, opts.precoder_kind, noise.receiver_watts)?;
    let sinrs = sinr(
        &vs,
        &w,
        state,
        &ch.ris_user,
        noise.ris_element_watts,
        noise.receiver_watts,
    );
    Ok((sum_se(&sinrs), w))
}

// ====================================================================
// Tests
// ====================================================================
