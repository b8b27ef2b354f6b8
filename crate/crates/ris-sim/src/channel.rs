//! Scene geometry, large-scale path loss, and Rician small-scale fading.
//!
//! Responsibilities:
//! - `SceneConfig`: deployment geometry, array sizes, noise powers, fading
//!   parameters for one simulated cell.
//! - `PathLossModel`: log-distance models (`intercept + slope*log10(d)` dB),
//!   with the low-loss curve assigned to line-of-sight-grade links (strong
//!   direct link, both RIS links) and the high-loss curve to the obstructed
//!   direct link of the weak-direct scenario.
//! - `sample_rician` / `realize_channels`: seeded generation of one full
//!   channel realization (direct h_k, BS-to-RIS G, RIS-to-user f_k).
//!
//! All randomness flows through a caller-seeded ChaCha8 stream; regenerating
//! with the same seed is bit-identical.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::units::db_to_linear;

/// Reference distance (m) below which the log-distance models are undefined.
pub const MIN_PATH_LOSS_DISTANCE_M: f64 = 1.0;

/// Errors from channel-model evaluation.
#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("path loss undefined below {MIN_PATH_LOSS_DISTANCE_M} m (got {0} m)")]
    DistanceBelowReference(f64),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

// ====================================================================
// Scene configuration
// ====================================================================

/// Direct-link quality scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Unobstructed BS-user link (low-loss direct model).
    StrongDirect,
    /// Obstructed BS-user link (high-loss direct model).
    WeakDirect,
}

impl Scenario {
    /// Stable lowercase token used in CSV output and config files.
    pub fn token(self) -> &'static str {
        match self {
            Scenario::StrongDirect => "strong_direct",
            Scenario::WeakDirect => "weak_direct",
        }
    }

    /// Parses a config token.
    pub fn from_token(s: &str) -> Option<Scenario> {
        match s {
            "strong_direct" => Some(Scenario::StrongDirect),
            "weak_direct" => Some(Scenario::WeakDirect),
            _ => None,
        }
    }
}

/// Full scene description: geometry, array sizes, noise, and fading.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    /// BS coordinates (m).
    pub bs_position: [f64; 2],
    /// RIS coordinates (m).
    pub ris_position: [f64; 2],
    /// Center of the user disk (m).
    pub user_center: [f64; 2],
    /// Radius of the user disk (m).
    pub user_radius: f64,
    /// Number of users K.
    pub num_users: usize,
    /// Number of BS antennas M.
    pub num_bs_antennas: usize,
    /// Number of RIS elements N.
    pub num_ris_elements: usize,
    /// Receiver noise power (dBm).
    pub noise_power_receiver_dbm: f64,
    /// Per-element RIS amplifier noise power (dBm).
    pub noise_power_ris_element_dbm: f64,
    /// Rician K-factor of the direct links (dB).
    pub rician_k_direct_db: f64,
    /// Rician K-factor of the RIS links (dB).
    pub rician_k_ris_db: f64,
    /// Direct-link quality scenario.
    pub scenario: Scenario,
}

impl Default for SceneConfig {
    /// Reference deployment: BS at (0, -45), RIS at (180, 20), five users in
    /// a 6 m disk at (200, 0), 5 BS antennas, 400 RIS elements, -65 dBm
    /// noise at both the receivers and the RIS elements.
    fn default() -> Self {
        SceneConfig {
            bs_position: [0.0, -45.0],
            ris_position: [180.0, 20.0],
            user_center: [200.0, 0.0],
            user_radius: 6.0,
            num_users: 5,
            num_bs_antennas: 5,
            num_ris_elements: 400,
            noise_power_receiver_dbm: -65.0,
            noise_power_ris_element_dbm: -65.0,
            rician_k_direct_db: 3.0,
            rician_k_ris_db: 10.0,
            scenario: Scenario::StrongDirect,
        }
    }
}

impl SceneConfig {
    /// Checks the structural invariants (positive counts and radius, finite powers).
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.num_users < 1 {
            return Err(ChannelError::InvalidScene("num_users must be >= 1".into()));
        }
        if self.num_bs_antennas < 1 {
            return Err(ChannelError::InvalidScene(
                "num_bs_antennas must be >= 1".into(),
            ));
        }
        if self.num_ris_elements < 1 {
            return Err(ChannelError::InvalidScene(
                "num_ris_elements must be >= 1".into(),
            ));
        }
        if !(self.user_radius > 0.0) {
            return Err(ChannelError::InvalidScene(
                "user_radius must be > 0".into(),
            ));
        }
        for (name, v) in [
            ("noise_power_receiver_dbm", self.noise_power_receiver_dbm),
            (
                "noise_power_ris_element_dbm",
                self.noise_power_ris_element_dbm,
            ),
        ] {
            if !v.is_finite() {
                return Err(ChannelError::InvalidScene(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Receiver noise power in watts.
    pub fn receiver_noise_watts(&self) -> f64 {
        crate::units::dbm_to_watts(self.noise_power_receiver_dbm)
    }

    /// Per-element RIS amplifier noise power in watts.
    pub fn ris_noise_watts(&self) -> f64 {
        crate::units::dbm_to_watts(self.noise_power_ris_element_dbm)
    }

    /// Path-loss model applied to the direct BS-user links in this scenario.
    pub fn direct_model(&self) -> PathLossModel {
        match self.scenario {
            Scenario::StrongDirect => PathLossModel::los(),
            Scenario::WeakDirect => PathLossModel::nlos(),
        }
    }

    /// Path-loss model applied to the BS-RIS and RIS-user links (always
    /// treated as line-of-sight-grade: that is the point of deploying the
    /// surface).
    pub fn ris_model(&self) -> PathLossModel {
        PathLossModel::los()
    }
}

// ====================================================================
// Path loss
// ====================================================================

/// Log-distance path-loss model: `intercept + slope * log10(d)` in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    /// Loss at the 1 m reference distance (dB).
    pub intercept_db: f64,
    /// Slope in dB per decade of distance.
    pub slope_db_per_decade: f64,
}

impl PathLossModel {
    /// Low-loss line-of-sight-grade curve (37.3 + 22.0 log10 d).
    pub fn los() -> Self {
        PathLossModel {
            intercept_db: 37.3,
            slope_db_per_decade: 22.0,
        }
    }

    /// High-loss obstructed curve (13.54 + 39.08 log10 d).
    pub fn nlos() -> Self {
        PathLossModel {
            intercept_db: 13.54,
            slope_db_per_decade: 39.08,
        }
    }

    /// Evaluates the loss in dB at distance `d` meters (`d >= 1`).
    pub fn path_loss(&self, d: f64) -> Result<f64, ChannelError> {
        if d < MIN_PATH_LOSS_DISTANCE_M {
            return Err(ChannelError::DistanceBelowReference(d));
        }
        Ok(self.intercept_db + self.slope_db_per_decade * d.log10())
    }
}

/// Euclidean distance between two 2-D points (m).
pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

// ====================================================================
// Small-scale fading
// ====================================================================

/// Draws `len` Rician-faded channel entries for a link with path loss
/// `pl_db` (dB) and K-factor `k_factor_db` (dB).
///
/// Each entry is `sqrt(g) * (sqrt(k/(k+1)) * e^{j theta} + sqrt(1/(k+1)) * CN(0,1))`
/// where `g` is the linear path gain and `theta` is one uniform line-of-sight
/// phase shared by the whole call, so the expected per-entry power equals the
/// linear path gain. `k_factor_db = +inf` degenerates to the pure LoS entry
/// and `-inf` to pure Rayleigh.
pub fn sample_rician<R: Rng>(
    pl_db: f64,
    k_factor_db: f64,
    len: usize,
    rng: &mut R,
) -> Vec<Complex64> {
    let gain = db_to_linear(-pl_db);
    let amp = gain.sqrt();
    let kappa = db_to_linear(k_factor_db);
    // kappa/(kappa+1) and 1/(kappa+1), stable at the +inf limit.
    let (los_w, scatter_w) = if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
    };
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    let los = Complex64::from_polar(los_w, theta);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let scatter = Complex64::new(re, im) * inv_sqrt2;
            (los + scatter * scatter_w) * amp
        })
        .collect()
}

// ====================================================================
// Channel realization
// ====================================================================

/// One realization of all links: direct `h_k` (length M), BS-to-RIS `G`
/// (N x M), RIS-to-user `f_k` (length N), plus the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Direct BS-user channels, one length-M vector per user.
    pub direct: Vec<DVector<Complex64>>,
    /// BS-to-RIS channel matrix (N x M).
    pub bs_ris: DMatrix<Complex64>,
    /// RIS-to-user channels, one length-N vector per user.
    pub ris_user: Vec<DVector<Complex64>>,
    /// Seed this realization was generated from.
    pub seed: u64,
}

impl ChannelSet {
    /// Number of users.
    pub fn num_users(&self) -> usize {
        self.direct.len()
    }

    /// Number of BS antennas.
    pub fn num_bs_antennas(&self) -> usize {
        self.bs_ris.ncols()
    }

    /// Number of RIS elements.
    pub fn num_ris_elements(&self) -> usize {
        self.bs_ris.nrows()
    }
}

/// Draws K user positions uniformly over the configured disk.
pub fn draw_user_positions<R: Rng>(scene: &SceneConfig, rng: &mut R) -> Vec<[f64; 2]> {
    (0..scene.num_users)
        .map(|_| {
            // Uniform over the disk: radius via sqrt of a uniform draw.
            let r = scene.user_radius * rng.random::<f64>().sqrt();
            let phi = rng.random::<f64>() * std::f64::consts::TAU;
            [
                scene.user_center[0] + r * phi.cos(),
                scene.user_center[1] + r * phi.sin(),
            ]
        })
        .collect()
}

/// Generates one full channel realization from the scene and a seed.
///
/// Draw order is fixed (positions, then each h_k, then G column-major, then
/// each f_k) so a given seed always reproduces the same `ChannelSet`.
/// Distances are clamped to the 1 m model reference before evaluation.
pub fn realize_channels(scene: &SceneConfig, seed: u64) -> ChannelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let direct_model = scene.direct_model();
    let ris_model = scene.ris_model();
    let clamp = |d: f64| d.max(MIN_PATH_LOSS_DISTANCE_M);

    let positions = draw_user_positions(scene, &mut rng);
    // Clamped distances keep path_loss total on any geometry.
    let pl_at = |model: &PathLossModel, d: f64| {
        model
            .path_loss(clamp(d))
            .expect("clamped distance is within model range")
    };

    let direct: Vec<DVector<Complex64>> = positions
        .iter()
        .map(|p| {
            let pl = pl_at(&direct_model, distance(scene.bs_position, *p));
            DVector::from_vec(sample_rician(
                pl,
                scene.rician_k_direct_db,
                scene.num_bs_antennas,
                &mut rng,
            ))
        })
        .collect();

    let pl_bs_ris = pl_at(&ris_model, distance(scene.bs_position, scene.ris_position));
    let bs_ris = DMatrix::from_vec(
        scene.num_ris_elements,
        scene.num_bs_antennas,
        sample_rician(
            pl_bs_ris,
            scene.rician_k_ris_db,
            scene.num_ris_elements * scene.num_bs_antennas,
            &mut rng,
        ),
    );

    let ris_user: Vec<DVector<Complex64>> = positions
        .iter()
        .map(|p| {
            let pl = pl_at(&ris_model, distance(scene.ris_position, *p));
            DVector::from_vec(sample_rician(
                pl,
                scene.rician_k_ris_db,
                scene.num_ris_elements,
                &mut rng,
            ))
        })
        .collect();

    ChannelSet {
        direct,
        bs_ris,
        ris_user,
        seed,
    }
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_reference_geometry() {
        // BS (0,-45) to RIS (180,20): sqrt(180^2 + 65^2) = sqrt(36625).
        let d = distance([0.0, -45.0], [180.0, 20.0]);
        assert!((d - 36625f64.sqrt()).abs() < 1e-12);
        assert!((d - 191.38).abs() < 0.005, "d = {d}");
        // BS (0,-45) to user center (200,0): 205 m exactly (42025 = 205^2).
        let d = distance([0.0, -45.0], [200.0, 0.0]);
        assert_eq!(d, 205.0);
        // Identity and symmetry.
        assert_eq!(distance([3.5, -2.0], [3.5, -2.0]), 0.0);
        assert_eq!(
            distance([1.0, 2.0], [-4.0, 7.0]),
            distance([-4.0, 7.0], [1.0, 2.0])
        );
    }

    #[test]
    fn path_loss_reference_values() {
        let nlos = PathLossModel::nlos();
        let los = PathLossModel::los();
        // Intercept at the 1 m reference.
        assert!((nlos.path_loss(1.0).unwrap() - 13.54).abs() < 1e-12);
        // Hand-evaluated at the 205 m user-center distance.
        assert!((los.path_loss(205.0).unwrap() - 88.16).abs() < 0.005);
        assert!((nlos.path_loss(205.0).unwrap() - 103.88).abs() < 0.005);
    }

    #[test]
    fn path_loss_rejects_sub_reference_distance() {
        let m = PathLossModel::los();
        assert!(m.path_loss(0.999).is_err());
        assert!(m.path_loss(1.0).is_ok());
    }

    #[test]
    fn path_loss_monotone_and_curves_cross_once() {
        let los = PathLossModel::los();
        let nlos = PathLossModel::nlos();
        let mut sign_changes = 0;
        let mut prev_los = f64::NEG_INFINITY;
        let mut prev_nlos = f64::NEG_INFINITY;
        let mut prev_diff: Option<f64> = None;
        for i in 0..500 {
            let d = 1.0 + i as f64;
            let l = los.path_loss(d).unwrap();
            let n = nlos.path_loss(d).unwrap();
            assert!(l > prev_los && n > prev_nlos, "not monotone at d = {d}");
            prev_los = l;
            prev_nlos = n;
            let diff = l - n;
            if let Some(p) = prev_diff {
                if p.signum() != diff.signum() {
                    sign_changes += 1;
                }
            }
            prev_diff = Some(diff);
        }
        // Slopes differ, so the curves cross exactly once above 1 m (~24.6 m).
        assert_eq!(sign_changes, 1);
    }

    #[test]
    fn rician_pure_los_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pl_db = 69.2;
        let expected = db_to_linear(-pl_db).sqrt();
        for z in sample_rician(pl_db, f64::INFINITY, 1000, &mut rng) {
            assert!(
                (z.norm() - expected).abs() / expected < 1e-14,
                "|z| = {} expected {expected}",
                z.norm()
            );
        }
    }

    #[test]
    fn rician_mean_power_matches_path_gain() {
        // Monte-Carlo oracle: empirical second moment vs. configured linear
        // gain within 1% at 1e5 samples, across K-factors incl. Rayleigh.
        let n = 100_000;
        for (pl_db, k_db, seed) in [
            (0.0, 10.0, 11u64),
            (0.0, f64::NEG_INFINITY, 12),
            (69.2, 0.0, 13),
            (88.16, 3.0, 14),
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples = sample_rician(pl_db, k_db, n, &mut rng);
            let mean_power: f64 =
                samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
            let gain = db_to_linear(-pl_db);
            let rel = (mean_power - gain).abs() / gain;
            println!("pl {pl_db} dB k {k_db} dB: mean power {mean_power:.6e} vs gain {gain:.6e} (rel {rel:.4})");
            assert!(rel < 0.01, "relative error {rel}");
        }
    }

    #[test]
    fn rician_scattered_to_los_ratio() {
        // The sample mean estimates the LoS component; residual variance over
        // its power should equal 1/kappa within 2% at 1e5 samples.
        let n = 100_000;
        for (k_db, seed) in [(10.0, 21u64), (3.0, 22), (6.0, 23)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples = sample_rician(0.0, k_db, n, &mut rng);
            let mean = samples.iter().sum::<Complex64>() / n as f64;
            let scattered: f64 =
                samples.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / n as f64;
            let ratio = scattered / mean.norm_sqr();
            let kappa = db_to_linear(k_db);
            let rel = (ratio * kappa - 1.0).abs();
            println!("k {k_db} dB: scattered/LoS = {ratio:.5} vs 1/kappa = {:.5} (rel {rel:.4})", 1.0 / kappa);
            assert!(rel < 0.02, "relative error {rel}");
        }
    }

    #[test]
    fn realize_channels_dimensions() {
        let scene = SceneConfig::default();
        let ch = realize_channels(&scene, 42);
        assert_eq!(ch.direct.len(), 5);
        for h in &ch.direct {
            assert_eq!(h.len(), 5);
        }
        assert_eq!(ch.bs_ris.shape(), (400, 5));
        assert_eq!(ch.ris_user.len(), 5);
        for f in &ch.ris_user {
            assert_eq!(f.len(), 400);
        }
        assert_eq!(ch.seed, 42);
        let all_finite = ch
            .direct
            .iter()
            .chain(ch.ris_user.iter())
            .flat_map(|v| v.iter())
            .chain(ch.bs_ris.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite());
        assert!(all_finite);
    }

    #[test]
    fn realize_channels_is_seed_deterministic() {
        let scene = SceneConfig::default();
        let a = realize_channels(&scene, 9001);
        let b = realize_channels(&scene, 9001);
        assert_eq!(a, b);
        let c = realize_channels(&scene, 9002);
        assert_ne!(a.bs_ris[(0, 0)], c.bs_ris[(0, 0)]);
    }

    #[test]
    fn user_positions_stay_in_disk() {
        let scene = SceneConfig {
            num_users: 500,
            ..SceneConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let positions = draw_user_positions(&scene, &mut rng);
        assert_eq!(positions.len(), 500);
        let mut max_r: f64 = 0.0;
        for p in positions {
            let r = distance(p, scene.user_center);
            max_r = max_r.max(r);
            assert!(r <= scene.user_radius + 1e-12, "user at radius {r}");
        }
        // Uniform draws should come close to the rim.
        assert!(max_r > 0.9 * scene.user_radius, "max radius only {max_r}");
    }

    #[test]
    fn scenario_selects_direct_model() {
        let strong = SceneConfig::default();
        assert_eq!(strong.direct_model(), PathLossModel::los());
        let weak = SceneConfig {
            scenario: Scenario::WeakDirect,
            ..SceneConfig::default()
        };
        assert_eq!(weak.direct_model(), PathLossModel::nlos());
        // RIS links always use the low-loss curve.
        assert_eq!(weak.ris_model(), PathLossModel::los());
    }

    #[test]
    fn weak_direct_link_is_much_weaker() {
        // At the 205 m user distance the direct-link gain gap between the
        // scenarios is the premise of the whole mode comparison.
        let strong = PathLossModel::los().path_loss(205.0).unwrap();
        let weak = PathLossModel::nlos().path_loss(205.0).unwrap();
        assert!(weak - strong > 10.0, "gap only {} dB", weak - strong);
    }

    #[test]
    fn scene_validation_rejects_degenerate_configs() {
        let mut s = SceneConfig::default();
        assert!(s.validate().is_ok());
        s.num_users = 0;
        assert!(s.validate().is_err());
        let mut s = SceneConfig::default();
        s.user_radius = 0.0;
        assert!(s.validate().is_err());
        let mut s = SceneConfig::default();
        s.noise_power_receiver_dbm = f64::NAN;
        assert!(s.validate().is_err());
    }
}
