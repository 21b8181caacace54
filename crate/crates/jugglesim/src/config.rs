//! Scenario configuration: one human-readable TOML file holding every
//! physical constant, task window, randomization range, rate, and training
//! knob, with full-default generation, strict parsing (unknown keys are
//! rejected), range validation with field paths, and content hashing for
//! reproducibility records.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::contact::{RacketGeometry, RestitutionModel, TaskWindows};
use crate::control::RateControllerGains;
use crate::dynamics::{BallParams, QuadParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

fn default_true() -> bool {
    true
}

/// Quadrotor physical constants. Defaults follow the identified platform.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadConfig {
    /// Mass, kg.
    pub mass: f64,
    /// Diagonal inertia (Ix, Iy, Iz), kg·m².
    pub inertia: [f64; 3],
    /// Thrust coefficient k_f, N/(rad/s)².
    pub thrust_coeff: f64,
    /// Drag-torque coefficient k_m. Defaults to 0.016·k_f.
    pub drag_torque_coeff: f64,
    /// Rotor time constant, s.
    pub motor_time_constant: f64,
    /// Arm length for the X rotor layout, m.
    pub arm_length: f64,
    /// Rotor speed ceiling, rad/s.
    pub max_rotor_speed: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        let k_f = 5.39e-6;
        Self {
            mass: 1.090,
            inertia: [5.29e-3, 5.62e-3, 7.80e-3],
            thrust_coeff: k_f,
            drag_torque_coeff: 0.016 * k_f,
            motor_time_constant: 0.05,
            arm_length: 0.12,
            max_rotor_speed: 1200.0,
        }
    }
}

/// Ball physical constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BallConfig {
    /// Mass, kg.
    pub mass: f64,
    /// Radius, m.
    pub radius: f64,
    /// Quadratic drag during flight (off for training/eval parity; on as a
    /// robustness scenario).
    pub drag_enabled: bool,
    /// Drag coefficient C_d.
    pub drag_coeff: f64,
    /// Air density, kg/m³.
    pub air_density: f64,
}

impl Default for BallConfig {
    fn default() -> Self {
        Self {
            mass: 0.0472,
            radius: 0.02,
            drag_enabled: false,
            drag_coeff: 0.47,
            air_density: 1.204,
        }
    }
}

/// Racket disc geometry and restitution map.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RacketConfig {
    /// Full disc radius, m.
    pub disc_radius: f64,
    /// Sweet-spot radius, m.
    pub sweet_radius: f64,
    /// Disc center in the body frame, m.
    pub offset_body: [f64; 3],
    /// Face normal in the body frame; normalized at load.
    pub normal_body: [f64; 3],
    /// Sweet-spot restitution.
    pub restitution_sweet: f64,
    /// Outer-region restitution.
    pub restitution_outer: f64,
}

impl Default for RacketConfig {
    fn default() -> Self {
        Self {
            disc_radius: 0.10,
            sweet_radius: 0.055,
            offset_body: [0.0, 0.0, 0.05],
            normal_body: [0.0, 0.0, 1.0],
            restitution_sweet: 0.82,
            restitution_outer: 0.64,
        }
    }
}

/// Hit/apex altitude windows, m.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub hit: [f64; 2],
    pub apex: [f64; 2],
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            hit: [0.8, 1.4],
            apex: [2.85, 3.2],
        }
    }
}

/// How to read the randomization table's second quadrotor row: as the initial
/// hover height (`"z"`, the geometric reading) or literally as a lateral
/// offset (`"y"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadRowInterpretation {
    Z,
    Y,
}

/// Domain randomization ranges and per-group enable flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DrConfig {
    /// Restitution override range.
    pub restitution: [f64; 2],
    /// Ball release height range, m.
    pub ball_z0: [f64; 2],
    /// Quadrotor initial hover height range, m.
    pub quad_z0: [f64; 2],
    /// Ball initial x/y offset range, m (per axis).
    pub ball_xy0: [f64; 2],
    /// Quadrotor initial x/y offset range, m (per axis).
    pub quad_xy0: [f64; 2],
    #[serde(default = "default_true")]
    pub randomize_restitution: bool,
    #[serde(default = "default_true")]
    pub randomize_height: bool,
    #[serde(default = "default_true")]
    pub randomize_horizontal: bool,
    /// Reading of the ambiguous quadrotor [0.9, 1.1] row.
    pub quad_row: QuadRowInterpretation,
}

impl Default for DrConfig {
    fn default() -> Self {
        Self {
            restitution: [0.75, 0.90],
            ball_z0: [1.5, 2.0],
            quad_z0: [0.9, 1.1],
            ball_xy0: [-0.07, 0.07],
            quad_xy0: [-0.07, 0.07],
            randomize_restitution: true,
            randomize_height: true,
            randomize_horizontal: true,
            quad_row: QuadRowInterpretation::Z,
        }
    }
}

/// Arena bounds; the episode ends when the ball or the quadrotor leaves them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    /// |x| and |y| limit for both bodies, m.
    pub xy_limit: f64,
    /// Quadrotor altitude interval, m.
    pub quad_z: [f64; 2],
    /// Ball ceiling, m (well above the apex window so overshot strikes can
    /// return).
    pub ball_ceiling: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            xy_limit: 1.5,
            quad_z: [0.2, 3.5],
            ball_ceiling: 8.0,
        }
    }
}

/// Control-rate split: policy actions at `control_hz`, physics and the
/// low-level loop at `control_hz × physics_substeps`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesConfig {
    pub control_hz: f64,
    pub physics_substeps: u32,
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self {
            control_hz: 50.0,
            physics_substeps: 8,
        }
    }
}

/// Episode caps, in control steps.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodeConfig {
    /// Training episode cap.
    pub train_steps: u32,
    /// Evaluation episode cap (one minute at 50 Hz).
    pub eval_steps: u32,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            train_steps: 500,
            eval_steps: 3000,
        }
    }
}

/// Low-level rate-loop gains and action scaling.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    /// Body-rate magnitude at |raw action| = 1, rad/s.
    pub rate_limit: f64,
    pub kp: [f64; 3],
    pub ki: [f64; 3],
    pub kd: [f64; 3],
    pub integrator_clamp: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            rate_limit: std::f64::consts::PI,
            kp: [0.25; 3],
            ki: [0.05; 3],
            kd: [0.006; 3],
            integrator_clamp: 0.5,
        }
    }
}

/// Per-term reward toggles (ablation switches). Hit and apex rewards are the
/// task definition and stay on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub enable_rpos: bool,
    pub enable_contact: bool,
    pub enable_xy: bool,
    pub enable_smooth: bool,
    pub enable_spin: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            enable_rpos: true,
            enable_contact: true,
            enable_xy: true,
            enable_smooth: true,
            enable_spin: true,
        }
    }
}

/// PPO hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub epochs: u32,
    pub minibatches: u32,
    pub learning_rate: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub rollout_steps: u32,
    pub hidden_sizes: Vec<usize>,
    pub log_std_init: f64,
    /// Parallel environments during training.
    pub n_envs: u32,
    /// Total simulation frames budget.
    pub total_frames: u64,
    /// Iterations between deterministic evaluations / checkpoints.
    pub eval_interval: u32,
    /// Episodes per evaluation.
    pub eval_episodes: u32,
    /// Stop early once evaluation mean consecutive hits reaches this value.
    pub target_mean_hits: Option<f64>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            epochs: 4,
            minibatches: 8,
            learning_rate: 3e-4,
            entropy_coef: 1e-3,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            rollout_steps: 64,
            hidden_sizes: vec![256, 256],
            log_std_init: -0.5,
            n_envs: 1024,
            total_frames: 200_000_000,
            eval_interval: 25,
            eval_episodes: 100,
            target_mean_hits: None,
        }
    }
}

/// Predictive-planner baseline settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MbppConfig {
    /// Altitude at which interceptions are planned, m.
    pub plan_hit_height: f64,
    /// Fixed target apex height, m.
    pub target_apex: f64,
    /// Restitution assumed by the planner (deliberately not the randomized
    /// value, reproducing model mismatch).
    pub assumed_restitution: f64,
    /// Fraction of the thrust margin usable as planned acceleration.
    pub accel_fraction: f64,
    /// Stop replanning this long before the planned contact, s.
    pub freeze_margin: f64,
    /// Commit to the final strike trajectory when the predicted contact is
    /// this close, s; farther out the vehicle stages under the hit point.
    pub strike_window: f64,
    /// Staging hover distance below the racket contact plane, m.
    pub staging_depth: f64,
    /// Waiting pose between rallies, m.
    pub station: [f64; 3],
    /// Kalman filter process noise (acceleration white-noise std), m/s².
    pub kf_process_noise: f64,
    /// Kalman filter position measurement noise std, m.
    pub kf_measurement_noise: f64,
    /// Position / velocity feedback gains of the trajectory tracker.
    pub track_kp: f64,
    pub track_kd: f64,
    /// Attitude P gain mapping tilt error to body rates, 1/s.
    pub attitude_gain: f64,
}

impl Default for MbppConfig {
    fn default() -> Self {
        Self {
            plan_hit_height: 1.1,
            target_apex: 3.0,
            assumed_restitution: 0.82,
            accel_fraction: 0.8,
            freeze_margin: 0.1,
            strike_window: 0.45,
            staging_depth: 0.15,
            station: [0.5, 0.0, 1.0],
            kf_process_noise: 2.0,
            kf_measurement_noise: 0.005,
            track_kp: 36.0,
            track_kd: 12.0,
            attitude_gain: 8.0,
        }
    }
}

/// The complete scenario: everything a run needs, in one file.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub quad: QuadConfig,
    pub ball: BallConfig,
    pub racket: RacketConfig,
    pub windows: WindowConfig,
    pub domain_randomization: DrConfig,
    pub bounds: BoundsConfig,
    pub rates: RatesConfig,
    pub episode: EpisodeConfig,
    pub control: ControlConfig,
    pub reward: RewardConfig,
    pub ppo: PpoConfig,
    pub mbpp: MbppConfig,
}

impl ScenarioConfig {
    /// The simulation-study preset (this is also `Default`).
    pub fn sim() -> Self {
        Self::default()
    }

    /// Real-deployment analog: lower apex window.
    pub fn real_analog() -> Self {
        let mut c = Self::default();
        c.windows.apex = [1.6, 1.85];
        c
    }

    /// Racket reduced to the bare 5.5 cm disc (disc = sweet spot).
    pub fn paper_racket() -> Self {
        let mut c = Self::default();
        c.racket.disc_radius = 0.055;
        c.racket.sweet_radius = 0.055;
        c
    }

    /// Tiny configuration for smoke tests: a few envs, short budget.
    pub fn smoke() -> Self {
        let mut c = Self::default();
        c.ppo.n_envs = 8;
        c.ppo.rollout_steps = 16;
        c.ppo.hidden_sizes = vec![32, 32];
        c.ppo.total_frames = 3 * 8 * 16;
        c.ppo.eval_interval = 2;
        c.ppo.eval_episodes = 2;
        c
    }

    /// Desk-scale training preset: 1024 environments, capped frame budget,
    /// early stop at the evaluation target.
    pub fn desk() -> Self {
        let mut c = Self::default();
        c.ppo.n_envs = 1024;
        c.ppo.total_frames = 200_000_000;
        c.ppo.hidden_sizes = vec![128, 128];
        c.ppo.eval_interval = 20;
        c.ppo.eval_episodes = 100;
        c.ppo.target_mean_hits = Some(22.0);
        c
    }

    /// Full-budget preset mirroring the large-scale run (not gated in CI).
    pub fn full() -> Self {
        let mut c = Self::default();
        c.ppo.n_envs = 4096;
        c.ppo.total_frames = 2_000_000_000;
        c.ppo.target_mean_hits = Some(58.0);
        c
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "sim" => Some(Self::sim()),
            "real-analog" => Some(Self::real_analog()),
            "paper-racket" => Some(Self::paper_racket()),
            "smoke" => Some(Self::smoke()),
            "desk" => Some(Self::desk()),
            "full" => Some(Self::full()),
            _ => None,
        }
    }

    pub const PRESET_NAMES: &'static [&'static str] =
        &["sim", "real-analog", "paper-racket", "smoke", "desk", "full"];

    /// Load from TOML, rejecting unknown keys and invalid ranges.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        std::fs::write(path, self.to_toml()).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// SHA-256 of the canonical TOML serialization, hex-encoded.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_toml().as_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for b in digest {
            let _ = write!(out, "{b:02x}");
        }
        out
    }

    /// Range-check every field; errors carry the offending field path.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                errors.push(format!("{name}: must be > 0, got {v}"));
            }
        };
        positive("quad.mass", self.quad.mass);
        positive("quad.inertia[0]", self.quad.inertia[0]);
        positive("quad.inertia[1]", self.quad.inertia[1]);
        positive("quad.inertia[2]", self.quad.inertia[2]);
        positive("quad.thrust_coeff", self.quad.thrust_coeff);
        positive("quad.motor_time_constant", self.quad.motor_time_constant);
        positive("quad.arm_length", self.quad.arm_length);
        positive("quad.max_rotor_speed", self.quad.max_rotor_speed);
        positive("ball.mass", self.ball.mass);
        positive("ball.radius", self.ball.radius);
        positive("ball.air_density", self.ball.air_density);
        positive("racket.disc_radius", self.racket.disc_radius);
        positive("racket.sweet_radius", self.racket.sweet_radius);
        positive("rates.control_hz", self.rates.control_hz);
        positive("control.rate_limit", self.control.rate_limit);
        positive("mbpp.target_apex", self.mbpp.target_apex);
        positive("mbpp.plan_hit_height", self.mbpp.plan_hit_height);
        positive("bounds.xy_limit", self.bounds.xy_limit);
        positive("bounds.ball_ceiling", self.bounds.ball_ceiling);

        if self.quad.drag_torque_coeff < 0.0 {
            errors.push(format!(
                "quad.drag_torque_coeff: must be >= 0, got {}",
                self.quad.drag_torque_coeff
            ));
        }
        if self.ball.drag_coeff < 0.0 {
            errors.push(format!(
                "ball.drag_coeff: must be >= 0, got {}",
                self.ball.drag_coeff
            ));
        }
        if self.racket.sweet_radius > self.racket.disc_radius {
            errors.push(format!(
                "racket.sweet_radius: must be <= disc_radius ({} > {})",
                self.racket.sweet_radius, self.racket.disc_radius
            ));
        }
        let norm = Vector3::from(self.racket.normal_body).norm();
        if !(norm > 1e-9 && norm.is_finite()) {
            errors.push("racket.normal_body: must be a nonzero vector".into());
        }
        for (name, e) in [
            ("racket.restitution_sweet", self.racket.restitution_sweet),
            ("racket.restitution_outer", self.racket.restitution_outer),
            ("mbpp.assumed_restitution", self.mbpp.assumed_restitution),
        ] {
            if !(e > 0.0 && e <= 1.0) {
                errors.push(format!("{name}: must be in (0, 1], got {e}"));
            }
        }

        let mut interval = |name: &str, lo: f64, hi: f64| {
            if !(lo < hi) {
                errors.push(format!("{name}: min must be < max, got [{lo}, {hi}]"));
            }
        };
        interval("windows.hit", self.windows.hit[0], self.windows.hit[1]);
        interval("windows.apex", self.windows.apex[0], self.windows.apex[1]);
        interval("bounds.quad_z", self.bounds.quad_z[0], self.bounds.quad_z[1]);

        let dr = &self.domain_randomization;
        let mut range = |name: &str, r: [f64; 2]| {
            if !(r[0] <= r[1]) {
                errors.push(format!("{name}: min must be <= max, got [{}, {}]", r[0], r[1]));
            }
        };
        range("domain_randomization.restitution", dr.restitution);
        range("domain_randomization.ball_z0", dr.ball_z0);
        range("domain_randomization.quad_z0", dr.quad_z0);
        range("domain_randomization.ball_xy0", dr.ball_xy0);
        range("domain_randomization.quad_xy0", dr.quad_xy0);
        if !(dr.restitution[0] > 0.0 && dr.restitution[1] <= 1.0) {
            errors.push(format!(
                "domain_randomization.restitution: must lie in (0, 1], got [{}, {}]",
                dr.restitution[0], dr.restitution[1]
            ));
        }

        if self.rates.physics_substeps == 0 {
            errors.push("rates.physics_substeps: must be >= 1".into());
        }
        if self.episode.train_steps == 0 || self.episode.eval_steps == 0 {
            errors.push("episode: step caps must be >= 1".into());
        }

        let ppo = &self.ppo;
        if !(ppo.gamma > 0.0 && ppo.gamma <= 1.0) {
            errors.push(format!("ppo.gamma: must be in (0, 1], got {}", ppo.gamma));
        }
        if !(ppo.gae_lambda > 0.0 && ppo.gae_lambda <= 1.0) {
            errors.push(format!(
                "ppo.gae_lambda: must be in (0, 1], got {}",
                ppo.gae_lambda
            ));
        }
        if !(ppo.clip_epsilon > 0.0) {
            errors.push(format!(
                "ppo.clip_epsilon: must be > 0, got {}",
                ppo.clip_epsilon
            ));
        }
        if ppo.n_envs == 0 || ppo.rollout_steps == 0 || ppo.epochs == 0 || ppo.minibatches == 0 {
            errors.push("ppo: n_envs, rollout_steps, epochs, minibatches must be >= 1".into());
        }
        if ppo.hidden_sizes.is_empty() || ppo.hidden_sizes.iter().any(|&h| h == 0) {
            errors.push("ppo.hidden_sizes: need at least one nonzero layer".into());
        }
        if !(self.mbpp.accel_fraction > 0.0 && self.mbpp.accel_fraction <= 1.0) {
            errors.push(format!(
                "mbpp.accel_fraction: must be in (0, 1], got {}",
                self.mbpp.accel_fraction
            ));
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    /// Physics substep duration, s.
    pub fn physics_dt(&self) -> f64 {
        self.control_dt() / self.rates.physics_substeps as f64
    }

    /// Control tick duration, s.
    pub fn control_dt(&self) -> f64 {
        1.0 / self.rates.control_hz
    }

    pub fn quad_params(&self) -> QuadParams {
        let (rotor_positions, rotor_spin_dirs) = QuadParams::x_layout(self.quad.arm_length);
        QuadParams {
            mass: self.quad.mass,
            inertia: Vector3::from(self.quad.inertia),
            thrust_coeff: self.quad.thrust_coeff,
            drag_torque_coeff: self.quad.drag_torque_coeff,
            motor_time_constant: self.quad.motor_time_constant,
            rotor_positions,
            rotor_spin_dirs,
            max_rotor_speed: self.quad.max_rotor_speed,
        }
    }

    pub fn ball_params(&self) -> BallParams {
        BallParams {
            mass: self.ball.mass,
            radius: self.ball.radius,
            drag_enabled: self.ball.drag_enabled,
            drag_coeff: self.ball.drag_coeff,
            air_density: self.ball.air_density,
        }
    }

    pub fn racket_geometry(&self) -> RacketGeometry {
        RacketGeometry {
            disc_radius: self.racket.disc_radius,
            sweet_radius: self.racket.sweet_radius,
            offset_body: Vector3::from(self.racket.offset_body),
            normal_body: Vector3::from(self.racket.normal_body).normalize(),
        }
    }

    pub fn restitution_model(&self) -> RestitutionModel {
        RestitutionModel {
            e_sweet: self.racket.restitution_sweet,
            e_outer: self.racket.restitution_outer,
            e_override: None,
        }
    }

    pub fn task_windows(&self) -> TaskWindows {
        TaskWindows {
            z_hit_min: self.windows.hit[0],
            z_hit_max: self.windows.hit[1],
            z_apex_min: self.windows.apex[0],
            z_apex_max: self.windows.apex[1],
        }
    }

    pub fn rate_gains(&self) -> RateControllerGains {
        RateControllerGains {
            kp: Vector3::from(self.control.kp),
            ki: Vector3::from(self.control.ki),
            kd: Vector3::from(self.control.kd),
            integrator_clamp: self.control.integrator_clamp,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let c = ScenarioConfig::default();
        let text = c.to_toml();
        let back = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(back.quad.mass, c.quad.mass);
        assert_eq!(back.ppo.hidden_sizes, c.ppo.hidden_sizes);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ScenarioConfig::from_toml("[quad]\nmass = 1.0\nunknown_field = 3\n");
        assert!(matches!(err, Err(ConfigError::Parse(_))));
    }

    #[test]
    fn invalid_ranges_report_field_paths() {
        let mut c = ScenarioConfig::default();
        c.quad.mass = -1.0;
        c.windows.hit = [1.4, 0.8];
        let err = c.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("quad.mass"));
        assert!(msg.contains("windows.hit"));
    }

    #[test]
    fn hash_changes_only_with_content() {
        let a = ScenarioConfig::default();
        let mut b = ScenarioConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.ball.mass = 0.005;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn presets_are_valid() {
        for name in ScenarioConfig::PRESET_NAMES {
            let c = ScenarioConfig::preset(name).unwrap();
            c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(ScenarioConfig::preset("nope").is_none());
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let c = ScenarioConfig::from_toml("seed = 7\n[ball]\nmass = 0.005\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.ball.mass, 0.005);
        assert_eq!(c.quad.mass, 1.090);
    }
}
