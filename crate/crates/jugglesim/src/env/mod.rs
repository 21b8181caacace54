//! The juggling MDP: observation assembly, reward, termination, domain
//! randomization, and a vectorized batch interface.
//!
//! One control step runs a fixed number of physics substeps with contact
//! handling in between, then assembles the 24-dimensional actor observation
//! (plus the critic's privileged normalized timestep), the reward breakdown,
//! and any hit/apex events. Every environment owns an independent
//! counter-based RNG stream, so batches are deterministic regardless of
//! thread scheduling.

mod batch;
mod reward;

pub use batch::{EpisodeStats, VecEnv};
pub use reward::{compute_reward, RewardBreakdown, RewardInputs};

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{QuadRowInterpretation, ScenarioConfig};
use crate::contact::{
    classify_hit, detect_contact, resolve_impact, ApexEvent, ApexTracker, HitEvent,
    RacketGeometry, RestitutionModel, TaskWindows,
};
use crate::control::{ActionNormalizer, RateController};
use crate::dynamics::{ball_rk4_step, integrate_step, BallParams, BallState, QuadParams, QuadState};

/// Actor observation length: quad [p, R, v] + ball [p, v, Δp].
pub const ACTOR_OBS_DIM: usize = 24;
/// Critic observation length: actor observation plus normalized timestep.
pub const CRITIC_OBS_DIM: usize = 25;
/// Action dimension: collective thrust + body rates.
pub const ACTION_DIM: usize = 4;

/// Contacts within this window after a resolved impact are ignored
/// (resting-contact chatter suppression), s.
const CONTACT_REFRACTORY: f64 = 0.01;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("step called on a finished episode (reset required)")]
    EpisodeFinished,
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
}

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    /// Ball touched the ground.
    Ground,
    /// Ball left the arena bounds.
    BallOutOfBounds,
    /// Quadrotor left its flight envelope.
    QuadOutOfBounds,
}

impl TerminationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationReason::Ground => "ground",
            TerminationReason::BallOutOfBounds => "ball_oob",
            TerminationReason::QuadOutOfBounds => "quad_oob",
        }
    }
}

/// Observation pair: shared actor view plus the critic's privileged extra.
#[derive(Debug, Clone, Copy)]
pub struct Observation {
    pub actor: [f64; ACTOR_OBS_DIM],
    /// Normalized episode timestep t / T_max.
    pub critic_extra: f64,
}

impl Observation {
    /// Critic input: actor observation with the normalized timestep appended.
    pub fn critic(&self) -> [f64; CRITIC_OBS_DIM] {
        let mut out = [0.0; CRITIC_OBS_DIM];
        out[..ACTOR_OBS_DIM].copy_from_slice(&self.actor);
        out[ACTOR_OBS_DIM] = self.critic_extra;
        out
    }
}

/// Per-episode bookkeeping.
#[derive(Debug, Clone, Copy, Default)]
pub struct EpisodeState {
    /// Control steps taken this episode.
    pub step: u32,
    /// Total contacts this episode (valid or not).
    pub contacts: u32,
    /// Valid hits since the last invalid hit (the consecutive-hit counter).
    pub consecutive_hits: u32,
    /// Episode maximum of the consecutive-hit counter (the § metric).
    pub max_consecutive_hits: u32,
    /// Sum of step rewards.
    pub return_sum: f64,
}

/// One control step's outputs.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: RewardBreakdown,
    pub terminated: Option<TerminationReason>,
    pub truncated: bool,
    /// Contacts resolved during this step (usually zero or one).
    pub hits: Vec<HitEvent>,
    /// Flight apex observed during this step, if any.
    pub apex: Option<ApexEvent>,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.terminated.is_some() || self.truncated
    }
}

/// Distinguishes the training cap from the one-minute evaluation cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeMode {
    Train,
    Eval,
}

/// Reset-time overrides used by evaluation sweeps.
#[derive(Debug, Clone, Copy, Default)]
pub struct ResetOverrides {
    /// Fixed ball release height (replaces the sampled one).
    pub release_height: Option<f64>,
    /// Fixed restitution override (replaces the sampled one).
    pub restitution: Option<f64>,
}

/// A single juggling environment.
#[derive(Debug, Clone)]
pub struct JuggleEnv {
    quad_params: QuadParams,
    ball_params: BallParams,
    geometry: RacketGeometry,
    restitution_base: RestitutionModel,
    windows: TaskWindows,
    dr: crate::config::DrConfig,
    bounds: crate::config::BoundsConfig,
    reward_toggles: crate::config::RewardConfig,
    normalizer: ActionNormalizer,
    controller: RateController,
    physics_dt: f64,
    substeps: u32,
    t_max: u32,
    overrides: ResetOverrides,

    rng: ChaCha8Rng,
    quad: QuadState,
    ball: BallState,
    restitution: RestitutionModel,
    apex_tracker: ApexTracker,
    refractory: f64,
    prev_action: [f64; ACTION_DIM],
    time: f64,
    episode: EpisodeState,
    finished: bool,
}

impl JuggleEnv {
    /// Build an environment whose RNG is an independent stream of the root
    /// seed; `stream` is typically the environment's index in a batch.
    pub fn new(config: &ScenarioConfig, mode: EpisodeMode, root_seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
        rng.set_stream(stream);
        let quad_params = config.quad_params();
        let normalizer = ActionNormalizer::new(&quad_params, config.control.rate_limit);
        let controller = RateController::new(config.rate_gains(), &quad_params);
        let t_max = match mode {
            EpisodeMode::Train => config.episode.train_steps,
            EpisodeMode::Eval => config.episode.eval_steps,
        };
        let mut env = Self {
            ball_params: config.ball_params(),
            geometry: config.racket_geometry(),
            restitution_base: config.restitution_model(),
            windows: config.task_windows(),
            dr: config.domain_randomization.clone(),
            bounds: config.bounds.clone(),
            reward_toggles: config.reward.clone(),
            normalizer,
            controller,
            physics_dt: config.physics_dt(),
            substeps: config.rates.physics_substeps,
            t_max,
            overrides: ResetOverrides::default(),
            rng,
            quad: QuadState::hover_at(Vector3::new(0.0, 0.0, 1.0), &quad_params),
            ball: BallState::at_rest(Vector3::new(0.0, 0.0, 1.75)),
            restitution: config.restitution_model(),
            apex_tracker: ApexTracker::default(),
            refractory: 0.0,
            prev_action: [0.0; ACTION_DIM],
            time: 0.0,
            episode: EpisodeState::default(),
            finished: true,
            quad_params,
        };
        env.reset();
        env
    }

    pub fn set_overrides(&mut self, overrides: ResetOverrides) {
        self.overrides = overrides;
    }

    pub fn quad_params(&self) -> &QuadParams {
        &self.quad_params
    }

    pub fn ball_params(&self) -> &BallParams {
        &self.ball_params
    }

    pub fn normalizer(&self) -> &ActionNormalizer {
        &self.normalizer
    }

    pub fn windows(&self) -> &TaskWindows {
        &self.windows
    }

    pub fn quad_state(&self) -> &QuadState {
        &self.quad
    }

    pub fn ball_state(&self) -> &BallState {
        &self.ball
    }

    pub fn episode_state(&self) -> &EpisodeState {
        &self.episode
    }

    pub fn restitution_in_effect(&self) -> &RestitutionModel {
        &self.restitution
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn t_max(&self) -> u32 {
        self.t_max
    }

    fn sample_range(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
        if range[0] == range[1] {
            range[0]
        } else {
            rng.gen_range(range[0]..=range[1])
        }
    }

    fn midpoint(range: [f64; 2]) -> f64 {
        0.5 * (range[0] + range[1])
    }

    /// Start a new episode: sample initial poses and the restitution override
    /// from the randomization ranges (midpoints when a group is disabled),
    /// place the quadrotor at hover and the ball at rest above it.
    ///
    /// Sampling order is fixed (restitution, ball x/y/z, quad x/y/z) so a
    /// seeded stream reproduces episodes bitwise.
    pub fn reset(&mut self) -> Observation {
        let dr = self.dr.clone();
        let e = if let Some(e) = self.overrides.restitution {
            Some(e)
        } else if dr.randomize_restitution {
            Some(Self::sample_range(&mut self.rng, dr.restitution))
        } else {
            None
        };

        let (ball_x, ball_y) = if dr.randomize_horizontal {
            (
                Self::sample_range(&mut self.rng, dr.ball_xy0),
                Self::sample_range(&mut self.rng, dr.ball_xy0),
            )
        } else {
            (Self::midpoint(dr.ball_xy0), Self::midpoint(dr.ball_xy0))
        };
        let ball_z = if let Some(h) = self.overrides.release_height {
            h
        } else if dr.randomize_height {
            Self::sample_range(&mut self.rng, dr.ball_z0)
        } else {
            Self::midpoint(dr.ball_z0)
        };

        let (quad_x, mut quad_y) = if dr.randomize_horizontal {
            (
                Self::sample_range(&mut self.rng, dr.quad_xy0),
                Self::sample_range(&mut self.rng, dr.quad_xy0),
            )
        } else {
            (Self::midpoint(dr.quad_xy0), Self::midpoint(dr.quad_xy0))
        };
        let quad_z = match dr.quad_row {
            QuadRowInterpretation::Z => {
                if dr.randomize_height {
                    Self::sample_range(&mut self.rng, dr.quad_z0)
                } else {
                    Self::midpoint(dr.quad_z0)
                }
            }
            QuadRowInterpretation::Y => {
                // literal reading: the [0.9, 1.1] row is a lateral offset
                quad_y = if dr.randomize_height {
                    Self::sample_range(&mut self.rng, dr.quad_z0)
                } else {
                    Self::midpoint(dr.quad_z0)
                };
                1.0
            }
        };

        self.restitution = RestitutionModel {
            e_override: e,
            ..self.restitution_base
        };
        self.quad = QuadState::hover_at(Vector3::new(quad_x, quad_y, quad_z), &self.quad_params);
        self.ball = BallState::at_rest(Vector3::new(ball_x, ball_y, ball_z));
        self.controller.reset();
        self.apex_tracker = ApexTracker::default();
        self.refractory = 0.0;
        self.prev_action = [0.0; ACTION_DIM];
        self.time = 0.0;
        self.episode = EpisodeState::default();
        self.finished = false;
        self.observe()
    }

    /// One 50 Hz control step: zero-order-hold the normalized action over the
    /// physics substeps, handle contacts and apexes, then emit observation,
    /// reward, events, and termination flags.
    pub fn step(&mut self, raw_action: [f64; ACTION_DIM]) -> Result<StepOutcome, EnvError> {
        if self.finished {
            return Err(EnvError::EpisodeFinished);
        }

        let action = raw_action.map(|a| a.clamp(-1.0, 1.0));
        let ctbr = self.normalizer.normalize(action);

        let mut hits = Vec::new();
        let mut apex = None;
        let mut terminated = None;

        for _ in 0..self.substeps {
            let rotor_cmd = self.controller.ctbr_to_rotor_cmd(
                &ctbr,
                &self.quad,
                &self.quad_params,
                self.physics_dt,
            );
            let (quad_next, mut ball_next) = integrate_step(
                &self.quad,
                &self.ball,
                &self.quad_params,
                &self.ball_params,
                rotor_cmd,
                self.physics_dt,
            )?;

            let mut impacted = false;
            if self.refractory <= 0.0 {
                if let Some(contact) =
                    detect_contact(&quad_next, &self.ball, &ball_next, &self.geometry)
                {
                    let v_in = self.ball.velocity
                        + (ball_next.velocity - self.ball.velocity) * contact.time_fraction;
                    let (post, e) =
                        resolve_impact(&contact, v_in, &self.restitution, &self.geometry);
                    // finish the substep from the contact point
                    let remainder = (1.0 - contact.time_fraction) * self.physics_dt;
                    ball_next = if remainder > 0.0 {
                        ball_rk4_step(&post, &self.ball_params, remainder)
                    } else {
                        post
                    };

                    let hit_valid = classify_hit(contact.point_world.z, &self.windows);
                    self.episode.contacts += 1;
                    if hit_valid {
                        self.episode.consecutive_hits += 1;
                        self.episode.max_consecutive_hits = self
                            .episode
                            .max_consecutive_hits
                            .max(self.episode.consecutive_hits);
                    } else {
                        self.episode.consecutive_hits = 0;
                    }
                    hits.push(HitEvent {
                        time: self.time + contact.time_fraction * self.physics_dt,
                        contact_point: contact.point_world,
                        d_axis: contact.d_axis,
                        pre_velocity: v_in,
                        post_velocity: post.velocity,
                        racket_velocity: contact.racket_velocity,
                        restitution: e,
                        hit_valid,
                        apex_valid: None,
                    });
                    self.apex_tracker.arm();
                    self.refractory = CONTACT_REFRACTORY;
                    impacted = true;
                }
            }
            self.refractory -= self.physics_dt;

            if !impacted {
                if let Some(ev) = self.apex_tracker.observe(&self.ball, &ball_next, &self.windows)
                {
                    apex = Some(ev);
                    if let Some(last) = hits.last_mut() {
                        last.apex_valid = Some(ev.apex_valid);
                    }
                }
            }

            self.quad = quad_next;
            self.ball = ball_next;
            self.time += self.physics_dt;

            terminated = self.check_termination();
            if terminated.is_some() {
                break;
            }
        }

        self.episode.step += 1;
        let truncated = terminated.is_none() && self.episode.step >= self.t_max;
        self.finished = terminated.is_some() || truncated;

        let first_valid_hit = hits.iter().find(|h| h.hit_valid);
        let inputs = RewardInputs {
            d_xy: (self.ball.position.xy() - self.quad.position.xy()).norm(),
            d_axis: first_valid_hit.map_or(0.0, |h| h.d_axis),
            d_quad: self.quad.position.xy().norm(),
            yaw: self.yaw(),
            action_error: action
                .iter()
                .zip(self.prev_action.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            hit: first_valid_hit.is_some(),
            apex: apex.map_or(false, |a| a.apex_valid),
        };
        let reward = compute_reward(&inputs, &self.reward_toggles);
        self.episode.return_sum += reward.total;
        self.prev_action = action;

        Ok(StepOutcome {
            observation: self.observe(),
            reward,
            terminated,
            truncated,
            hits,
            apex,
        })
    }

    /// Yaw extracted from the rotation matrix (Z-Y-X convention), (-π, π].
    fn yaw(&self) -> f64 {
        let r = self.quad.attitude.to_rotation_matrix();
        r[(1, 0)].atan2(r[(0, 0)])
    }

    fn check_termination(&self) -> Option<TerminationReason> {
        let b = &self.ball.position;
        if b.z <= self.ball_params.radius {
            return Some(TerminationReason::Ground);
        }
        if b.x.abs() > self.bounds.xy_limit
            || b.y.abs() > self.bounds.xy_limit
            || b.z > self.bounds.ball_ceiling
        {
            return Some(TerminationReason::BallOutOfBounds);
        }
        let q = &self.quad.position;
        if q.x.abs() > self.bounds.xy_limit
            || q.y.abs() > self.bounds.xy_limit
            || q.z < self.bounds.quad_z[0]
            || q.z > self.bounds.quad_z[1]
        {
            return Some(TerminationReason::QuadOutOfBounds);
        }
        None
    }

    /// Assemble the observation from the current state.
    pub fn observe(&self) -> Observation {
        let mut actor = [0.0; ACTOR_OBS_DIM];
        let q = &self.quad;
        let r = q.attitude.to_rotation_matrix();
        actor[0] = q.position.x;
        actor[1] = q.position.y;
        actor[2] = q.position.z;
        // rotation matrix, row-major
        let mut k = 3;
        for row in 0..3 {
            for col in 0..3 {
                actor[k] = r[(row, col)];
                k += 1;
            }
        }
        actor[12] = q.velocity.x;
        actor[13] = q.velocity.y;
        actor[14] = q.velocity.z;
        actor[15] = self.ball.position.x;
        actor[16] = self.ball.position.y;
        actor[17] = self.ball.position.z;
        actor[18] = self.ball.velocity.x;
        actor[19] = self.ball.velocity.y;
        actor[20] = self.ball.velocity.z;
        let dp = self.ball.position - q.position;
        actor[21] = dp.x;
        actor[22] = dp.y;
        actor[23] = dp.z;
        Observation {
            actor,
            critic_extra: self.episode.step as f64 / self.t_max as f64,
        }
    }
}
