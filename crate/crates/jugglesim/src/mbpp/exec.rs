//! Plan execution: a predict → plan → open-loop-execute controller cycle.
//!
//! Each control tick the ball filter ingests a position measurement. While
//! waiting, the vehicle holds a station pose beside the drop zone; once a
//! feasible interception exists it replans every tick until the freeze margin
//! before contact and then flies the last plan open loop. Tracking uses a
//! differential-flatness feedforward (desired acceleration → thrust vector →
//! attitude) with PD position/velocity correction and a P attitude law.

use nalgebra::{UnitQuaternion, Vector3};

use super::filter::BallFilter;
use super::plan::{plan_interception, InterceptionPlan, PlanError, PlanRequest};
use super::predict::predict_ball;
use crate::config::ScenarioConfig;
use crate::control::CtbrCommand;
use crate::dynamics::{gravity_w, quad_acceleration, BallParams, QuadParams, QuadState};

/// One planner decision, for logging.
#[derive(Debug, Clone, Copy)]
pub struct PlanDecision {
    pub time: f64,
    pub t_hit: Option<f64>,
    pub feasible: bool,
    pub hit_x: f64,
    pub hit_y: f64,
    pub peak_accel: f64,
}

#[derive(Debug, Clone)]
enum Phase {
    /// Hold the station pose (no feasible interception in sight) or hover
    /// under the predicted hit point waiting for the strike window.
    Waiting,
    /// Fly the strike plan; `elapsed` is time since the plan started.
    Engaging {
        plan: InterceptionPlan,
        elapsed: f64,
        frozen: bool,
    },
}

/// The model-based predictive planner.
pub struct MbppController {
    filter: BallFilter,
    phase: Phase,
    /// Hover target under the predicted hit point while a feasible
    /// interception waits for the strike window.
    staging: Option<Vector3<f64>>,
    quad_params: QuadParams,
    ball_params: BallParams,
    racket_offset_z: f64,
    control_dt: f64,
    station: Vector3<f64>,
    hit_height: f64,
    target_apex: f64,
    e_assumed: f64,
    accel_bound: f64,
    freeze_margin: f64,
    strike_window: f64,
    staging_depth: f64,
    track_kp: f64,
    track_kd: f64,
    attitude_gain: f64,
    initialized: bool,
    time: f64,
    pub decisions: Vec<PlanDecision>,
}

impl MbppController {
    pub fn new(config: &ScenarioConfig) -> Self {
        let quad_params = config.quad_params();
        let mbpp = &config.mbpp;
        let accel_bound = mbpp.accel_fraction
            * (quad_params.max_collective_thrust() / quad_params.mass - crate::GRAVITY);
        Self {
            filter: BallFilter::new(mbpp.kf_process_noise, mbpp.kf_measurement_noise),
            phase: Phase::Waiting,
            staging: None,
            ball_params: config.ball_params(),
            racket_offset_z: config.racket.offset_body[2],
            control_dt: config.control_dt(),
            station: Vector3::from(mbpp.station),
            hit_height: mbpp.plan_hit_height,
            target_apex: mbpp.target_apex,
            e_assumed: mbpp.assumed_restitution,
            accel_bound,
            freeze_margin: mbpp.freeze_margin,
            strike_window: mbpp.strike_window,
            staging_depth: mbpp.staging_depth,
            track_kp: mbpp.track_kp,
            track_kd: mbpp.track_kd,
            attitude_gain: mbpp.attitude_gain,
            initialized: false,
            time: 0.0,
            quad_params,
            decisions: Vec::new(),
        }
    }

    pub fn reset(&mut self) {
        self.phase = Phase::Waiting;
        self.initialized = false;
        self.time = 0.0;
        self.decisions.clear();
    }

    pub fn accel_bound(&self) -> f64 {
        self.accel_bound
    }

    /// One 50 Hz decision tick. `ball_measurement` is the observed ball
    /// position; `hit_occurred` reports a racket contact since the last tick.
    pub fn command(
        &mut self,
        quad: &QuadState,
        ball_measurement: Vector3<f64>,
        hit_occurred: bool,
    ) -> CtbrCommand {
        if !self.initialized {
            self.filter.initialize(ball_measurement);
            self.initialized = true;
        } else {
            self.filter.step(Some(ball_measurement), self.control_dt);
        }
        self.time += self.control_dt;

        if hit_occurred {
            // plan consumed; recover and wait for the next descent
            self.phase = Phase::Waiting;
        }

        // advance or refresh the active plan
        self.phase = match std::mem::replace(&mut self.phase, Phase::Waiting) {
            Phase::Waiting => match self.try_plan(quad) {
                Some(plan) => Phase::Engaging {
                    plan,
                    elapsed: 0.0,
                    frozen: false,
                },
                None => Phase::Waiting,
            },
            Phase::Engaging {
                plan,
                elapsed,
                frozen,
            } => {
                let elapsed = elapsed + self.control_dt;
                let remaining = plan.t_hit - elapsed;
                if remaining <= -2.0 * self.control_dt {
                    // contact window passed without a reported hit: miss
                    Phase::Waiting
                } else if frozen || remaining <= self.freeze_margin {
                    Phase::Engaging {
                        plan,
                        elapsed,
                        frozen: true,
                    }
                } else {
                    // replan from the current state each tick
                    match self.try_plan(quad) {
                        Some(new_plan) => Phase::Engaging {
                            plan: new_plan,
                            elapsed: 0.0,
                            frozen: false,
                        },
                        None => Phase::Engaging {
                            plan,
                            elapsed,
                            frozen,
                        },
                    }
                }
            }
        };

        let (p_ref, v_ref, a_ref) = match &self.phase {
            Phase::Waiting => (self.station, Vector3::zeros(), Vector3::zeros()),
            Phase::Engaging { plan, elapsed, .. } => {
                let t = elapsed.min(plan.t_hit);
                (plan.position(t), plan.velocity(t), plan.acceleration(t))
            }
        };
        self.track(quad, p_ref, v_ref, a_ref)
    }

    fn try_plan(&mut self, quad: &QuadState) -> Option<InterceptionPlan> {
        let estimate = crate::dynamics::BallState {
            position: self.filter.position(),
            velocity: self.filter.velocity(),
        };
        let prediction = predict_ball(&estimate, &self.ball_params, 3.0);
        let request = PlanRequest {
            prediction: &prediction,
            hit_height: self.hit_height,
            target_apex: self.target_apex,
            e_assumed: self.e_assumed,
            racket_offset_z: self.racket_offset_z,
            quad_position: quad.position,
            quad_velocity: quad.velocity,
            quad_acceleration: quad_acceleration(quad, &self.quad_params),
            accel_bound: self.accel_bound,
            ball_params: &self.ball_params,
        };
        match plan_interception(&request) {
            Ok(plan) => {
                self.decisions.push(PlanDecision {
                    time: self.time,
                    t_hit: Some(plan.t_hit),
                    feasible: true,
                    hit_x: plan.hit_point.x,
                    hit_y: plan.hit_point.y,
                    peak_accel: plan.peak_accel,
                });
                Some(plan)
            }
            Err(e) => {
                let (t_hit, peak) = match e {
                    PlanError::Infeasible { required, .. } => (None, required),
                    PlanError::TooSoon { t_hit } => (Some(t_hit), 0.0),
                    PlanError::NoCrossing => (None, 0.0),
                };
                self.decisions.push(PlanDecision {
                    time: self.time,
                    t_hit,
                    feasible: false,
                    hit_x: 0.0,
                    hit_y: 0.0,
                    peak_accel: peak,
                });
                None
            }
        }
    }

    /// Differential-flatness tracking of a (p, v, a) reference.
    fn track(
        &self,
        quad: &QuadState,
        p_ref: Vector3<f64>,
        v_ref: Vector3<f64>,
        a_ref: Vector3<f64>,
    ) -> CtbrCommand {
        let a_cmd = a_ref
            + self.track_kp * (p_ref - quad.position)
            + self.track_kd * (v_ref - quad.velocity);
        // thrust vector that produces a_cmd against gravity
        let f_vec = self.quad_params.mass * (a_cmd - gravity_w());
        let f_norm = f_vec.norm().max(1e-6);
        let collective = f_norm.min(self.quad_params.max_collective_thrust());
        let z_desired = f_vec / f_norm;

        let z_body = quad.attitude * Vector3::new(0.0, 0.0, 1.0);
        // attitude error as an axis scaled by the sine of the tilt error
        let error_world = z_body.cross(&z_desired);
        let omega_world = self.attitude_gain * error_world;
        let mut body_rates = quad.attitude.inverse() * omega_world;
        // hold zero yaw
        let yaw = yaw_of(&quad.attitude);
        body_rates.z = -self.attitude_gain * yaw;

        CtbrCommand {
            collective_thrust: collective,
            body_rates,
        }
    }
}

fn yaw_of(q: &UnitQuaternion<f64>) -> f64 {
    let r = q.to_rotation_matrix();
    r[(1, 0)].atan2(r[(0, 0)])
}
