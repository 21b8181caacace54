//! Rigid-body quadrotor and ball flight dynamics with fixed-step RK4 integration.
//!
//! All functions here are pure: the same inputs produce bitwise-identical
//! outputs, and values are freely copyable across threads. The quadrotor state
//! follows the usual 6-DoF rigid-body model with first-order rotor dynamics;
//! the ball is a point mass under gravity with optional quadratic drag.
//!
//! Conventions: Hamilton quaternions, world-from-body attitude, world frame
//! z-up with gravity `(0, 0, -9.81)`.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::GRAVITY;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("integration step dt must be positive, got {0}")]
    InvalidDt(f64),
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Physical constants of the quadrotor platform.
#[derive(Debug, Clone)]
pub struct QuadParams {
    /// Total mass, kg.
    pub mass: f64,
    /// Diagonal body inertia (Ix, Iy, Iz), kg·m².
    pub inertia: Vector3<f64>,
    /// Per-rotor thrust coefficient k_f: thrust = k_f · Ω², N per (rad/s)².
    pub thrust_coeff: f64,
    /// Per-rotor drag-torque coefficient k_m: |torque| = k_m · Ω².
    pub drag_torque_coeff: f64,
    /// Rotor first-order time constant, s.
    pub motor_time_constant: f64,
    /// Rotor positions in the body frame, m.
    pub rotor_positions: [Vector3<f64>; 4],
    /// Rotor spin directions, +1 (CCW, torque along +z) or -1 (CW).
    pub rotor_spin_dirs: [f64; 4],
    /// Maximum rotor speed, rad/s.
    pub max_rotor_speed: f64,
}

impl QuadParams {
    /// X-configuration rotor layout for a given arm length: rotors on the
    /// body-frame diagonals, diagonal pairs spinning the same way.
    pub fn x_layout(arm_length: f64) -> ([Vector3<f64>; 4], [f64; 4]) {
        let a = arm_length / std::f64::consts::SQRT_2;
        (
            [
                Vector3::new(a, a, 0.0),   // front-left, CCW
                Vector3::new(a, -a, 0.0),  // front-right, CW
                Vector3::new(-a, a, 0.0),  // rear-left, CW
                Vector3::new(-a, -a, 0.0), // rear-right, CCW
            ],
            [1.0, -1.0, -1.0, 1.0],
        )
    }

    /// Per-rotor speed that balances gravity at level attitude.
    pub fn hover_rotor_speed(&self) -> f64 {
        (self.mass * GRAVITY / (4.0 * self.thrust_coeff)).sqrt()
    }

    /// Largest achievable collective thrust, N.
    pub fn max_collective_thrust(&self) -> f64 {
        4.0 * self.thrust_coeff * self.max_rotor_speed * self.max_rotor_speed
    }

    /// Maximum thrust of a single rotor, N.
    pub fn max_rotor_thrust(&self) -> f64 {
        self.thrust_coeff * self.max_rotor_speed * self.max_rotor_speed
    }
}

/// Physical constants of the ball.
#[derive(Debug, Clone)]
pub struct BallParams {
    /// Mass, kg.
    pub mass: f64,
    /// Radius, m.
    pub radius: f64,
    /// Whether quadratic aerodynamic drag acts during flight.
    pub drag_enabled: bool,
    /// Drag coefficient C_d (dimensionless).
    pub drag_coeff: f64,
    /// Air density, kg/m³.
    pub air_density: f64,
}

impl BallParams {
    /// Drag factor k such that the drag acceleration is `-k·‖v‖·v`.
    pub fn drag_factor(&self) -> f64 {
        if self.drag_enabled {
            0.5 * self.air_density * self.drag_coeff * std::f64::consts::PI * self.radius
                * self.radius
                / self.mass
        } else {
            0.0
        }
    }
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// Full quadrotor state: pose, twist, and rotor speeds.
#[derive(Debug, Clone, Copy)]
pub struct QuadState {
    /// Position in the world frame, m.
    pub position: Vector3<f64>,
    /// Attitude, world-from-body.
    pub attitude: UnitQuaternion<f64>,
    /// Linear velocity in the world frame, m/s.
    pub velocity: Vector3<f64>,
    /// Angular velocity in the body frame, rad/s.
    pub body_rates: Vector3<f64>,
    /// Rotor speeds, rad/s, each in `[0, max_rotor_speed]`.
    pub rotor_speeds: [f64; 4],
}

impl QuadState {
    /// Level attitude, zero twist, rotors at the hover speed, at `position`.
    pub fn hover_at(position: Vector3<f64>, params: &QuadParams) -> Self {
        let w = params.hover_rotor_speed();
        Self {
            position,
            attitude: UnitQuaternion::identity(),
            velocity: Vector3::zeros(),
            body_rates: Vector3::zeros(),
            rotor_speeds: [w; 4],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.attitude.coords.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.body_rates.iter().all(|v| v.is_finite())
            && self.rotor_speeds.iter().all(|v| v.is_finite())
    }
}

/// Ball translational state.
#[derive(Debug, Clone, Copy)]
pub struct BallState {
    /// Position in the world frame, m.
    pub position: Vector3<f64>,
    /// Velocity in the world frame, m/s.
    pub velocity: Vector3<f64>,
}

impl BallState {
    pub fn at_rest(position: Vector3<f64>) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite()) && self.velocity.iter().all(|v| v.is_finite())
    }

    /// Kinetic plus gravitational potential energy, J (drag-off invariant).
    pub fn mechanical_energy(&self, mass: f64) -> f64 {
        0.5 * mass * self.velocity.norm_squared() + mass * GRAVITY * self.position.z
    }
}

// ---------------------------------------------------------------------------
// Derivatives
// ---------------------------------------------------------------------------

/// Time-derivative of [`QuadState`]. The quaternion derivative is on the raw
/// (unnormalized) coordinates; normalization happens at integration time.
#[derive(Debug, Clone, Copy)]
pub struct QuadDerivative {
    pub d_position: Vector3<f64>,
    pub d_attitude: Quaternion<f64>,
    pub d_velocity: Vector3<f64>,
    pub d_body_rates: Vector3<f64>,
    pub d_rotor_speeds: [f64; 4],
}

/// Time-derivative of [`BallState`].
#[derive(Debug, Clone, Copy)]
pub struct BallDerivative {
    pub d_position: Vector3<f64>,
    pub d_velocity: Vector3<f64>,
}

/// World gravity vector.
pub fn gravity_w() -> Vector3<f64> {
    Vector3::new(0.0, 0.0, -GRAVITY)
}

/// Current translational acceleration of the quadrotor (thrust plus gravity).
pub fn quad_acceleration(state: &QuadState, params: &QuadParams) -> Vector3<f64> {
    let thrust: f64 = state
        .rotor_speeds
        .iter()
        .map(|w| params.thrust_coeff * w * w)
        .sum();
    state.attitude * Vector3::new(0.0, 0.0, thrust / params.mass) + gravity_w()
}

/// Quadrotor state derivative under a rotor-speed command.
///
/// Per-rotor thrust is `k_f·Ω²` along body z and drag torque `±k_m·Ω²` about
/// body z; rotor speeds follow a first-order lag toward the (clamped) command.
pub fn quad_derivative(
    state: &QuadState,
    params: &QuadParams,
    rotor_cmd: [f64; 4],
) -> Result<QuadDerivative, DynamicsError> {
    if !state.is_finite() {
        return Err(DynamicsError::NonFinite("quadrotor state"));
    }
    if !rotor_cmd.iter().all(|v| v.is_finite()) {
        return Err(DynamicsError::NonFinite("rotor command"));
    }
    Ok(quad_derivative_raw(
        &WorkQuad::from_state(state),
        params,
        rotor_cmd,
    )
    .into_derivative())
}

/// Ball state derivative: gravity plus optional quadratic drag.
pub fn ball_derivative(
    state: &BallState,
    params: &BallParams,
) -> Result<BallDerivative, DynamicsError> {
    if !state.is_finite() {
        return Err(DynamicsError::NonFinite("ball state"));
    }
    Ok(ball_derivative_raw(state, params))
}

fn ball_derivative_raw(state: &BallState, params: &BallParams) -> BallDerivative {
    let mut accel = gravity_w();
    let k = params.drag_factor();
    if k > 0.0 {
        accel -= k * state.velocity.norm() * state.velocity;
    }
    BallDerivative {
        d_position: state.velocity,
        d_velocity: accel,
    }
}

// Integration scratch state: quaternion kept raw so RK4 stage combinations
// stay linear; normalized only where a rotation is applied.
#[derive(Clone, Copy)]
struct WorkQuad {
    p: Vector3<f64>,
    q: Quaternion<f64>,
    v: Vector3<f64>,
    w: Vector3<f64>,
    rotors: [f64; 4],
}

#[derive(Clone, Copy)]
struct WorkQuadDeriv {
    dp: Vector3<f64>,
    dq: Quaternion<f64>,
    dv: Vector3<f64>,
    dw: Vector3<f64>,
    drotors: [f64; 4],
}

impl WorkQuad {
    fn from_state(s: &QuadState) -> Self {
        Self {
            p: s.position,
            q: *s.attitude.quaternion(),
            v: s.velocity,
            w: s.body_rates,
            rotors: s.rotor_speeds,
        }
    }

    fn add_scaled(&self, d: &WorkQuadDeriv, dt: f64) -> Self {
        Self {
            p: self.p + d.dp * dt,
            q: self.q + d.dq * dt,
            v: self.v + d.dv * dt,
            w: self.w + d.dw * dt,
            rotors: [
                self.rotors[0] + d.drotors[0] * dt,
                self.rotors[1] + d.drotors[1] * dt,
                self.rotors[2] + d.drotors[2] * dt,
                self.rotors[3] + d.drotors[3] * dt,
            ],
        }
    }

    fn into_state(self, params: &QuadParams) -> QuadState {
        QuadState {
            position: self.p,
            attitude: UnitQuaternion::from_quaternion(self.q),
            velocity: self.v,
            body_rates: self.w,
            rotor_speeds: self.rotors.map(|w| w.clamp(0.0, params.max_rotor_speed)),
        }
    }
}

impl WorkQuadDeriv {
    fn combine_rk4(k1: &Self, k2: &Self, k3: &Self, k4: &Self) -> Self {
        let s = 1.0 / 6.0;
        let mut drotors = [0.0; 4];
        for j in 0..4 {
            drotors[j] =
                s * (k1.drotors[j] + 2.0 * k2.drotors[j] + 2.0 * k3.drotors[j] + k4.drotors[j]);
        }
        Self {
            dp: s * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp),
            dq: s * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq),
            dv: s * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv),
            dw: s * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw),
            drotors,
        }
    }

    fn into_derivative(self) -> QuadDerivative {
        QuadDerivative {
            d_position: self.dp,
            d_attitude: self.dq,
            d_velocity: self.dv,
            d_body_rates: self.dw,
            d_rotor_speeds: self.drotors,
        }
    }
}

fn quad_derivative_raw(s: &WorkQuad, params: &QuadParams, rotor_cmd: [f64; 4]) -> WorkQuadDeriv {
    // Propeller wrench in the body frame.
    let mut thrust = 0.0;
    let mut torque = Vector3::zeros();
    for j in 0..4 {
        let w = s.rotors[j].clamp(0.0, params.max_rotor_speed);
        let f_j = params.thrust_coeff * w * w;
        thrust += f_j;
        torque.z += params.rotor_spin_dirs[j] * params.drag_torque_coeff * w * w;
        torque += params.rotor_positions[j].cross(&Vector3::new(0.0, 0.0, f_j));
    }

    // Rotation applied with a normalized copy; the raw q may drift mid-stage.
    let q_unit = UnitQuaternion::from_quaternion(s.q);
    let accel = q_unit * Vector3::new(0.0, 0.0, thrust / params.mass) + gravity_w();

    // Quaternion kinematics on raw coordinates: q̇ = ½ q ⊗ (0, ω_B).
    let dq = s.q * Quaternion::from_imag(s.w) * 0.5;

    let inertia = params.inertia;
    let i_omega = Vector3::new(inertia.x * s.w.x, inertia.y * s.w.y, inertia.z * s.w.z);
    let ang_mom_rate = torque - s.w.cross(&i_omega);
    let dw = Vector3::new(
        ang_mom_rate.x / inertia.x,
        ang_mom_rate.y / inertia.y,
        ang_mom_rate.z / inertia.z,
    );

    let mut drotors = [0.0; 4];
    for j in 0..4 {
        let cmd = rotor_cmd[j].clamp(0.0, params.max_rotor_speed);
        drotors[j] = (cmd - s.rotors[j]) / params.motor_time_constant;
    }

    WorkQuadDeriv {
        dp: s.v,
        dq,
        dv: accel,
        dw,
        drotors,
    }
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

/// One RK4 step of the coupled quadrotor + ball system.
///
/// The attitude quaternion is renormalized and rotor speeds are clamped to
/// `[0, max_rotor_speed]` after the step. Contact handling is not part of this
/// function; callers check for racket crossings between consecutive states.
pub fn integrate_step(
    quad: &QuadState,
    ball: &BallState,
    quad_params: &QuadParams,
    ball_params: &BallParams,
    rotor_cmd: [f64; 4],
    dt: f64,
) -> Result<(QuadState, BallState), DynamicsError> {
    if !(dt > 0.0) {
        return Err(DynamicsError::InvalidDt(dt));
    }
    if !quad.is_finite() {
        return Err(DynamicsError::NonFinite("quadrotor state"));
    }
    if !ball.is_finite() {
        return Err(DynamicsError::NonFinite("ball state"));
    }
    if !rotor_cmd.iter().all(|v| v.is_finite()) {
        return Err(DynamicsError::NonFinite("rotor command"));
    }

    let y0 = WorkQuad::from_state(quad);
    let k1 = quad_derivative_raw(&y0, quad_params, rotor_cmd);
    let k2 = quad_derivative_raw(&y0.add_scaled(&k1, 0.5 * dt), quad_params, rotor_cmd);
    let k3 = quad_derivative_raw(&y0.add_scaled(&k2, 0.5 * dt), quad_params, rotor_cmd);
    let k4 = quad_derivative_raw(&y0.add_scaled(&k3, dt), quad_params, rotor_cmd);
    let dq = WorkQuadDeriv::combine_rk4(&k1, &k2, &k3, &k4);
    let quad_next = y0.add_scaled(&dq, dt).into_state(quad_params);

    let ball_next = ball_rk4_step(ball, ball_params, dt);

    Ok((quad_next, ball_next))
}

/// One RK4 step of the ball alone (used by the environment and by the
/// planner's forward prediction).
pub fn ball_rk4_step(ball: &BallState, params: &BallParams, dt: f64) -> BallState {
    let add = |s: &BallState, d: &BallDerivative, h: f64| BallState {
        position: s.position + d.d_position * h,
        velocity: s.velocity + d.d_velocity * h,
    };
    let k1 = ball_derivative_raw(ball, params);
    let k2 = ball_derivative_raw(&add(ball, &k1, 0.5 * dt), params);
    let k3 = ball_derivative_raw(&add(ball, &k2, 0.5 * dt), params);
    let k4 = ball_derivative_raw(&add(ball, &k3, dt), params);
    BallState {
        position: ball.position
            + dt / 6.0
                * (k1.d_position + 2.0 * k2.d_position + 2.0 * k3.d_position + k4.d_position),
        velocity: ball.velocity
            + dt / 6.0
                * (k1.d_velocity + 2.0 * k2.d_velocity + 2.0 * k3.d_velocity + k4.d_velocity),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn table_quad() -> QuadParams {
        let (rotor_positions, rotor_spin_dirs) = QuadParams::x_layout(0.12);
        QuadParams {
            mass: 1.090,
            inertia: Vector3::new(5.29e-3, 5.62e-3, 7.80e-3),
            thrust_coeff: 5.39e-6,
            drag_torque_coeff: 0.016 * 5.39e-6,
            motor_time_constant: 0.05,
            rotor_positions,
            rotor_spin_dirs,
            max_rotor_speed: 1200.0,
        }
    }

    fn table_ball() -> BallParams {
        BallParams {
            mass: 0.0472,
            radius: 0.02,
            drag_enabled: false,
            drag_coeff: 0.47,
            air_density: 1.204,
        }
    }

    #[test]
    fn hover_rotor_speed_matches_thrust_balance() {
        let p = table_quad();
        let w = p.hover_rotor_speed();
        assert_relative_eq!(w, 704.2, epsilon = 0.1);
        assert_relative_eq!(4.0 * p.thrust_coeff * w * w, p.mass * GRAVITY, epsilon = 1e-12);
    }

    #[test]
    fn hover_is_an_equilibrium_of_the_derivative() {
        let p = table_quad();
        let s = QuadState::hover_at(Vector3::new(0.0, 0.0, 1.0), &p);
        let d = quad_derivative(&s, &p, s.rotor_speeds).unwrap();
        assert!(d.d_velocity.norm() < 1e-12);
        assert!(d.d_body_rates.norm() < 1e-12);
        assert!(d.d_position.norm() == 0.0);
        assert!(d.d_rotor_speeds.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_thrust_free_fall() {
        let p = table_quad();
        let mut s = QuadState::hover_at(Vector3::zeros(), &p);
        s.rotor_speeds = [0.0; 4];
        s.body_rates = Vector3::new(0.3, -0.2, 0.5);
        let d = quad_derivative(&s, &p, [0.0; 4]).unwrap();
        assert_relative_eq!(d.d_velocity.z, -GRAVITY, epsilon = 1e-12);
        assert_relative_eq!(d.d_velocity.x, 0.0, epsilon = 1e-12);
        // ω̇ = -I⁻¹(ω × Iω)
        let i = p.inertia;
        let iw = Vector3::new(i.x * s.body_rates.x, i.y * s.body_rates.y, i.z * s.body_rates.z);
        let expect = -s.body_rates.cross(&iw);
        assert_relative_eq!(d.d_body_rates.x, expect.x / i.x, epsilon = 1e-12);
        assert_relative_eq!(d.d_body_rates.y, expect.y / i.y, epsilon = 1e-12);
        assert_relative_eq!(d.d_body_rates.z, expect.z / i.z, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_equal_thrust_produces_no_torque() {
        let p = table_quad();
        let mut s = QuadState::hover_at(Vector3::zeros(), &p);
        s.rotor_speeds = [500.0; 4];
        let d = quad_derivative(&s, &p, [500.0; 4]).unwrap();
        assert!(d.d_body_rates.norm() < 1e-12);
    }

    #[test]
    fn drag_acceleration_hand_value() {
        let mut bp = table_ball();
        bp.drag_enabled = true;
        let s = BallState {
            position: Vector3::new(0.0, 0.0, 2.0),
            velocity: Vector3::new(0.0, 0.0, -10.0),
        };
        let d = ball_derivative(&s, &bp).unwrap();
        // -9.81 + (0.5·1.204·0.47·π·0.0004/0.0472)·100
        assert_relative_eq!(d.d_velocity.z, -9.057, epsilon = 1e-3);
    }

    #[test]
    fn drag_off_free_fall() {
        let bp = table_ball();
        let s = BallState::at_rest(Vector3::new(0.0, 0.0, 2.0));
        let d = ball_derivative(&s, &bp).unwrap();
        assert_relative_eq!(d.d_velocity.z, -GRAVITY, epsilon = 1e-15);
    }

    #[test]
    fn ballistic_parabola_is_exact_under_rk4() {
        let bp = table_ball();
        let mut ball = BallState::at_rest(Vector3::new(0.0, 0.0, 5.0));
        let dt = 1.0 / 400.0;
        for _ in 0..400 {
            ball = ball_rk4_step(&ball, &bp, dt);
        }
        let expect = 5.0 - 0.5 * GRAVITY;
        assert!((ball.position.z - expect).abs() < 1e-6);
        assert_relative_eq!(ball.velocity.z, -GRAVITY, epsilon = 1e-9);
    }

    #[test]
    fn hover_command_holds_position_for_ten_seconds() {
        let p = table_quad();
        let bp = table_ball();
        let start = Vector3::new(0.0, 0.0, 1.0);
        let mut quad = QuadState::hover_at(start, &p);
        let mut ball = BallState::at_rest(Vector3::new(5.0, 5.0, 50.0));
        let cmd = [p.hover_rotor_speed(); 4];
        let dt = 1.0 / 400.0;
        for _ in 0..4000 {
            let (q, b) = integrate_step(&quad, &ball, &p, &bp, cmd, dt).unwrap();
            quad = q;
            ball = b;
        }
        assert!((quad.position - start).norm() < 1e-3);
    }

    #[test]
    fn yaw_torque_gives_linear_rate_growth() {
        let p = table_quad();
        let bp = table_ball();
        // Inject a small yaw torque through differential drag: hold rotor
        // speeds so that thrust stays at hover but CCW pair spins faster.
        let w_h = p.hover_rotor_speed();
        let delta = 20.0;
        // equal thrust sum: w² terms — pick speeds with equal sum of squares
        let w_ccw = (w_h * w_h + delta).sqrt();
        let w_cw = (w_h * w_h - delta).sqrt();
        let speeds = [w_ccw, w_cw, w_cw, w_ccw];
        let tau_z: f64 = (0..4)
            .map(|j| p.rotor_spin_dirs[j] * p.drag_torque_coeff * speeds[j] * speeds[j])
            .sum();
        let mut quad = QuadState::hover_at(Vector3::zeros(), &p);
        quad.rotor_speeds = speeds;
        let mut ball = BallState::at_rest(Vector3::new(5.0, 5.0, 50.0));
        let dt = 1.0 / 400.0;
        let t_end = 0.1;
        for _ in 0..(t_end / dt) as usize {
            let (q, b) = integrate_step(&quad, &ball, &p, &bp, speeds, dt).unwrap();
            quad = q;
            ball = b;
        }
        let expect = tau_z / p.inertia.z * t_end;
        assert!((quad.body_rates.z - expect).abs() < 1e-4);
    }

    #[test]
    fn quaternion_stays_normalized_through_aggressive_tumble() {
        let p = table_quad();
        let bp = table_ball();
        let mut quad = QuadState::hover_at(Vector3::zeros(), &p);
        quad.body_rates = Vector3::new(6.0, -4.0, 3.0);
        let mut ball = BallState::at_rest(Vector3::new(5.0, 5.0, 50.0));
        let dt = 1.0 / 400.0;
        for _ in 0..2000 {
            let (q, b) = integrate_step(&quad, &ball, &p, &bp, [300.0; 4], dt).unwrap();
            quad = q;
            ball = b;
            assert!((quad.attitude.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ball_energy_conserved_without_drag() {
        let bp = table_ball();
        let mut ball = BallState {
            position: Vector3::new(0.0, 0.0, 10.0),
            velocity: Vector3::new(2.0, -1.0, 8.0),
        };
        let e0 = ball.mechanical_energy(bp.mass);
        let dt = 1.0 / 400.0;
        for _ in 0..2000 {
            ball = ball_rk4_step(&ball, &bp, dt);
        }
        assert!((ball.mechanical_energy(bp.mass) - e0).abs() < 1e-6);
    }

    #[test]
    fn drag_dissipates_energy_monotonically() {
        let mut bp = table_ball();
        bp.drag_enabled = true;
        let mut ball = BallState {
            position: Vector3::new(0.0, 0.0, 10.0),
            velocity: Vector3::new(3.0, 0.0, 5.0),
        };
        let mut prev = ball.mechanical_energy(bp.mass);
        let dt = 1.0 / 400.0;
        for _ in 0..1000 {
            ball = ball_rk4_step(&ball, &bp, dt);
            let e = ball.mechanical_energy(bp.mass);
            assert!(e <= prev + 1e-12);
            prev = e;
        }
    }

    #[test]
    fn derivative_is_pure() {
        let p = table_quad();
        let mut s = QuadState::hover_at(Vector3::new(0.1, -0.2, 1.3), &p);
        s.body_rates = Vector3::new(0.7, 0.1, -0.4);
        s.velocity = Vector3::new(0.5, 0.2, -0.1);
        let a = quad_derivative(&s, &p, [650.0, 700.0, 710.0, 660.0]).unwrap();
        let b = quad_derivative(&s, &p, [650.0, 700.0, 710.0, 660.0]).unwrap();
        assert_eq!(a.d_velocity, b.d_velocity);
        assert_eq!(a.d_body_rates, b.d_body_rates);
        assert_eq!(a.d_attitude, b.d_attitude);
    }

    #[test]
    fn rejects_non_finite_input() {
        let p = table_quad();
        let mut s = QuadState::hover_at(Vector3::zeros(), &p);
        s.velocity.x = f64::NAN;
        assert!(matches!(
            quad_derivative(&s, &p, [0.0; 4]),
            Err(DynamicsError::NonFinite(_))
        ));
        let ball = BallState::at_rest(Vector3::zeros());
        assert!(matches!(
            integrate_step(&s, &ball, &p, &table_ball(), [0.0; 4], 0.0),
            Err(DynamicsError::InvalidDt(_))
        ));
    }
}
