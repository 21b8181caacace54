//! Low-level controller: CTBR commands to rotor speed commands.
//!
//! The policy (or planner) outputs a collective thrust and body rates at the
//! control rate; this loop runs at the physics substep rate, closes a PID
//! around the body-rate error, and allocates per-rotor thrusts through a
//! geometry-derived mixer. On saturation, collective thrust is preserved
//! first, then roll/pitch torque; yaw torque is shed first.

use nalgebra::{Matrix4, Vector3, Vector4};

use crate::dynamics::{QuadParams, QuadState};

/// Mid-level command: collective thrust plus body rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtbrCommand {
    /// Total thrust along body z, N. Non-negative.
    pub collective_thrust: f64,
    /// Commanded body rates (roll, pitch, yaw), rad/s.
    pub body_rates: Vector3<f64>,
}

/// PID gains on the body-rate error, producing torque directly (N·m per rad/s).
#[derive(Debug, Clone, Copy)]
pub struct RateControllerGains {
    pub kp: Vector3<f64>,
    pub ki: Vector3<f64>,
    pub kd: Vector3<f64>,
    /// Clamp on each axis of the integral state, rad.
    pub integrator_clamp: f64,
}

impl Default for RateControllerGains {
    fn default() -> Self {
        Self {
            kp: Vector3::new(0.25, 0.25, 0.25),
            ki: Vector3::new(0.05, 0.05, 0.05),
            kd: Vector3::new(0.006, 0.006, 0.006),
            integrator_clamp: 0.5,
        }
    }
}

/// Maps raw policy outputs in [-1, 1]⁴ to physical CTBR commands.
#[derive(Debug, Clone, Copy)]
pub struct ActionNormalizer {
    /// Thrust at raw[0] = +1, N.
    pub max_collective_thrust: f64,
    /// Body-rate magnitude at |raw| = 1, rad/s.
    pub rate_limit: f64,
}

impl ActionNormalizer {
    pub fn new(params: &QuadParams, rate_limit: f64) -> Self {
        Self {
            max_collective_thrust: params.max_collective_thrust(),
            rate_limit,
        }
    }

    /// Clamp components to [-1, 1], then scale: thrust affine over
    /// [0, c_max], rates linear over [-limit, limit].
    pub fn normalize(&self, raw: [f64; 4]) -> CtbrCommand {
        let r: Vec<f64> = raw.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        CtbrCommand {
            collective_thrust: (r[0] + 1.0) * 0.5 * self.max_collective_thrust,
            body_rates: Vector3::new(
                r[1] * self.rate_limit,
                r[2] * self.rate_limit,
                r[3] * self.rate_limit,
            ),
        }
    }

    /// Inverse mapping (used to drive the environment from planner commands).
    pub fn to_raw(&self, cmd: &CtbrCommand) -> [f64; 4] {
        [
            (2.0 * cmd.collective_thrust / self.max_collective_thrust - 1.0).clamp(-1.0, 1.0),
            (cmd.body_rates.x / self.rate_limit).clamp(-1.0, 1.0),
            (cmd.body_rates.y / self.rate_limit).clamp(-1.0, 1.0),
            (cmd.body_rates.z / self.rate_limit).clamp(-1.0, 1.0),
        ]
    }
}

/// Stateful rate controller: PID on body-rate error plus thrust allocation.
/// One instance per vehicle; instances are independent.
#[derive(Debug, Clone)]
pub struct RateController {
    gains: RateControllerGains,
    mixer: Mixer,
    integral: Vector3<f64>,
    prev_error: Option<Vector3<f64>>,
}

impl RateController {
    pub fn new(gains: RateControllerGains, params: &QuadParams) -> Self {
        Self {
            gains,
            mixer: Mixer::new(params),
            integral: Vector3::zeros(),
            prev_error: None,
        }
    }

    /// Clear integrator and derivative history (on episode reset).
    pub fn reset(&mut self) {
        self.integral = Vector3::zeros();
        self.prev_error = None;
    }

    /// One controller tick: body-rate PID to desired torque, then mixing to
    /// rotor speed commands clamped to `[0, max_rotor_speed]`.
    pub fn ctbr_to_rotor_cmd(
        &mut self,
        cmd: &CtbrCommand,
        state: &QuadState,
        params: &QuadParams,
        dt: f64,
    ) -> [f64; 4] {
        let error = cmd.body_rates - state.body_rates;
        self.integral += error * dt;
        let clamp = self.gains.integrator_clamp;
        self.integral = self.integral.map(|v| v.clamp(-clamp, clamp));
        let derivative = match self.prev_error {
            Some(prev) => (error - prev) / dt,
            None => Vector3::zeros(),
        };
        self.prev_error = Some(error);

        let torque = Vector3::new(
            self.gains.kp.x * error.x
                + self.gains.ki.x * self.integral.x
                + self.gains.kd.x * derivative.x,
            self.gains.kp.y * error.y
                + self.gains.ki.y * self.integral.y
                + self.gains.kd.y * derivative.y,
            self.gains.kp.z * error.z
                + self.gains.ki.z * self.integral.z
                + self.gains.kd.z * derivative.z,
        );

        let thrusts = self.mixer.allocate(cmd.collective_thrust, torque, params);
        thrusts.map(|f| (f / params.thrust_coeff).max(0.0).sqrt().min(params.max_rotor_speed))
    }
}

/// Thrust allocator derived from the rotor geometry.
///
/// Solves `M·f = (c, τx, τy, τz)` where row 0 sums thrusts, rows 1-2 are the
/// moment arms, and row 3 carries the drag-torque ratio k_m/k_f per spin
/// direction.
#[derive(Debug, Clone)]
pub struct Mixer {
    inverse: Matrix4<f64>,
}

impl Mixer {
    pub fn new(params: &QuadParams) -> Self {
        let kappa = params.drag_torque_coeff / params.thrust_coeff;
        let mut m = Matrix4::zeros();
        for j in 0..4 {
            let r = params.rotor_positions[j];
            m[(0, j)] = 1.0;
            m[(1, j)] = r.y;
            m[(2, j)] = -r.x;
            m[(3, j)] = params.rotor_spin_dirs[j] * kappa;
        }
        let inverse = m.try_inverse().expect("rotor layout must be controllable");
        Self { inverse }
    }

    /// Per-rotor thrusts from the wrench, in N.
    fn solve(&self, c: f64, torque: Vector3<f64>) -> [f64; 4] {
        let f = self.inverse * Vector4::new(c, torque.x, torque.y, torque.z);
        [f[0], f[1], f[2], f[3]]
    }

    /// Recompute the wrench a thrust vector produces (round-trip check).
    pub fn wrench(&self, thrusts: [f64; 4], params: &QuadParams) -> (f64, Vector3<f64>) {
        let kappa = params.drag_torque_coeff / params.thrust_coeff;
        let mut c = 0.0;
        let mut tau = Vector3::zeros();
        for j in 0..4 {
            let r = params.rotor_positions[j];
            c += thrusts[j];
            tau.x += r.y * thrusts[j];
            tau.y += -r.x * thrusts[j];
            tau.z += params.rotor_spin_dirs[j] * kappa * thrusts[j];
        }
        (c, tau)
    }

    /// Allocate with the saturation policy: clamp collective thrust to the
    /// achievable range, shed yaw torque first, then roll/pitch, keeping the
    /// collective thrust.
    pub fn allocate(&self, c: f64, torque: Vector3<f64>, params: &QuadParams) -> [f64; 4] {
        let f_max = params.max_rotor_thrust();
        let c = c.clamp(0.0, 4.0 * f_max);

        let full = self.solve(c, torque);
        if feasible(&full, f_max) {
            return full;
        }

        // Shed yaw: f = base + s·yaw_dir, largest s in [0, 1].
        let base = self.solve(c, Vector3::new(torque.x, torque.y, 0.0));
        let yaw_only = self.solve(0.0, Vector3::new(0.0, 0.0, torque.z));
        if feasible(&base, f_max) {
            let s = max_feasible_scale(&base, &yaw_only, f_max);
            let f = add_scaled(&base, &yaw_only, s);
            if feasible(&f, f_max) {
                return f;
            }
            return base;
        }

        // Roll/pitch also saturating: scale them from the pure-collective
        // solution, which is always feasible for clamped c.
        let hover = self.solve(c, Vector3::zeros());
        let rp_only = self.solve(0.0, Vector3::new(torque.x, torque.y, 0.0));
        let t = max_feasible_scale(&hover, &rp_only, f_max);
        let f = add_scaled(&hover, &rp_only, t);
        if feasible(&f, f_max) {
            f
        } else {
            hover
        }
    }
}

fn feasible(f: &[f64; 4], f_max: f64) -> bool {
    f.iter().all(|&v| (-1e-12..=f_max + 1e-12).contains(&v))
}

fn add_scaled(base: &[f64; 4], delta: &[f64; 4], s: f64) -> [f64; 4] {
    [
        base[0] + s * delta[0],
        base[1] + s * delta[1],
        base[2] + s * delta[2],
        base[3] + s * delta[3],
    ]
}

/// Largest s in [0, 1] with every component of base + s·delta inside [0, f_max].
fn max_feasible_scale(base: &[f64; 4], delta: &[f64; 4], f_max: f64) -> f64 {
    let mut s = 1.0f64;
    for j in 0..4 {
        if delta[j] > 0.0 {
            s = s.min((f_max - base[j]) / delta[j]);
        } else if delta[j] < 0.0 {
            s = s.min((0.0 - base[j]) / delta[j]);
        }
    }
    s.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate_step, BallParams, BallState, QuadState};
    use crate::GRAVITY;
    use approx::assert_relative_eq;

    fn params() -> QuadParams {
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

    #[test]
    fn hover_thrust_command_gives_hover_rotor_speed() {
        let p = params();
        let mut ctl = RateController::new(RateControllerGains::default(), &p);
        let state = QuadState::hover_at(Vector3::zeros(), &p);
        let cmd = CtbrCommand {
            collective_thrust: p.mass * GRAVITY,
            body_rates: Vector3::zeros(),
        };
        let rotor = ctl.ctbr_to_rotor_cmd(&cmd, &state, &p, 1.0 / 400.0);
        for w in rotor {
            assert_relative_eq!(w, 704.2, epsilon = 0.1);
        }
    }

    #[test]
    fn zero_thrust_zero_rates_gives_zero_command() {
        let p = params();
        let mut ctl = RateController::new(RateControllerGains::default(), &p);
        let state = QuadState::hover_at(Vector3::zeros(), &p);
        let cmd = CtbrCommand {
            collective_thrust: 0.0,
            body_rates: Vector3::zeros(),
        };
        let rotor = ctl.ctbr_to_rotor_cmd(&cmd, &state, &p, 1.0 / 400.0);
        assert_eq!(rotor, [0.0; 4]);
    }

    #[test]
    fn yaw_error_splits_rotor_pairs_without_touching_roll_pitch() {
        let p = params();
        let mixer = Mixer::new(&p);
        let c = p.mass * GRAVITY;
        let f = mixer.allocate(c, Vector3::new(0.0, 0.0, 0.01), &p);
        // CCW rotors (0, 3) and CW rotors (1, 2) get opposite-signed deltas
        let quarter = c / 4.0;
        assert!(f[0] > quarter && f[3] > quarter);
        assert!(f[1] < quarter && f[2] < quarter);
        let (c_back, tau) = mixer.wrench(f, &p);
        assert_relative_eq!(c_back, c, epsilon = 1e-9);
        assert_relative_eq!(tau.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(tau.y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(tau.z, 0.01, epsilon = 1e-12);
    }

    #[test]
    fn mixer_round_trip_unsaturated() {
        let p = params();
        let mixer = Mixer::new(&p);
        let cases = [
            (10.0, Vector3::new(0.02, -0.03, 0.004)),
            (5.0, Vector3::new(-0.05, 0.01, -0.002)),
            (20.0, Vector3::new(0.0, 0.0, 0.0)),
        ];
        for (c, tau) in cases {
            let f = mixer.allocate(c, tau, &p);
            let (c2, tau2) = mixer.wrench(f, &p);
            assert_relative_eq!(c2, c, epsilon = 1e-9);
            assert_relative_eq!(tau2.x, tau.x, epsilon = 1e-9);
            assert_relative_eq!(tau2.y, tau.y, epsilon = 1e-9);
            assert_relative_eq!(tau2.z, tau.z, epsilon = 1e-9);
        }
    }

    #[test]
    fn saturation_preserves_thrust_and_sheds_yaw_first() {
        let p = params();
        let mixer = Mixer::new(&p);
        let c = p.mass * GRAVITY;
        // absurd yaw torque demand
        let f = mixer.allocate(c, Vector3::new(0.01, 0.0, 5.0), &p);
        let f_max = p.max_rotor_thrust();
        assert!(feasible(&f, f_max));
        let (c2, tau2) = mixer.wrench(f, &p);
        assert_relative_eq!(c2, c, epsilon = 1e-9);
        // roll torque kept, yaw reduced below demand
        assert_relative_eq!(tau2.x, 0.01, epsilon = 1e-9);
        assert!(tau2.z < 5.0);
    }

    #[test]
    fn commands_always_within_rotor_limits() {
        let p = params();
        let mut ctl = RateController::new(RateControllerGains::default(), &p);
        let mut state = QuadState::hover_at(Vector3::zeros(), &p);
        state.body_rates = Vector3::new(20.0, -15.0, 12.0);
        let cmd = CtbrCommand {
            collective_thrust: 100.0, // beyond achievable, must clamp
            body_rates: Vector3::new(-10.0, 10.0, -10.0),
        };
        let rotor = ctl.ctbr_to_rotor_cmd(&cmd, &state, &p, 1.0 / 400.0);
        for w in rotor {
            assert!((0.0..=p.max_rotor_speed).contains(&w));
        }
    }

    #[test]
    fn normalize_action_endpoints_and_scaling() {
        let p = params();
        let n = ActionNormalizer::new(&p, std::f64::consts::PI);
        let low = n.normalize([-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(low.collective_thrust, 0.0);
        assert_eq!(low.body_rates, Vector3::zeros());
        let high = n.normalize([1.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(high.collective_thrust, p.max_collective_thrust(), epsilon = 1e-12);
        let yaw = n.normalize([0.0, 0.0, 0.0, 0.5]);
        assert_relative_eq!(yaw.body_rates.z, 0.5 * std::f64::consts::PI, epsilon = 1e-12);
        // out-of-range input clamps
        let clamped = n.normalize([7.0, -3.0, 0.0, 0.0]);
        assert_relative_eq!(clamped.collective_thrust, p.max_collective_thrust(), epsilon = 1e-12);
        assert_relative_eq!(clamped.body_rates.x, -std::f64::consts::PI, epsilon = 1e-12);
        // round trip through the inverse
        let cmd = n.normalize([0.3, -0.2, 0.7, 0.1]);
        let raw = n.to_raw(&cmd);
        let again = n.normalize(raw);
        assert_relative_eq!(again.collective_thrust, cmd.collective_thrust, epsilon = 1e-12);
        assert_relative_eq!(again.body_rates.x, cmd.body_rates.x, epsilon = 1e-12);
    }

    #[test]
    fn rate_step_settles_fast_with_bounded_overshoot() {
        let p = params();
        let bp = BallParams {
            mass: 0.0472,
            radius: 0.02,
            drag_enabled: false,
            drag_coeff: 0.47,
            air_density: 1.204,
        };
        let mut ctl = RateController::new(RateControllerGains::default(), &p);
        let mut quad = QuadState::hover_at(Vector3::new(0.0, 0.0, 1.0), &p);
        let mut ball = BallState::at_rest(Vector3::new(5.0, 5.0, 50.0));
        let cmd = CtbrCommand {
            collective_thrust: p.mass * GRAVITY,
            body_rates: Vector3::new(1.0, 0.0, 0.0),
        };
        let dt = 1.0 / 400.0;
        let mut max_rate: f64 = 0.0;
        let mut settled_at = f64::INFINITY;
        for i in 0..(0.5 / dt) as usize {
            let rotor = ctl.ctbr_to_rotor_cmd(&cmd, &quad, &p, dt);
            let (q, b) = integrate_step(&quad, &ball, &p, &bp, rotor, dt).unwrap();
            quad = q;
            ball = b;
            let t = (i + 1) as f64 * dt;
            max_rate = max_rate.max(quad.body_rates.x);
            if (quad.body_rates.x - 1.0).abs() > 0.05 {
                settled_at = f64::INFINITY;
            } else if settled_at.is_infinite() {
                settled_at = t;
            }
        }
        assert!(max_rate < 1.2, "overshoot {max_rate}");
        assert!(settled_at < 0.2, "settled at {settled_at}");
    }
}
