//! Analytic physics suite: closed-form checks of the integrator, the hover
//! equilibrium through the full control stack, the restitution drop test, and
//! quaternion normalization, each with an explicit threshold.

use nalgebra::Vector3;

use crate::config::ScenarioConfig;
use crate::contact::{detect_contact, resolve_impact, ApexTracker, RestitutionModel, TaskWindows};
use crate::control::{CtbrCommand, RateController};
use crate::dynamics::{ball_rk4_step, integrate_step, BallState, QuadState};
use crate::GRAVITY;

#[derive(Debug, Clone)]
pub struct PhysicsCheck {
    pub name: &'static str,
    /// Measured error/metric.
    pub value: f64,
    /// Pass when `value < threshold`.
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct PhysicsCheckReport {
    pub checks: Vec<PhysicsCheck>,
}

impl PhysicsCheckReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn print(&self) {
        for c in &self.checks {
            println!(
                "{:5} {:40} {:>12.3e} < {:>8.0e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.threshold
            );
        }
    }
}

fn check(name: &'static str, value: f64, threshold: f64) -> PhysicsCheck {
    PhysicsCheck {
        name,
        value,
        threshold,
        pass: value < threshold,
    }
}

/// Run the full suite with the given scenario constants.
pub fn run_physics_check(config: &ScenarioConfig) -> PhysicsCheckReport {
    let quad_params = config.quad_params();
    let ball_params = config.ball_params();
    let geom = config.racket_geometry();
    let dt = config.physics_dt();
    let mut checks = Vec::new();

    // hover drift over 10 s through the rate controller and mixer
    {
        let start = Vector3::new(0.0, 0.0, 1.0);
        let mut quad = QuadState::hover_at(start, &quad_params);
        let mut ball = BallState::at_rest(Vector3::new(5.0, 5.0, 50.0));
        let mut ctl = RateController::new(config.rate_gains(), &quad_params);
        let cmd = CtbrCommand {
            collective_thrust: quad_params.mass * GRAVITY,
            body_rates: Vector3::zeros(),
        };
        let steps = (10.0 / dt).round() as usize;
        let mut max_drift: f64 = 0.0;
        for _ in 0..steps {
            let rotor = ctl.ctbr_to_rotor_cmd(&cmd, &quad, &quad_params, dt);
            let (q, b) =
                integrate_step(&quad, &ball, &quad_params, &ball_params, rotor, dt).unwrap();
            quad = q;
            ball = b;
            max_drift = max_drift.max((quad.position - start).norm());
        }
        checks.push(check("hover position drift over 10 s (m)", max_drift, 1e-3));
    }

    // ballistic parabola over 1 s
    {
        let mut ball = BallState::at_rest(Vector3::new(0.0, 0.0, 10.0));
        let mut drag_off = ball_params.clone();
        drag_off.drag_enabled = false;
        let steps = (1.0 / dt).round() as usize;
        let mut max_err: f64 = 0.0;
        for k in 1..=steps {
            ball = ball_rk4_step(&ball, &drag_off, dt);
            let t = k as f64 * dt;
            let expect = 10.0 - 0.5 * GRAVITY * t * t;
            max_err = max_err.max((ball.position.z - expect).abs());
        }
        checks.push(check("ballistic parabola error over 1 s (m)", max_err, 1e-6));
    }

    // drop-test rebound apex = e²·h for both restitution regimes
    for (name, e) in [
        ("sweet-spot bounce apex error (relative)", config.racket.restitution_sweet),
        ("outer-region bounce apex error (relative)", config.racket.restitution_outer),
    ] {
        let model = RestitutionModel {
            e_sweet: e,
            e_outer: e,
            e_override: None,
        };
        let quad = QuadState {
            position: Vector3::new(0.0, 0.0, 1.0),
            ..QuadState::hover_at(Vector3::new(0.0, 0.0, 1.0), &quad_params)
        };
        let plane_z = 1.0 + config.racket.offset_body[2];
        let h = 1.0;
        let mut drag_off = ball_params.clone();
        drag_off.drag_enabled = false;
        let mut ball = BallState::at_rest(Vector3::new(0.0, 0.0, plane_z + h));
        let windows = TaskWindows {
            z_hit_min: 0.0,
            z_hit_max: 10.0,
            z_apex_min: 0.0,
            z_apex_max: 10.0,
        };
        let mut tracker = ApexTracker::default();
        let mut bounced = false;
        let mut rel_err = f64::INFINITY;
        for _ in 0..4000 {
            let next = ball_rk4_step(&ball, &drag_off, dt);
            if !bounced {
                if let Some(c) = detect_contact(&quad, &ball, &next, &geom) {
                    let v_in = ball.velocity + (next.velocity - ball.velocity) * c.time_fraction;
                    let (mut out, _) = resolve_impact(&c, v_in, &model, &geom);
                    let rem = (1.0 - c.time_fraction) * dt;
                    out.position +=
                        out.velocity * rem + 0.5 * crate::dynamics::gravity_w() * rem * rem;
                    out.velocity += crate::dynamics::gravity_w() * rem;
                    ball = out;
                    bounced = true;
                    tracker.arm();
                    continue;
                }
            } else if let Some(ev) = tracker.observe(&ball, &next, &windows) {
                let apex = ev.z_apex - plane_z;
                rel_err = (apex - e * e * h).abs() / (e * e * h);
                break;
            }
            ball = next;
        }
        checks.push(check(name, rel_err, 1e-3));
    }

    // quaternion norm drift per step under aggressive tumbling
    {
        let mut quad = QuadState::hover_at(Vector3::zeros(), &quad_params);
        quad.body_rates = Vector3::new(7.0, -5.0, 4.0);
        let mut ball = BallState::at_rest(Vector3::new(5.0, 5.0, 50.0));
        let mut max_drift: f64 = 0.0;
        for _ in 0..4000 {
            let (q, b) =
                integrate_step(&quad, &ball, &quad_params, &ball_params, [400.0; 4], dt).unwrap();
            quad = q;
            ball = b;
            max_drift = max_drift.max((quad.attitude.norm() - 1.0).abs());
        }
        checks.push(check("quaternion norm drift per step", max_drift, 1e-9));
    }

    PhysicsCheckReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_passes_the_suite() {
        let report = run_physics_check(&ScenarioConfig::default());
        for c in &report.checks {
            assert!(c.pass, "{}: {} !< {}", c.name, c.value, c.threshold);
        }
    }
}
