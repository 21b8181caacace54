//! Racket-ball collision detection and restitution-based impact resolution.
//!
//! The racket is a rigid disc fixed to the quadrotor body. Contact fires when
//! the ball center crosses the racket plane from the normal side within the
//! disc radius while approaching; the impact reverses and scales the normal
//! relative velocity by a coefficient of restitution that depends on where the
//! contact lands on the face (sweet spot vs outer region), treating the racket
//! as infinite-mass. Hit and apex events are classified against configured
//! altitude windows.

use nalgebra::Vector3;

use crate::dynamics::{BallState, QuadState};

/// Racket disc rigidly attached to the quadrotor body.
#[derive(Debug, Clone)]
pub struct RacketGeometry {
    /// Full face radius, m.
    pub disc_radius: f64,
    /// Radius of the high-restitution central region, m.
    pub sweet_radius: f64,
    /// Disc center in the body frame, m.
    pub offset_body: Vector3<f64>,
    /// Face normal in the body frame (unit).
    pub normal_body: Vector3<f64>,
}

impl RacketGeometry {
    /// Disc center and outward face normal in the world frame.
    pub fn world_pose(&self, quad: &QuadState) -> (Vector3<f64>, Vector3<f64>) {
        let center = quad.position + quad.attitude * self.offset_body;
        let normal = quad.attitude * self.normal_body;
        (center, normal)
    }
}

/// Piecewise-constant coefficient of restitution over the racket face.
#[derive(Debug, Clone, Copy)]
pub struct RestitutionModel {
    /// Restitution inside the sweet radius.
    pub e_sweet: f64,
    /// Restitution outside the sweet radius.
    pub e_outer: f64,
    /// Episode-level override sampled by domain randomization; when set it is
    /// used for the whole face.
    pub e_override: Option<f64>,
}

impl RestitutionModel {
    /// Restitution at a given distance from the racket centerline.
    pub fn coefficient(&self, d_axis: f64, sweet_radius: f64) -> f64 {
        if let Some(e) = self.e_override {
            return e;
        }
        if d_axis <= sweet_radius {
            self.e_sweet
        } else {
            self.e_outer
        }
    }
}

/// Altitude windows a hit and the subsequent apex must satisfy.
#[derive(Debug, Clone, Copy)]
pub struct TaskWindows {
    pub z_hit_min: f64,
    pub z_hit_max: f64,
    pub z_apex_min: f64,
    pub z_apex_max: f64,
}

impl TaskWindows {
    /// Closed-interval check on the contact height.
    pub fn hit_valid(&self, z_hit: f64) -> bool {
        self.z_hit_min <= z_hit && z_hit <= self.z_hit_max
    }

    /// Closed-interval check on the flight apex height.
    pub fn apex_valid(&self, z_apex: f64) -> bool {
        self.z_apex_min <= z_apex && z_apex <= self.z_apex_max
    }
}

/// Geometric contact candidate found between two consecutive substeps.
#[derive(Debug, Clone, Copy)]
pub struct Contact {
    /// Fraction of the substep at which the crossing happens, in [0, 1].
    pub time_fraction: f64,
    /// Ball center at crossing, world frame, m.
    pub point_world: Vector3<f64>,
    /// Distance of the contact point from the racket centerline, m.
    pub d_axis: f64,
    /// Outward racket normal at contact, world frame (unit).
    pub normal_world: Vector3<f64>,
    /// Racket surface velocity at the contact point, world frame, m/s.
    pub racket_velocity: Vector3<f64>,
}

/// A resolved racket strike.
#[derive(Debug, Clone, Copy)]
pub struct HitEvent {
    /// Episode time of contact, s.
    pub time: f64,
    /// Contact point, world frame, m.
    pub contact_point: Vector3<f64>,
    /// Distance from the racket centerline, m.
    pub d_axis: f64,
    /// Ball velocity just before impact, m/s.
    pub pre_velocity: Vector3<f64>,
    /// Ball velocity just after impact, m/s.
    pub post_velocity: Vector3<f64>,
    /// Racket surface velocity at contact, m/s.
    pub racket_velocity: Vector3<f64>,
    /// Restitution coefficient actually applied.
    pub restitution: f64,
    /// Whether the contact height satisfies the hit window.
    pub hit_valid: bool,
    /// Whether the following apex satisfied the apex window; `None` until the
    /// apex is observed (or never, if the arc ends first).
    pub apex_valid: Option<bool>,
}

/// Apex of a post-hit flight arc.
#[derive(Debug, Clone, Copy)]
pub struct ApexEvent {
    /// Apex height, m.
    pub z_apex: f64,
    /// Whether the apex lies inside the apex window.
    pub apex_valid: bool,
}

/// Relative normal speeds below this are treated as grazing, not contact.
pub const GRAZE_SPEED: f64 = 1e-6;

/// Continuous collision check between consecutive ball states.
///
/// Returns a contact iff the ball center crosses the racket plane from the
/// normal side within the disc radius during the substep, with negative
/// relative normal velocity. The crossing time comes from linear interpolation
/// of the signed plane distance; the racket pose and surface velocity are
/// evaluated from `quad` (end-of-substep state).
pub fn detect_contact(
    quad: &QuadState,
    ball_prev: &BallState,
    ball_next: &BallState,
    geom: &RacketGeometry,
) -> Option<Contact> {
    let (center, normal) = geom.world_pose(quad);

    let s_prev = (ball_prev.position - center).dot(&normal);
    let s_next = (ball_next.position - center).dot(&normal);

    // Crossing from the normal side: started on/above the face, ended below.
    if !(s_prev > 0.0 && s_next <= 0.0) {
        return None;
    }

    let denom = s_prev - s_next;
    if denom <= 0.0 {
        return None;
    }
    let frac = (s_prev / denom).clamp(0.0, 1.0);
    let point = ball_prev.position + (ball_next.position - ball_prev.position) * frac;

    let planar = point - center;
    let planar_in_plane = planar - planar.dot(&normal) * normal;
    let d_axis = planar_in_plane.norm();
    if d_axis > geom.disc_radius {
        return None;
    }

    // Racket surface point velocity: rigid-body v + ω × r.
    let omega_world = quad.attitude * quad.body_rates;
    let racket_velocity = quad.velocity + omega_world.cross(&(point - quad.position));

    let ball_velocity = ball_prev.velocity + (ball_next.velocity - ball_prev.velocity) * frac;
    let rel_normal_speed = (ball_velocity - racket_velocity).dot(&normal);
    if rel_normal_speed >= -GRAZE_SPEED {
        return None;
    }

    Some(Contact {
        time_fraction: frac,
        point_world: point,
        d_axis,
        normal_world: normal,
        racket_velocity,
    })
}

/// Restitution impact law with an infinite-mass racket.
///
/// The normal relative velocity is reversed and scaled by `e`; the tangential
/// relative velocity is preserved exactly. Returns the post-impact ball state
/// (positioned at the contact point) and the coefficient applied.
pub fn resolve_impact(
    contact: &Contact,
    ball_velocity_in: Vector3<f64>,
    model: &RestitutionModel,
    geom: &RacketGeometry,
) -> (BallState, f64) {
    let e = model.coefficient(contact.d_axis, geom.sweet_radius);
    let n = contact.normal_world;
    let rel = ball_velocity_in - contact.racket_velocity;
    let rel_n = rel.dot(&n);
    let v_out = ball_velocity_in - (1.0 + e) * rel_n * n;
    (
        BallState {
            position: contact.point_world,
            velocity: v_out,
        },
        e,
    )
}

/// Hit classification per the contact-height window.
pub fn classify_hit(contact_z: f64, windows: &TaskWindows) -> bool {
    windows.hit_valid(contact_z)
}

/// Tracks the apex of the flight arc that follows a hit.
///
/// Armed by a contact; emits at most one apex event per arc, at the first
/// sign change of vertical velocity from positive to negative, with the apex
/// height refined by linear interpolation of v_z across the substep.
#[derive(Debug, Clone, Copy, Default)]
pub struct ApexTracker {
    armed: bool,
}

impl ApexTracker {
    pub fn arm(&mut self) {
        self.armed = true;
    }

    pub fn disarm(&mut self) {
        self.armed = false;
    }

    pub fn is_armed(&self) -> bool {
        self.armed
    }

    /// Observe one substep transition; returns the apex event when detected.
    pub fn observe(
        &mut self,
        ball_prev: &BallState,
        ball_next: &BallState,
        windows: &TaskWindows,
    ) -> Option<ApexEvent> {
        if !self.armed {
            return None;
        }
        let vz_prev = ball_prev.velocity.z;
        let vz_next = ball_next.velocity.z;
        if !(vz_prev > 0.0 && vz_next <= 0.0) {
            return None;
        }
        let denom = vz_prev - vz_next;
        let frac = if denom > 0.0 {
            (vz_prev / denom).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let z_apex = ball_prev.position.z + (ball_next.position.z - ball_prev.position.z) * frac;
        self.armed = false;
        Some(ApexEvent {
            z_apex,
            apex_valid: windows.apex_valid(z_apex),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ball_rk4_step, BallParams, QuadState};
    use approx::assert_relative_eq;
    use nalgebra::UnitQuaternion;

    fn geom() -> RacketGeometry {
        RacketGeometry {
            disc_radius: 0.10,
            sweet_radius: 0.055,
            offset_body: Vector3::new(0.0, 0.0, 0.05),
            normal_body: Vector3::new(0.0, 0.0, 1.0),
        }
    }

    fn model() -> RestitutionModel {
        RestitutionModel {
            e_sweet: 0.82,
            e_outer: 0.64,
            e_override: None,
        }
    }

    fn windows() -> TaskWindows {
        TaskWindows {
            z_hit_min: 0.8,
            z_hit_max: 1.4,
            z_apex_min: 2.85,
            z_apex_max: 3.2,
        }
    }

    fn static_quad_at(z: f64) -> QuadState {
        QuadState {
            position: Vector3::new(0.0, 0.0, z),
            attitude: UnitQuaternion::identity(),
            velocity: Vector3::zeros(),
            body_rates: Vector3::zeros(),
            rotor_speeds: [0.0; 4],
        }
    }

    #[test]
    fn descending_ball_through_disc_center_contacts_at_crossing() {
        let quad = static_quad_at(1.0); // racket plane at 1.05
        let prev = BallState {
            position: Vector3::new(0.0, 0.0, 1.06),
            velocity: Vector3::new(0.0, 0.0, -4.0),
        };
        let next = BallState {
            position: Vector3::new(0.0, 0.0, 1.04),
            velocity: Vector3::new(0.0, 0.0, -4.0),
        };
        let c = detect_contact(&quad, &prev, &next, &geom()).expect("contact");
        assert_relative_eq!(c.time_fraction, 0.5, epsilon = 1e-12);
        assert_relative_eq!(c.point_world.z, 1.05, epsilon = 1e-12);
        assert_relative_eq!(c.d_axis, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn crossing_outside_disc_radius_is_not_contact() {
        let quad = static_quad_at(1.0);
        // planar distance 0.07 m with the paper's 5.5 cm sim racket
        let mut g = geom();
        g.disc_radius = 0.055;
        let prev = BallState {
            position: Vector3::new(0.07, 0.0, 1.06),
            velocity: Vector3::new(0.0, 0.0, -4.0),
        };
        let next = BallState {
            position: Vector3::new(0.07, 0.0, 1.04),
            velocity: Vector3::new(0.0, 0.0, -4.0),
        };
        assert!(detect_contact(&quad, &prev, &next, &g).is_none());
    }

    #[test]
    fn separating_ball_is_not_contact() {
        let mut quad = static_quad_at(1.0);
        // racket moving down faster than the ball: separating despite crossing
        quad.velocity = Vector3::new(0.0, 0.0, -6.0);
        let prev = BallState {
            position: Vector3::new(0.0, 0.0, 1.06),
            velocity: Vector3::new(0.0, 0.0, -4.0),
        };
        let next = BallState {
            position: Vector3::new(0.0, 0.0, 1.04),
            velocity: Vector3::new(0.0, 0.0, -4.0),
        };
        assert!(detect_contact(&quad, &prev, &next, &geom()).is_none());
    }

    #[test]
    fn impact_reverses_normal_velocity_static_racket() {
        let quad = static_quad_at(1.0);
        let prev = BallState {
            position: Vector3::new(0.0, 0.0, 1.051),
            velocity: Vector3::new(0.0, 0.0, -3.0),
        };
        let next = BallState {
            position: Vector3::new(0.0, 0.0, 1.049),
            velocity: Vector3::new(0.0, 0.0, -3.0),
        };
        let c = detect_contact(&quad, &prev, &next, &geom()).unwrap();
        let (out, e) = resolve_impact(&c, prev.velocity, &model(), &geom());
        assert_relative_eq!(e, 0.82, epsilon = 1e-15);
        assert_relative_eq!(out.velocity.z, 2.46, epsilon = 1e-12);
    }

    #[test]
    fn impact_with_moving_racket_hand_value() {
        // racket up at 0.62 m/s, ball in at -6.26: v_out = 0.62 + 0.82·(0.62+6.26)
        let mut quad = static_quad_at(1.0);
        quad.velocity = Vector3::new(0.0, 0.0, 0.62);
        let prev = BallState {
            position: Vector3::new(0.0, 0.0, 1.051),
            velocity: Vector3::new(0.0, 0.0, -6.26),
        };
        let next = BallState {
            position: Vector3::new(0.0, 0.0, 1.033),
            velocity: Vector3::new(0.0, 0.0, -6.26),
        };
        let c = detect_contact(&quad, &prev, &next, &geom()).unwrap();
        let (out, _) = resolve_impact(&c, prev.velocity, &model(), &geom());
        let expect = 0.62 + 0.82 * (0.62 + 6.26);
        assert_relative_eq!(out.velocity.z, expect, epsilon = 1e-12);
    }

    #[test]
    fn outer_region_restitution_applied_beyond_sweet_radius() {
        let quad = static_quad_at(1.0);
        let prev = BallState {
            position: Vector3::new(0.07, 0.0, 1.051),
            velocity: Vector3::new(0.0, 0.0, -3.0),
        };
        let next = BallState {
            position: Vector3::new(0.07, 0.0, 1.049),
            velocity: Vector3::new(0.0, 0.0, -3.0),
        };
        let c = detect_contact(&quad, &prev, &next, &geom()).unwrap();
        assert!(c.d_axis > 0.055);
        let (_, e) = resolve_impact(&c, prev.velocity, &model(), &geom());
        assert_relative_eq!(e, 0.64, epsilon = 1e-15);
    }

    #[test]
    fn override_replaces_both_regions() {
        let m = RestitutionModel {
            e_override: Some(0.77),
            ..model()
        };
        assert_relative_eq!(m.coefficient(0.0, 0.055), 0.77);
        assert_relative_eq!(m.coefficient(0.09, 0.055), 0.77);
    }

    #[test]
    fn tangential_velocity_bitwise_preserved() {
        let quad = static_quad_at(1.0);
        let vin = Vector3::new(1.25, -0.75, -3.5);
        let prev = BallState {
            position: Vector3::new(0.0, 0.0, 1.051),
            velocity: vin,
        };
        let next = BallState {
            position: Vector3::new(prev.position.x + vin.x * 0.002, prev.position.y + vin.y * 0.002, 1.044),
            velocity: vin,
        };
        let c = detect_contact(&quad, &prev, &next, &geom()).unwrap();
        let (out, e) = resolve_impact(&c, vin, &model(), &geom());
        // level racket: tangential = xy
        assert_eq!(out.velocity.x, vin.x);
        assert_eq!(out.velocity.y, vin.y);
        // and normal relative speed scaled exactly by e
        let n = c.normal_world;
        let pre = (vin - c.racket_velocity).dot(&n).abs();
        let post = (out.velocity - c.racket_velocity).dot(&n).abs();
        assert_relative_eq!(post, e * pre, epsilon = 1e-15);
    }

    #[test]
    fn hit_window_is_closed_interval() {
        let w = windows();
        assert!(classify_hit(1.0, &w));
        assert!(!classify_hit(1.5, &w));
        assert!(classify_hit(1.4, &w)); // boundary inclusive
        assert!(classify_hit(0.8, &w));
    }

    #[test]
    fn apex_analytic_height_and_window() {
        let w = windows();
        let bp = BallParams {
            mass: 0.0472,
            radius: 0.02,
            drag_enabled: false,
            drag_coeff: 0.47,
            air_density: 1.204,
        };
        let mut tracker = ApexTracker::default();
        tracker.arm();
        let mut ball = BallState {
            position: Vector3::new(0.0, 0.0, 1.0),
            velocity: Vector3::new(0.0, 0.0, 6.26),
        };
        let dt = 1.0 / 400.0;
        let mut apex = None;
        for _ in 0..1000 {
            let next = ball_rk4_step(&ball, &bp, dt);
            if let Some(ev) = tracker.observe(&ball, &next, &w) {
                apex = Some(ev);
                break;
            }
            ball = next;
        }
        let ev = apex.expect("apex");
        let expect = 1.0 + 6.26 * 6.26 / (2.0 * crate::GRAVITY);
        assert!((ev.z_apex - expect).abs() < 1e-4);
        assert!(ev.apex_valid); // 2.997 within [2.85, 3.2]
    }

    #[test]
    fn descending_ball_never_emits_apex() {
        let w = windows();
        let bp = BallParams {
            mass: 0.0472,
            radius: 0.02,
            drag_enabled: false,
            drag_coeff: 0.47,
            air_density: 1.204,
        };
        let mut tracker = ApexTracker::default();
        tracker.arm();
        let mut ball = BallState {
            position: Vector3::new(0.0, 0.0, 3.0),
            velocity: Vector3::new(0.0, 0.0, -0.5),
        };
        let dt = 1.0 / 400.0;
        for _ in 0..200 {
            let next = ball_rk4_step(&ball, &bp, dt);
            assert!(tracker.observe(&ball, &next, &w).is_none());
            ball = next;
        }
        assert!(tracker.is_armed());
    }

    #[test]
    fn drop_test_rebound_apex_matches_e_squared() {
        // Ball dropped from h above a static racket rebounds to e²·h.
        let bp = BallParams {
            mass: 0.0472,
            radius: 0.02,
            drag_enabled: false,
            drag_coeff: 0.47,
            air_density: 1.204,
        };
        let g = geom();
        let quad = static_quad_at(1.0);
        let plane_z = 1.05;
        for &e in &[0.82f64, 0.64] {
            let m = RestitutionModel {
                e_sweet: e,
                e_outer: e,
                e_override: None,
            };
            let h = 1.0;
            let mut ball = BallState::at_rest(Vector3::new(0.0, 0.0, plane_z + h));
            let dt = 1.0 / 400.0;
            let mut apex_after_bounce = f64::NAN;
            let mut bounced = false;
            let w = windows();
            let mut tracker = ApexTracker::default();
            for _ in 0..4000 {
                let next = ball_rk4_step(&ball, &bp, dt);
                if !bounced {
                    if let Some(c) = detect_contact(&quad, &ball, &next, &g) {
                        let v_in = ball.velocity + (next.velocity - ball.velocity) * c.time_fraction;
                        let (mut out, _) = resolve_impact(&c, v_in, &m, &g);
                        // complete the substep ballistically after the impact
                        let rem = (1.0 - c.time_fraction) * dt;
                        out.position += out.velocity * rem
                            + 0.5 * crate::dynamics::gravity_w() * rem * rem;
                        out.velocity += crate::dynamics::gravity_w() * rem;
                        ball = out;
                        bounced = true;
                        tracker.arm();
                        continue;
                    }
                } else if let Some(ev) = tracker.observe(&ball, &next, &w) {
                    apex_after_bounce = ev.z_apex - plane_z;
                    break;
                }
                ball = next;
            }
            let expect = e * e * h;
            assert!(
                (apex_after_bounce - expect).abs() < 1e-3 * h,
                "e={e}: apex {apex_after_bounce} vs {expect}"
            );
        }
    }

}
