//! Forward ball prediction: RK4 rollout of the flight model (drag setting
//! mirrors the environment) plus a bisection solver for the descending
//! crossing of a query height.

use nalgebra::Vector3;

use crate::dynamics::{ball_rk4_step, BallParams, BallState};

/// Prediction rollout step, s.
pub const PREDICT_DT: f64 = 1.0 / 400.0;

/// Sampled future trajectory.
#[derive(Debug, Clone)]
pub struct BallPrediction {
    pub dt: f64,
    pub samples: Vec<BallState>,
}

impl BallPrediction {
    pub fn state_at(&self, t: f64) -> BallState {
        let idx = (t / self.dt).floor() as usize;
        if idx + 1 >= self.samples.len() {
            return *self.samples.last().unwrap();
        }
        let frac = (t - idx as f64 * self.dt) / self.dt;
        let a = &self.samples[idx];
        let b = &self.samples[idx + 1];
        BallState {
            position: a.position + (b.position - a.position) * frac,
            velocity: a.velocity + (b.velocity - a.velocity) * frac,
        }
    }
}

/// Roll the ball model forward for `horizon` seconds.
pub fn predict_ball(initial: &BallState, params: &BallParams, horizon: f64) -> BallPrediction {
    let n = (horizon / PREDICT_DT).ceil() as usize;
    let mut samples = Vec::with_capacity(n + 1);
    let mut s = *initial;
    samples.push(s);
    for _ in 0..n {
        s = ball_rk4_step(&s, params, PREDICT_DT);
        samples.push(s);
    }
    BallPrediction {
        dt: PREDICT_DT,
        samples,
    }
}

/// First time at which the predicted ball crosses `height` while descending
/// (`v_z < 0`), refined by bisection on the interpolated trajectory.
/// `None` when the height is never reached within the horizon.
pub fn time_to_height(prediction: &BallPrediction, height: f64) -> Option<f64> {
    let samples = &prediction.samples;
    for k in 0..samples.len() - 1 {
        let a = &samples[k];
        let b = &samples[k + 1];
        if a.position.z >= height && b.position.z < height && b.velocity.z < 0.0 {
            // bisection on the cubic-ish interpolated segment
            let mut lo = k as f64 * prediction.dt;
            let mut hi = (k + 1) as f64 * prediction.dt;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if prediction.state_at(mid).position.z >= height {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
    }
    None
}

/// Apex of the predicted trajectory: the state of maximum altitude.
pub fn predicted_apex(prediction: &BallPrediction) -> (f64, Vector3<f64>) {
    let mut best = &prediction.samples[0];
    for s in &prediction.samples {
        if s.position.z > best.position.z {
            best = s;
        }
    }
    (best.position.z, best.position)
}
