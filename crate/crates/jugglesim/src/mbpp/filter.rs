//! Constant-acceleration (gravity) Kalman filter over ball position
//! measurements: 6-state (position, velocity), position-only updates.

use nalgebra::{Matrix3, Matrix6, SMatrix, Vector3, Vector6};

use crate::GRAVITY;

type Matrix6x3 = SMatrix<f64, 6, 3>;
type Matrix3x6 = SMatrix<f64, 3, 6>;

/// Ball state estimator.
#[derive(Debug, Clone)]
pub struct BallFilter {
    /// Estimate: position then velocity.
    pub state: Vector6<f64>,
    pub covariance: Matrix6<f64>,
    /// White-acceleration process noise std, m/s².
    pub process_noise: f64,
    /// Position measurement noise std, m.
    pub measurement_noise: f64,
    /// Covariance resets after a non-PSD update (diagnostic counter).
    pub resets: u32,
}

const INITIAL_POS_VAR: f64 = 1.0;
const INITIAL_VEL_VAR: f64 = 25.0;

impl BallFilter {
    pub fn new(process_noise: f64, measurement_noise: f64) -> Self {
        Self {
            state: Vector6::zeros(),
            covariance: Self::wide_prior(),
            process_noise,
            measurement_noise,
            resets: 0,
        }
    }

    fn wide_prior() -> Matrix6<f64> {
        let mut p = Matrix6::zeros();
        for i in 0..3 {
            p[(i, i)] = INITIAL_POS_VAR;
            p[(i + 3, i + 3)] = INITIAL_VEL_VAR;
        }
        p
    }

    /// Re-center on a position with a wide prior (start of a tracking cycle).
    pub fn initialize(&mut self, position: Vector3<f64>) {
        self.state = Vector6::zeros();
        self.state.fixed_rows_mut::<3>(0).copy_from(&position);
        self.covariance = Self::wide_prior();
    }

    pub fn position(&self) -> Vector3<f64> {
        self.state.fixed_rows::<3>(0).into()
    }

    pub fn velocity(&self) -> Vector3<f64> {
        self.state.fixed_rows::<3>(3).into()
    }

    /// Process model: ballistic propagation with gravity as a known input.
    pub fn predict(&mut self, dt: f64) {
        let mut f = Matrix6::identity();
        for i in 0..3 {
            f[(i, i + 3)] = dt;
        }
        let g = Vector3::new(0.0, 0.0, -GRAVITY);
        let mut state = f * self.state;
        for i in 0..3 {
            state[i] += 0.5 * g[i] * dt * dt;
            state[i + 3] += g[i] * dt;
        }
        self.state = state;

        // continuous white-acceleration noise, discretized
        let q = self.process_noise * self.process_noise;
        let q_pp = q * dt * dt * dt / 3.0;
        let q_pv = q * dt * dt / 2.0;
        let q_vv = q * dt;
        let mut process = Matrix6::zeros();
        for i in 0..3 {
            process[(i, i)] = q_pp;
            process[(i, i + 3)] = q_pv;
            process[(i + 3, i)] = q_pv;
            process[(i + 3, i + 3)] = q_vv;
        }
        self.covariance = f * self.covariance * f.transpose() + process;
        self.symmetrize();
    }

    /// Position measurement update (Joseph form). Skipping the measurement is
    /// a predict-only step. Returns the innovation norm.
    pub fn update(&mut self, measurement: Vector3<f64>) -> f64 {
        let mut h = Matrix3x6::zeros();
        for i in 0..3 {
            h[(i, i)] = 1.0;
        }
        let r = Matrix3::identity() * self.measurement_noise * self.measurement_noise;
        let innovation = measurement - self.position();
        let s = h * self.covariance * h.transpose() + r;
        let s_inv = match s.try_inverse() {
            Some(inv) => inv,
            None => {
                self.reset_covariance();
                return innovation.norm();
            }
        };
        let k: Matrix6x3 = self.covariance * h.transpose() * s_inv;
        self.state += k * innovation;
        let i_kh = Matrix6::identity() - k * h;
        self.covariance =
            i_kh * self.covariance * i_kh.transpose() + k * r * k.transpose();
        self.symmetrize();
        if !self.is_psd() {
            self.reset_covariance();
        }
        innovation.norm()
    }

    /// One filter tick: predict over `dt`, then (optionally) update.
    pub fn step(&mut self, measurement: Option<Vector3<f64>>, dt: f64) {
        self.predict(dt);
        if let Some(z) = measurement {
            self.update(z);
        }
    }

    fn symmetrize(&mut self) {
        let t = self.covariance.transpose();
        self.covariance = (self.covariance + t) * 0.5;
    }

    fn is_psd(&self) -> bool {
        // diagonal must be non-negative and every entry finite
        (0..6).all(|i| self.covariance[(i, i)] >= -1e-12)
            && self.covariance.iter().all(|v| v.is_finite())
    }

    fn reset_covariance(&mut self) {
        self.covariance = Self::wide_prior() * 10.0;
        self.resets += 1;
    }

    pub fn covariance_trace(&self) -> f64 {
        self.covariance.trace()
    }
}
