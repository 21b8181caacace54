//! Gaussian MLP policy with tanh squashing, a privileged-input critic, and
//! running observation normalization.

use ndarray::{Array1, Array2, Axis};
use rand_chacha::ChaCha8Rng;

use super::mlp::Mlp;

/// Clamp band for the state-independent log standard deviation.
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 1.0;
/// Normalized observations are clipped to this many standard deviations.
pub const OBS_CLIP: f64 = 10.0;

/// Running mean/variance (Welford) over actor observations. Frozen at
/// evaluation and inside checkpoints.
#[derive(Debug, Clone)]
pub struct RunningNorm {
    pub mean: Array1<f64>,
    /// Sum of squared deviations (M2 aggregate).
    pub m2: Array1<f64>,
    pub count: f64,
}

impl RunningNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            mean: Array1::zeros(dim),
            m2: Array1::zeros(dim),
            count: 0.0,
        }
    }

    pub fn variance(&self) -> Array1<f64> {
        if self.count < 2.0 {
            Array1::ones(self.mean.len())
        } else {
            self.m2.mapv(|v| (v / self.count).max(1e-8))
        }
    }

    /// Batch Welford update (Chan's parallel merge of the batch aggregate).
    pub fn update(&mut self, batch: &Array2<f64>) {
        let n_b = batch.nrows() as f64;
        if n_b == 0.0 {
            return;
        }
        let mean_b = batch.mean_axis(Axis(0)).unwrap();
        let mut m2_b = Array1::zeros(batch.ncols());
        for row in batch.rows() {
            let d = &row.to_owned() - &mean_b;
            m2_b = m2_b + &d * &d;
        }
        if self.count == 0.0 {
            self.mean = mean_b;
            self.m2 = m2_b;
            self.count = n_b;
            return;
        }
        let n_a = self.count;
        let delta = &mean_b - &self.mean;
        let total = n_a + n_b;
        self.mean = &self.mean + &(&delta * (n_b / total));
        self.m2 = &self.m2 + &m2_b + &(&delta * &delta * (n_a * n_b / total));
        self.count = total;
    }

    /// Normalize rows in place: (x - mean)/std, clipped to ±OBS_CLIP.
    pub fn normalize(&self, batch: &mut Array2<f64>) {
        let std = self.variance().mapv(f64::sqrt);
        for mut row in batch.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = ((*v - self.mean[j]) / std[j]).clamp(-OBS_CLIP, OBS_CLIP);
            }
        }
    }
}

/// Actor-critic parameter set.
#[derive(Debug, Clone)]
pub struct PolicyParams {
    pub actor: Mlp,
    /// State-independent log standard deviation per action dimension.
    pub log_std: Array1<f64>,
    pub critic: Mlp,
    pub obs_norm: RunningNorm,
    pub obs_dim: usize,
    pub act_dim: usize,
}

impl PolicyParams {
    /// Actor maps `obs_dim → hidden → act_dim`; the critic sees one extra
    /// privileged input.
    pub fn new(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        log_std_init: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend_from_slice(hidden);
        actor_sizes.push(act_dim);
        let mut critic_sizes = vec![obs_dim + 1];
        critic_sizes.extend_from_slice(hidden);
        critic_sizes.push(1);
        Self {
            actor: Mlp::new(&actor_sizes, 0.01, rng),
            log_std: Array1::from_elem(act_dim, log_std_init),
            critic: Mlp::new(&critic_sizes, 1.0, rng),
            obs_norm: RunningNorm::new(obs_dim),
            obs_dim,
            act_dim,
        }
    }

    pub fn n_trainable_params(&self) -> usize {
        self.actor.n_params() + self.act_dim + self.critic.n_params()
    }

    /// All trainable parameters: actor, log_std, critic (normalizer excluded).
    pub fn param_vector(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_trainable_params());
        self.actor.write_params(&mut out);
        out.extend(self.log_std.iter());
        self.critic.write_params(&mut out);
        out
    }

    pub fn set_param_vector(&mut self, data: &[f64]) {
        assert_eq!(data.len(), self.n_trainable_params());
        let mut k = self.actor.read_params(data);
        for v in self.log_std.iter_mut() {
            *v = data[k];
            k += 1;
        }
        self.critic.read_params(&data[k..]);
    }

    pub fn clamp_log_std(&mut self) {
        self.log_std.mapv_inplace(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX));
    }

    /// Sample actions: `z = μ + σ·noise`, `a = tanh(z)`, with the squash-
    /// corrected log density and the critic value. `noise` is standard normal,
    /// `batch × act_dim`, supplied by the caller (per-environment streams).
    pub fn act(
        &self,
        actor_obs: &Array2<f64>,
        critic_obs: &Array2<f64>,
        noise: &Array2<f64>,
    ) -> ActOutput {
        let mean = self.actor.infer(actor_obs);
        let std = self.log_std.mapv(f64::exp);
        let mut z = noise.clone();
        for mut row in z.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = *v * std[j];
            }
        }
        z += &mean;
        let actions = z.mapv(f64::tanh);
        let log_prob = self.log_prob_of_z(&mean, &z);
        let value = self.critic.infer(critic_obs).column(0).to_owned();
        ActOutput {
            z,
            actions,
            log_prob,
            value,
        }
    }

    /// Deterministic evaluation action: tanh of the mean.
    pub fn act_deterministic(&self, actor_obs: &Array2<f64>) -> Array2<f64> {
        self.actor.infer(actor_obs).mapv(f64::tanh)
    }

    pub fn value(&self, critic_obs: &Array2<f64>) -> Array1<f64> {
        self.critic.infer(critic_obs).column(0).to_owned()
    }

    /// Log density of the squashed sample given pre-tanh coordinates `z`:
    /// Gaussian term plus the tanh Jacobian correction
    /// `-Σ log(1 - tanh(z)²)`, computed stably as `-Σ 2(ln2 - z - softplus(-2z))`.
    pub fn log_prob_of_z(&self, mean: &Array2<f64>, z: &Array2<f64>) -> Array1<f64> {
        let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        let std = self.log_std.mapv(f64::exp);
        let mut out = Array1::zeros(z.nrows());
        for i in 0..z.nrows() {
            let mut lp = 0.0;
            for j in 0..z.ncols() {
                let u = (z[(i, j)] - mean[(i, j)]) / std[j];
                lp += -0.5 * u * u - self.log_std[j] - half_log_2pi;
                lp -= 2.0 * (std::f64::consts::LN_2 - z[(i, j)] - softplus(-2.0 * z[(i, j)]));
            }
            out[i] = lp;
        }
        out
    }
}

/// Numerically stable log(1 + eˣ).
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Output of a batched sampling step.
pub struct ActOutput {
    /// Pre-tanh coordinates (stored in the rollout buffer).
    pub z: Array2<f64>,
    /// Squashed actions in [-1, 1].
    pub actions: Array2<f64>,
    pub log_prob: Array1<f64>,
    pub value: Array1<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_distr::StandardNormal;

    #[test]
    fn zero_weight_network_centers_actions_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = PolicyParams::new(4, 2, &[8], -0.5, &mut rng);
        let zeros = vec![0.0; p.n_trainable_params()];
        p.set_param_vector(&zeros);
        let obs = Array2::zeros((3, 4));
        let det = p.act_deterministic(&obs);
        assert!(det.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn deterministic_action_is_tanh_of_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = PolicyParams::new(3, 2, &[16, 16], -0.5, &mut rng);
        let obs = arr2(&[[0.4, -1.0, 2.0]]);
        let mean = p.actor.infer(&obs);
        let det = p.act_deterministic(&obs);
        for j in 0..2 {
            assert!((det[(0, j)] - mean[(0, j)].tanh()).abs() < 1e-15);
            assert!(det[(0, j)].abs() <= 1.0);
        }
    }

    #[test]
    fn log_prob_matches_monte_carlo_density() {
        // histogram check of the squashed density in one dimension
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = PolicyParams::new(2, 1, &[4], -0.3, &mut rng);
        let obs = arr2(&[[0.2, -0.1]]);
        let mean = p.actor.infer(&obs);
        let std = (-0.3f64).exp();

        // empirical density of a = tanh(mean + std·n) in a small bin
        let bin_center = 0.3f64;
        let bin_w = 0.02;
        let n_samples = 1_000_000;
        let mut count = 0;
        for _ in 0..n_samples {
            let z = mean[(0, 0)] + std * rng.sample::<f64, _>(StandardNormal);
            let a = z.tanh();
            if (a - bin_center).abs() < bin_w / 2.0 {
                count += 1;
            }
        }
        let empirical = count as f64 / (n_samples as f64 * bin_w);

        let z_at = bin_center.atanh();
        let z_mat = arr2(&[[z_at]]);
        let analytic = p.log_prob_of_z(&mean, &z_mat)[0].exp();
        let rel = (empirical - analytic).abs() / analytic;
        assert!(rel < 0.02, "empirical {empirical} vs analytic {analytic}");
    }

    #[test]
    fn entropy_estimate_decreases_with_log_std() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut p = PolicyParams::new(2, 4, &[8], 0.0, &mut rng);
        let obs = Array2::zeros((1, 2));
        let mut entropy_for = |log_std: f64, p: &mut PolicyParams| -> f64 {
            p.log_std.fill(log_std);
            let mut total = 0.0;
            let n = 4000;
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            for _ in 0..n {
                let noise =
                    Array2::from_shape_fn((1, 4), |_| rng.sample::<f64, _>(StandardNormal));
                let out = p.act(&obs, &Array2::zeros((1, 3)), &noise);
                total += -out.log_prob[0];
            }
            total / n as f64
        };
        let wide = entropy_for(0.0, &mut p);
        let narrow = entropy_for(-1.0, &mut p);
        assert!(narrow < wide, "narrow {narrow} vs wide {wide}");
    }

    #[test]
    fn running_norm_matches_batch_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = Array2::from_shape_fn((500, 3), |(_, j)| {
            3.0 * j as f64 + rng.sample::<f64, _>(StandardNormal) * (j as f64 + 1.0)
        });
        let mut norm = RunningNorm::new(3);
        // feed in uneven chunks
        norm.update(&data.slice(ndarray::s![..100, ..]).to_owned());
        norm.update(&data.slice(ndarray::s![100..350, ..]).to_owned());
        norm.update(&data.slice(ndarray::s![350.., ..]).to_owned());
        let mean = data.mean_axis(Axis(0)).unwrap();
        for j in 0..3 {
            assert!((norm.mean[j] - mean[j]).abs() < 1e-9);
        }
        let var = norm.variance();
        for j in 0..3 {
            let direct: f64 =
                data.column(j).iter().map(|v| (v - mean[j]) * (v - mean[j])).sum::<f64>()
                    / 500.0;
            assert!((var[j] - direct).abs() < 1e-9);
        }
    }
}
