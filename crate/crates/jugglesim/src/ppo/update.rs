//! Clipped-surrogate PPO update: loss, hand-derived gradients, Adam, and
//! minibatch scheduling. `ppo_loss` is the pure scalar path used both by the
//! update (through `ppo_grad`) and by finite-difference gradient checks.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::policy::{softplus, PolicyParams};
use crate::config::PpoConfig;

/// Flattened experience for one update: rows are env-steps.
#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    /// Normalized actor observations, M × obs_dim.
    pub actor_obs: Array2<f64>,
    /// Normalized critic observations, M × (obs_dim + 1).
    pub critic_obs: Array2<f64>,
    /// Pre-tanh action coordinates, M × act_dim.
    pub z: Array2<f64>,
    pub logp_old: Array1<f64>,
    pub advantages: Array1<f64>,
    pub returns: Array1<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.actor_obs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Gather the given rows into a new buffer.
    pub fn select(&self, idx: &[usize]) -> RolloutBuffer {
        RolloutBuffer {
            actor_obs: self.actor_obs.select(Axis(0), idx),
            critic_obs: self.critic_obs.select(Axis(0), idx),
            z: self.z.select(Axis(0), idx),
            logp_old: self.logp_old.select(Axis(0), idx),
            advantages: self.advantages.select(Axis(0), idx),
            returns: self.returns.select(Axis(0), idx),
        }
    }

    /// Normalize advantages to zero mean, unit std (ε = 1e-8).
    pub fn normalize_advantages(&mut self) {
        let n = self.advantages.len() as f64;
        let mean = self.advantages.sum() / n;
        let var = self.advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
        let std = var.sqrt() + 1e-8;
        self.advantages.mapv_inplace(|a| (a - mean) / std);
    }

    pub fn dump_csv(&self, path: &std::path::Path) -> std::io::Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "row,logp_old,advantage,return,z0")?;
        for i in 0..self.len() {
            writeln!(
                f,
                "{},{},{},{},{}",
                i,
                self.logp_old[i],
                self.advantages[i],
                self.returns[i],
                self.z[(i, 0)]
            )?;
        }
        Ok(())
    }
}

/// Scalar loss terms of one minibatch.
#[derive(Debug, Clone, Copy, Default)]
pub struct PpoLossParts {
    pub policy_loss: f64,
    pub value_loss: f64,
    /// Sample-based entropy estimate, -mean(log π).
    pub entropy: f64,
    pub total: f64,
}

/// Full PPO objective on a minibatch (pure function of the parameters).
pub fn ppo_loss(params: &PolicyParams, batch: &RolloutBuffer, cfg: &PpoConfig) -> PpoLossParts {
    let b = batch.len() as f64;
    let mean = params.actor.infer(&batch.actor_obs);
    let logp_new = params.log_prob_of_z(&mean, &batch.z);

    let mut policy_loss = 0.0;
    for i in 0..batch.len() {
        let ratio = (logp_new[i] - batch.logp_old[i]).exp();
        let a = batch.advantages[i];
        let surr1 = ratio * a;
        let surr2 = ratio.clamp(1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * a;
        policy_loss -= surr1.min(surr2);
    }
    policy_loss /= b;

    let v = params.critic.infer(&batch.critic_obs);
    let mut value_loss = 0.0;
    for i in 0..batch.len() {
        let err = v[(i, 0)] - batch.returns[i];
        value_loss += 0.5 * err * err;
    }
    value_loss /= b;

    let entropy = -logp_new.sum() / b;

    PpoLossParts {
        policy_loss,
        value_loss,
        entropy,
        total: policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy,
    }
}

/// Gradient of [`ppo_loss`] with respect to the trainable parameter vector.
pub struct GradResult {
    pub grad: Vec<f64>,
    pub parts: PpoLossParts,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

pub fn ppo_grad(params: &PolicyParams, batch: &RolloutBuffer, cfg: &PpoConfig) -> GradResult {
    let b_rows = batch.len();
    let b = b_rows as f64;
    let act_dim = params.act_dim;

    let (mean, actor_cache) = params.actor.forward(&batch.actor_obs);
    let std = params.log_std.mapv(f64::exp);

    // log-density of the stored pre-tanh samples under the current params
    let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let mut logp_new = Array1::zeros(b_rows);
    for i in 0..b_rows {
        let mut lp = 0.0;
        for j in 0..act_dim {
            let zij = batch.z[(i, j)];
            let u = (zij - mean[(i, j)]) / std[j];
            lp += -0.5 * u * u - params.log_std[j] - half_log_2pi;
            lp -= 2.0 * (std::f64::consts::LN_2 - zij - softplus(-2.0 * zij));
        }
        logp_new[i] = lp;
    }

    let mut policy_loss = 0.0;
    let mut approx_kl = 0.0;
    let mut clipped = 0usize;
    // dL/dlogp per row: clipped surrogate plus the entropy bonus
    let mut dlogp = Array1::zeros(b_rows);
    let lo = 1.0 - cfg.clip_epsilon;
    let hi = 1.0 + cfg.clip_epsilon;
    for i in 0..b_rows {
        let ratio = (logp_new[i] - batch.logp_old[i]).exp();
        let a = batch.advantages[i];
        let surr1 = ratio * a;
        let surr2 = ratio.clamp(lo, hi) * a;
        policy_loss -= surr1.min(surr2);
        approx_kl += batch.logp_old[i] - logp_new[i];
        if (ratio - 1.0).abs() > cfg.clip_epsilon {
            clipped += 1;
        }
        let flows = surr1 <= surr2 || (lo < ratio && ratio < hi);
        let coeff = if flows { -a * ratio / b } else { 0.0 };
        dlogp[i] = coeff + cfg.entropy_coef / b;
    }
    policy_loss /= b;
    approx_kl /= b;
    let entropy = -logp_new.sum() / b;

    // chain into the actor mean and log_std
    let mut d_mean = Array2::zeros((b_rows, act_dim));
    let mut d_log_std = Array1::zeros(act_dim);
    for i in 0..b_rows {
        for j in 0..act_dim {
            let u = (batch.z[(i, j)] - mean[(i, j)]) / std[j];
            d_mean[(i, j)] = dlogp[i] * u / std[j];
            d_log_std[j] += dlogp[i] * (u * u - 1.0);
        }
    }
    let (actor_grads, _) = params.actor.backward(&actor_cache, &d_mean);

    // critic
    let (v, critic_cache) = params.critic.forward(&batch.critic_obs);
    let mut value_loss = 0.0;
    let mut d_v = Array2::zeros((b_rows, 1));
    for i in 0..b_rows {
        let err = v[(i, 0)] - batch.returns[i];
        value_loss += 0.5 * err * err;
        d_v[(i, 0)] = cfg.value_coef * err / b;
    }
    value_loss /= b;
    let (critic_grads, _) = params.critic.backward(&critic_cache, &d_v);

    let mut grad = Vec::with_capacity(params.n_trainable_params());
    actor_grads.write(&mut grad);
    grad.extend(d_log_std.iter());
    critic_grads.write(&mut grad);

    GradResult {
        grad,
        parts: PpoLossParts {
            policy_loss,
            value_loss,
            entropy,
            total: policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy,
        },
        approx_kl,
        clip_fraction: clipped as f64 / b,
    }
}

/// Adam optimizer over the flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Scale the gradient so its global L2 norm is at most `max_norm`; returns the
/// pre-clip norm.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grad.iter_mut() {
            *g *= s;
        }
    }
    norm
}

/// Aggregated diagnostics of one update.
#[derive(Debug, Clone, Copy, Default)]
pub struct UpdateDiagnostics {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum UpdateError {
    #[error("non-finite loss during PPO update (buffer dumped to {dump})")]
    NonFiniteLoss { dump: String },
}

/// Run the full epochs × minibatches PPO update in place. Deterministic for a
/// fixed RNG state and buffer.
pub fn ppo_update(
    params: &mut PolicyParams,
    adam: &mut Adam,
    buffer: &mut RolloutBuffer,
    cfg: &PpoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateDiagnostics, UpdateError> {
    buffer.normalize_advantages();

    let m = buffer.len();
    let n_minibatches = cfg.minibatches.max(1) as usize;
    let mb_size = m.div_ceil(n_minibatches);
    let mut order: Vec<usize> = (0..m).collect();
    let mut diag = UpdateDiagnostics::default();
    let mut n_batches = 0.0;

    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(mb_size) {
            let batch = buffer.select(chunk);
            let mut result = ppo_grad(params, &batch, cfg);
            if !result.parts.total.is_finite() {
                let dump = std::env::temp_dir().join("jugglesim_ppo_nan_dump.csv");
                let _ = buffer.dump_csv(&dump);
                return Err(UpdateError::NonFiniteLoss {
                    dump: dump.display().to_string(),
                });
            }
            let norm = clip_grad_norm(&mut result.grad, cfg.max_grad_norm);
            let mut flat = params.param_vector();
            adam.step(&mut flat, &result.grad);
            params.set_param_vector(&flat);
            params.clamp_log_std();

            diag.policy_loss += result.parts.policy_loss;
            diag.value_loss += result.parts.value_loss;
            diag.entropy += result.parts.entropy;
            diag.approx_kl += result.approx_kl;
            diag.clip_fraction += result.clip_fraction;
            diag.grad_norm += norm;
            n_batches += 1.0;
        }
    }

    diag.policy_loss /= n_batches;
    diag.value_loss /= n_batches;
    diag.entropy /= n_batches;
    diag.approx_kl /= n_batches;
    diag.clip_fraction /= n_batches;
    diag.grad_norm /= n_batches;
    Ok(diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_distr::StandardNormal;

    fn tiny_cfg() -> PpoConfig {
        PpoConfig {
            hidden_sizes: vec![2],
            minibatches: 1,
            epochs: 1,
            ..PpoConfig::default()
        }
    }

    fn random_buffer(
        params: &PolicyParams,
        n: usize,
        rng: &mut ChaCha8Rng,
        perturb_logp: f64,
    ) -> RolloutBuffer {
        let obs = Array2::from_shape_fn((n, params.obs_dim), |_| {
            rng.sample::<f64, _>(StandardNormal)
        });
        let critic_obs = Array2::from_shape_fn((n, params.obs_dim + 1), |(i, j)| {
            if j < params.obs_dim {
                obs[(i, j)]
            } else {
                0.5
            }
        });
        let noise = Array2::from_shape_fn((n, params.act_dim), |_| {
            rng.sample::<f64, _>(StandardNormal)
        });
        let out = params.act(&obs, &critic_obs, &noise);
        let logp_old = out
            .log_prob
            .mapv(|v| v + perturb_logp * rng.sample::<f64, _>(StandardNormal));
        RolloutBuffer {
            actor_obs: obs,
            critic_obs,
            z: out.z,
            logp_old,
            advantages: Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal)),
            returns: Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal)),
        }
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = tiny_cfg();
        let mut params = PolicyParams::new(3, 2, &cfg.hidden_sizes, -0.4, &mut rng);
        // small perturbation of logp_old keeps ratios near but not at 1,
        // inside the clip band where the objective is smooth
        let batch = random_buffer(&params, 8, &mut rng, 0.02);

        let result = ppo_grad(&params, &batch, &cfg);
        let mut flat = params.param_vector();
        let h = 1e-5;
        let mut max_rel: f64 = 0.0;
        for idx in 0..flat.len() {
            let orig = flat[idx];
            flat[idx] = orig + h;
            params.set_param_vector(&flat);
            let lp = ppo_loss(&params, &batch, &cfg).total;
            flat[idx] = orig - h;
            params.set_param_vector(&flat);
            let lm = ppo_loss(&params, &batch, &cfg).total;
            flat[idx] = orig;
            params.set_param_vector(&flat);
            let fd = (lp - lm) / (2.0 * h);
            let denom = fd.abs().max(result.grad[idx].abs()).max(1e-6);
            max_rel = max_rel.max((result.grad[idx] - fd).abs() / denom);
        }
        assert!(max_rel < 1e-4, "max relative gradient error {max_rel}");
    }

    #[test]
    fn ratio_one_matches_vanilla_policy_gradient() {
        // with θ = θ_old the clipped surrogate's gradient equals the plain
        // policy gradient -mean(A·∇logp)
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut cfg = tiny_cfg();
        cfg.entropy_coef = 0.0;
        cfg.value_coef = 0.0;
        let params = PolicyParams::new(3, 2, &cfg.hidden_sizes, -0.4, &mut rng);
        let batch = random_buffer(&params, 16, &mut rng, 0.0);
        let clipped = ppo_grad(&params, &batch, &cfg);
        // vanilla: same formula with a huge clip band (never active)
        let mut wide = cfg.clone();
        wide.clip_epsilon = 1e9;
        let vanilla = ppo_grad(&params, &batch, &wide);
        for (a, b) in clipped.grad.iter().zip(vanilla.grad.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_advantages_leave_policy_term_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut cfg = tiny_cfg();
        cfg.entropy_coef = 0.0;
        let params = PolicyParams::new(3, 2, &cfg.hidden_sizes, -0.4, &mut rng);
        let mut batch = random_buffer(&params, 8, &mut rng, 0.0);
        batch.advantages.fill(0.0);
        let result = ppo_grad(&params, &batch, &cfg);
        assert_eq!(result.parts.policy_loss, 0.0);
        // actor gradient is exactly zero; critic gradient is not
        let n_actor = params.actor.n_params();
        assert!(result.grad[..n_actor].iter().all(|g| *g == 0.0));
        assert!(result.grad[n_actor..].iter().any(|g| *g != 0.0));
    }

    #[test]
    fn zero_learning_rate_leaves_params_bitwise_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let cfg = tiny_cfg();
        let mut params = PolicyParams::new(3, 2, &cfg.hidden_sizes, -0.4, &mut rng);
        let before = params.param_vector();
        let mut buffer = random_buffer(&params, 8, &mut rng, 0.0);
        let mut adam = Adam::new(params.n_trainable_params(), 0.0);
        ppo_update(&mut params, &mut adam, &mut buffer, &cfg, &mut rng).unwrap();
        let after = params.param_vector();
        for (a, b) in before.iter().zip(after.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn update_is_deterministic_for_fixed_seed() {
        let cfg = PpoConfig {
            hidden_sizes: vec![8],
            minibatches: 2,
            epochs: 2,
            ..PpoConfig::default()
        };
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            let mut params = PolicyParams::new(4, 2, &cfg.hidden_sizes, -0.4, &mut rng);
            let mut buffer = random_buffer(&params, 32, &mut rng, 0.01);
            let mut adam = Adam::new(params.n_trainable_params(), 3e-4);
            ppo_update(&mut params, &mut adam, &mut buffer, &cfg, &mut rng).unwrap();
            params.param_vector()
        };
        let a = run();
        let b = run();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn critic_fits_constant_reward_toy_mdp() {
        // single state, constant reward: V* = r/(1-γ); value loss → 0
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut cfg = tiny_cfg();
        cfg.hidden_sizes = vec![8];
        cfg.learning_rate = 3e-3;
        cfg.epochs = 1;
        let gamma: f64 = 0.9;
        let target = 1.0 / (1.0 - gamma);
        let mut params = PolicyParams::new(2, 1, &cfg.hidden_sizes, -0.4, &mut rng);
        let mut adam = Adam::new(params.n_trainable_params(), cfg.learning_rate);
        let obs = Array2::zeros((16, 2));
        let critic_obs = Array2::zeros((16, 3));
        for _ in 0..5000 {
            let noise =
                Array2::from_shape_fn((16, 1), |_| rng.sample::<f64, _>(StandardNormal));
            let out = params.act(&obs, &critic_obs, &noise);
            let mut buffer = RolloutBuffer {
                actor_obs: obs.clone(),
                critic_obs: critic_obs.clone(),
                z: out.z,
                logp_old: out.log_prob,
                advantages: Array1::zeros(16),
                returns: Array1::from_elem(16, target),
            };
            ppo_update(&mut params, &mut adam, &mut buffer, &cfg, &mut rng).unwrap();
        }
        let v = params.value(&critic_obs)[0];
        assert!(
            (v - target).abs() / target < 0.01,
            "critic {v} vs target {target}"
        );
    }
}
