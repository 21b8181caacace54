//! Training loop: batched rollout collection with per-environment RNG
//! streams, GAE, clipped-surrogate updates, periodic deterministic
//! evaluation, and early stopping at a target hit count.

use std::collections::VecDeque;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use super::gae::{compute_gae, GaeInputs};
use super::policy::PolicyParams;
use super::update::{ppo_update, Adam, RolloutBuffer, UpdateDiagnostics, UpdateError};
use crate::config::ScenarioConfig;
use crate::env::{
    EpisodeMode, JuggleEnv, Observation, ResetOverrides, VecEnv, ACTION_DIM, ACTOR_OBS_DIM,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Env(#[from] crate::env::EnvError),
    #[error(transparent)]
    Update(#[from] UpdateError),
    #[error("non-finite policy output at iteration {iteration} (env {env})")]
    NonFiniteAction { iteration: u32, env: usize },
}

/// One row of the training curve.
#[derive(Debug, Clone, Copy)]
pub struct TrainIterationRecord {
    pub iteration: u32,
    pub frames: u64,
    /// Mean undiscounted return over recently finished episodes.
    pub mean_return: f64,
    /// Mean per-episode maximum consecutive hits over recent episodes.
    pub mean_hits: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// Deterministic evaluation result, when this iteration ran one.
    pub eval_mean_hits: Option<f64>,
}

pub struct TrainResult {
    pub policy: PolicyParams,
    /// Parameters of the best evaluation seen (falls back to final).
    pub best_policy: PolicyParams,
    pub best_eval_hits: f64,
    pub curve: Vec<TrainIterationRecord>,
    pub frames: u64,
    pub stopped_early: bool,
}

/// Train a policy on the juggling task. `on_iteration` observes every curve
/// record together with the current parameters (for checkpointing).
pub fn train(
    config: &ScenarioConfig,
    parallel: bool,
    mut on_iteration: impl FnMut(&TrainIterationRecord, &PolicyParams),
) -> Result<TrainResult, TrainError> {
    let cfg = &config.ppo;
    let n_envs = cfg.n_envs as usize;
    let t_len = cfg.rollout_steps as usize;

    let mut policy_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5052_4F4C);
    let mut policy = PolicyParams::new(
        ACTOR_OBS_DIM,
        ACTION_DIM,
        &cfg.hidden_sizes,
        cfg.log_std_init,
        &mut policy_rng,
    );
    let mut adam = Adam::new(policy.n_trainable_params(), cfg.learning_rate);
    let mut update_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5550_4454);

    let mut vecenv = VecEnv::new(config, EpisodeMode::Train, config.seed, n_envs, parallel);
    let mut observations = vecenv.reset_all();

    // independent action-noise streams per environment
    let mut noise_rngs: Vec<ChaCha8Rng> = (0..n_envs)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x4143_5421);
            rng.set_stream(i as u64);
            rng
        })
        .collect();

    let mut recent_episodes: VecDeque<(f64, u32)> = VecDeque::with_capacity(256);
    let mut curve = Vec::new();
    let mut frames: u64 = 0;
    let mut iteration: u32 = 0;
    let mut best_policy = policy.clone();
    let mut best_eval_hits = f64::NEG_INFINITY;
    let mut stopped_early = false;

    while frames < cfg.total_frames {
        iteration += 1;

        let mut rewards = Array2::zeros((t_len, n_envs));
        let mut values = Array2::zeros((t_len, n_envs));
        let mut terminated = Array2::zeros((t_len, n_envs));
        let mut done = Array2::zeros((t_len, n_envs));
        let mut next_values = Array2::zeros((t_len, n_envs));
        let mut actor_obs = Array2::zeros((t_len * n_envs, ACTOR_OBS_DIM));
        let mut critic_obs = Array2::zeros((t_len * n_envs, ACTOR_OBS_DIM + 1));
        let mut z_store = Array2::zeros((t_len * n_envs, ACTION_DIM));
        let mut logp_store = Array1::zeros(t_len * n_envs);
        // (t, env, terminal observation) of truncated episodes
        let mut pending_bootstrap: Vec<(usize, usize, Observation)> = Vec::new();

        for t in 0..t_len {
            let mut raw = Array2::zeros((n_envs, ACTOR_OBS_DIM));
            for (i, obs) in observations.iter().enumerate() {
                for j in 0..ACTOR_OBS_DIM {
                    raw[(i, j)] = obs.actor[j];
                }
            }
            policy.obs_norm.update(&raw);
            policy.obs_norm.normalize(&mut raw);
            let mut critic_in = Array2::zeros((n_envs, ACTOR_OBS_DIM + 1));
            for i in 0..n_envs {
                for j in 0..ACTOR_OBS_DIM {
                    critic_in[(i, j)] = raw[(i, j)];
                }
                critic_in[(i, ACTOR_OBS_DIM)] = observations[i].critic_extra;
            }

            let noise = Array2::from_shape_fn((n_envs, ACTION_DIM), |(i, _)| {
                noise_rngs[i].sample::<f64, _>(StandardNormal)
            });
            let act = policy.act(&raw, &critic_in, &noise);

            let mut actions = vec![[0.0; ACTION_DIM]; n_envs];
            for i in 0..n_envs {
                for j in 0..ACTION_DIM {
                    let a = act.actions[(i, j)];
                    if !a.is_finite() {
                        return Err(TrainError::NonFiniteAction { iteration, env: i });
                    }
                    actions[i][j] = a;
                }
            }

            let (transitions, stats) = vecenv.step_all(&actions)?;
            for s in stats {
                if recent_episodes.len() == 256 {
                    recent_episodes.pop_front();
                }
                recent_episodes.push_back((s.return_sum, s.max_consecutive_hits));
            }

            let row0 = t * n_envs;
            for i in 0..n_envs {
                for j in 0..ACTOR_OBS_DIM {
                    actor_obs[(row0 + i, j)] = raw[(i, j)];
                    critic_obs[(row0 + i, j)] = critic_in[(i, j)];
                }
                critic_obs[(row0 + i, ACTOR_OBS_DIM)] = critic_in[(i, ACTOR_OBS_DIM)];
                for j in 0..ACTION_DIM {
                    z_store[(row0 + i, j)] = act.z[(i, j)];
                }
                logp_store[row0 + i] = act.log_prob[i];
                values[(t, i)] = act.value[i];

                let tr = &transitions[i];
                rewards[(t, i)] = tr.reward;
                if tr.terminated {
                    terminated[(t, i)] = 1.0;
                }
                if tr.terminated || tr.truncated {
                    done[(t, i)] = 1.0;
                    if tr.truncated {
                        pending_bootstrap.push((t, i, tr.final_observation.unwrap()));
                    }
                } else if t > 0 {
                    // value of obs_{t+1} equals values[t+1] — filled next loop
                }
                observations[i] = tr.observation;
            }
            frames += n_envs as u64;
        }

        // next_values: mid-rollout from the following row, truncations from
        // the stored terminal observations, tail from the current obs
        for t in 0..t_len - 1 {
            for i in 0..n_envs {
                if done[(t, i)] == 0.0 {
                    next_values[(t, i)] = values[(t + 1, i)];
                }
            }
        }
        {
            // tail values for unfinished envs
            let mut raw = Array2::zeros((n_envs, ACTOR_OBS_DIM));
            for (i, obs) in observations.iter().enumerate() {
                for j in 0..ACTOR_OBS_DIM {
                    raw[(i, j)] = obs.actor[j];
                }
            }
            policy.obs_norm.normalize(&mut raw);
            let mut critic_in = Array2::zeros((n_envs, ACTOR_OBS_DIM + 1));
            for i in 0..n_envs {
                for j in 0..ACTOR_OBS_DIM {
                    critic_in[(i, j)] = raw[(i, j)];
                }
                critic_in[(i, ACTOR_OBS_DIM)] = observations[i].critic_extra;
            }
            let tail = policy.value(&critic_in);
            for i in 0..n_envs {
                if done[(t_len - 1, i)] == 0.0 {
                    next_values[(t_len - 1, i)] = tail[i];
                }
            }
        }
        if !pending_bootstrap.is_empty() {
            let mut raw = Array2::zeros((pending_bootstrap.len(), ACTOR_OBS_DIM));
            let mut critic_in = Array2::zeros((pending_bootstrap.len(), ACTOR_OBS_DIM + 1));
            for (k, (_, _, obs)) in pending_bootstrap.iter().enumerate() {
                for j in 0..ACTOR_OBS_DIM {
                    raw[(k, j)] = obs.actor[j];
                }
                critic_in[(k, ACTOR_OBS_DIM)] = obs.critic_extra;
            }
            policy.obs_norm.normalize(&mut raw);
            for k in 0..pending_bootstrap.len() {
                for j in 0..ACTOR_OBS_DIM {
                    critic_in[(k, j)] = raw[(k, j)];
                }
            }
            let v = policy.value(&critic_in);
            for (k, (t, i, _)) in pending_bootstrap.iter().enumerate() {
                next_values[(*t, *i)] = v[k];
            }
        }

        let (advantages, returns) = compute_gae(
            &GaeInputs {
                rewards: &rewards,
                values: &values,
                next_values: &next_values,
                terminated: &terminated,
                done: &done,
            },
            cfg.gamma,
            cfg.gae_lambda,
        );

        let m = t_len * n_envs;
        let mut adv_flat = Array1::zeros(m);
        let mut ret_flat = Array1::zeros(m);
        for t in 0..t_len {
            for i in 0..n_envs {
                adv_flat[t * n_envs + i] = advantages[(t, i)];
                ret_flat[t * n_envs + i] = returns[(t, i)];
            }
        }
        let mut buffer = RolloutBuffer {
            actor_obs,
            critic_obs,
            z: z_store,
            logp_old: logp_store,
            advantages: adv_flat,
            returns: ret_flat,
        };
        let diag: UpdateDiagnostics =
            ppo_update(&mut policy, &mut adam, &mut buffer, cfg, &mut update_rng)?;

        let (mean_return, mean_hits) = if recent_episodes.is_empty() {
            (0.0, 0.0)
        } else {
            let n = recent_episodes.len() as f64;
            (
                recent_episodes.iter().map(|(r, _)| r).sum::<f64>() / n,
                recent_episodes.iter().map(|(_, h)| *h as f64).sum::<f64>() / n,
            )
        };

        let mut eval_mean_hits = None;
        if cfg.eval_interval > 0 && iteration % cfg.eval_interval == 0 {
            let outcome = evaluate_policy(
                &policy,
                config,
                cfg.eval_episodes as usize,
                config.seed ^ 0xE7A1,
                ResetOverrides::default(),
                parallel,
            );
            let mean = outcome.mean_hits();
            eval_mean_hits = Some(mean);
            if mean > best_eval_hits {
                best_eval_hits = mean;
                best_policy = policy.clone();
            }
            if let Some(target) = cfg.target_mean_hits {
                if mean >= target {
                    stopped_early = true;
                }
            }
        }

        let record = TrainIterationRecord {
            iteration,
            frames,
            mean_return,
            mean_hits,
            policy_loss: diag.policy_loss,
            value_loss: diag.value_loss,
            entropy: diag.entropy,
            approx_kl: diag.approx_kl,
            clip_fraction: diag.clip_fraction,
            eval_mean_hits,
        };
        on_iteration(&record, &policy);
        curve.push(record);

        if stopped_early {
            break;
        }
    }

    if best_eval_hits == f64::NEG_INFINITY {
        best_policy = policy.clone();
    }
    Ok(TrainResult {
        policy,
        best_policy,
        best_eval_hits,
        curve,
        frames,
        stopped_early,
    })
}

/// Deterministic-policy evaluation over independent episodes.
pub struct EvalOutcome {
    /// Per-episode maximum consecutive hits.
    pub hits: Vec<u32>,
    pub returns: Vec<f64>,
    pub lengths: Vec<u32>,
    pub reasons: Vec<&'static str>,
}

impl EvalOutcome {
    pub fn mean_hits(&self) -> f64 {
        if self.hits.is_empty() {
            return 0.0;
        }
        self.hits.iter().map(|h| *h as f64).sum::<f64>() / self.hits.len() as f64
    }

    pub fn hits_stats(&self) -> (f64, f64, u32, u32) {
        let mean = self.mean_hits();
        let n = self.hits.len().max(1) as f64;
        let var = self
            .hits
            .iter()
            .map(|h| (*h as f64 - mean) * (*h as f64 - mean))
            .sum::<f64>()
            / n;
        let max = self.hits.iter().copied().max().unwrap_or(0);
        let min = self.hits.iter().copied().min().unwrap_or(0);
        (mean, var.sqrt(), max, min)
    }

    pub fn median_hits(&self) -> f64 {
        if self.hits.is_empty() {
            return 0.0;
        }
        let mut sorted = self.hits.clone();
        sorted.sort_unstable();
        sorted[sorted.len() / 2] as f64
    }
}

/// Roll out `n_episodes` one-episode evaluation environments under the
/// deterministic policy (tanh of the actor mean, frozen normalizer).
pub fn evaluate_policy(
    policy: &PolicyParams,
    config: &ScenarioConfig,
    n_episodes: usize,
    seed: u64,
    overrides: ResetOverrides,
    parallel: bool,
) -> EvalOutcome {
    let mut envs: Vec<JuggleEnv> = (0..n_episodes)
        .map(|i| {
            let mut env = JuggleEnv::new(config, EpisodeMode::Eval, seed, i as u64);
            env.set_overrides(overrides);
            env.reset();
            env
        })
        .collect();
    let mut finished = vec![false; n_episodes];
    let mut observations: Vec<Observation> = envs.iter().map(|e| e.observe()).collect();

    loop {
        let active: Vec<usize> = (0..n_episodes).filter(|&i| !finished[i]).collect();
        if active.is_empty() {
            break;
        }
        let mut raw = Array2::zeros((active.len(), ACTOR_OBS_DIM));
        for (k, &i) in active.iter().enumerate() {
            for j in 0..ACTOR_OBS_DIM {
                raw[(k, j)] = observations[i].actor[j];
            }
        }
        policy.obs_norm.normalize(&mut raw);
        let actions = policy.act_deterministic(&raw);

        // step the active environments, each with its own action
        let mut jobs: Vec<(usize, [f64; ACTION_DIM])> = Vec::with_capacity(active.len());
        for (k, &i) in active.iter().enumerate() {
            let mut a = [0.0; ACTION_DIM];
            for j in 0..ACTION_DIM {
                a[j] = actions[(k, j)];
            }
            jobs.push((i, a));
        }
        let step_env = |env: &mut JuggleEnv, action: [f64; ACTION_DIM]| {
            env.step(action).expect("active episode")
        };
        let outcomes: Vec<(usize, crate::env::StepOutcome)> = if parallel {
            let mut env_slots: Vec<(usize, &mut JuggleEnv)> = envs
                .iter_mut()
                .enumerate()
                .filter(|(i, _)| !finished[*i])
                .collect();
            env_slots
                .par_iter_mut()
                .zip(jobs.par_iter())
                .map(|((i, env), (_, a))| (*i, step_env(env, *a)))
                .collect()
        } else {
            jobs.iter()
                .map(|(i, a)| (*i, step_env(&mut envs[*i], *a)))
                .collect()
        };
        for (i, out) in outcomes {
            observations[i] = out.observation;
            if out.done() {
                finished[i] = true;
            }
        }
    }

    let mut hits = Vec::with_capacity(n_episodes);
    let mut returns = Vec::with_capacity(n_episodes);
    let mut lengths = Vec::with_capacity(n_episodes);
    let mut reasons = Vec::with_capacity(n_episodes);
    for env in &envs {
        let s = env.episode_state();
        hits.push(s.max_consecutive_hits);
        returns.push(s.return_sum);
        lengths.push(s.step);
        reasons.push("episode_end");
    }
    EvalOutcome {
        hits,
        returns,
        lengths,
        reasons,
    }
}
