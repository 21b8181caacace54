//! Vectorized environment batch with per-environment RNG streams and
//! auto-reset semantics for training.

use rayon::prelude::*;

use super::{EnvError, EpisodeMode, JuggleEnv, Observation, ResetOverrides, StepOutcome};
use crate::config::ScenarioConfig;

/// Summary emitted when an episode inside the batch finishes.
#[derive(Debug, Clone)]
pub struct EpisodeStats {
    pub env_index: usize,
    pub length: u32,
    pub return_sum: f64,
    pub max_consecutive_hits: u32,
    /// Termination reason string, or "truncated".
    pub reason: &'static str,
}

/// One batched transition as seen by a rollout collector.
#[derive(Debug, Clone)]
pub struct Transition {
    pub reward: f64,
    pub reward_breakdown: super::RewardBreakdown,
    pub terminated: bool,
    pub truncated: bool,
    /// Observation after the step; when the episode ended this is already the
    /// first observation of the freshly reset episode.
    pub observation: Observation,
    /// Terminal observation for bootstrap when truncated.
    pub final_observation: Option<Observation>,
    pub hits: u32,
}

/// N independent environments stepped element-wise. Each environment draws
/// from its own RNG stream of the root seed, so results are independent of
/// the thread schedule and of batch composition.
pub struct VecEnv {
    envs: Vec<JuggleEnv>,
    parallel: bool,
}

impl VecEnv {
    pub fn new(
        config: &ScenarioConfig,
        mode: EpisodeMode,
        root_seed: u64,
        n: usize,
        parallel: bool,
    ) -> Self {
        assert!(n >= 1, "need at least one environment");
        let envs = (0..n)
            .map(|i| JuggleEnv::new(config, mode, root_seed, i as u64))
            .collect();
        Self { envs, parallel }
    }

    /// Build from explicit environments (tests, custom stream layouts).
    pub fn from_envs(envs: Vec<JuggleEnv>, parallel: bool) -> Self {
        assert!(!envs.is_empty());
        Self { envs, parallel }
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn envs(&self) -> &[JuggleEnv] {
        &self.envs
    }

    pub fn envs_mut(&mut self) -> &mut [JuggleEnv] {
        &mut self.envs
    }

    pub fn set_overrides(&mut self, overrides: ResetOverrides) {
        for env in &mut self.envs {
            env.set_overrides(overrides);
        }
    }

    /// Reset every environment, returning initial observations in index order.
    pub fn reset_all(&mut self) -> Vec<Observation> {
        self.envs.iter_mut().map(|e| e.reset()).collect()
    }

    /// Step every environment with its own action; finished episodes reset
    /// automatically and their statistics are returned in index order.
    pub fn step_all(
        &mut self,
        actions: &[[f64; super::ACTION_DIM]],
    ) -> Result<(Vec<Transition>, Vec<EpisodeStats>), EnvError> {
        assert_eq!(actions.len(), self.envs.len(), "one action per environment");

        let step_one = |(index, (env, action)): (usize, (&mut JuggleEnv, &[f64; 4]))| {
            let outcome = env.step(*action)?;
            Ok(finish_transition(index, env, outcome))
        };

        let results: Vec<Result<(Transition, Option<EpisodeStats>), EnvError>> = if self.parallel {
            self.envs
                .par_iter_mut()
                .zip(actions.par_iter())
                .enumerate()
                .map(step_one)
                .collect()
        } else {
            self.envs
                .iter_mut()
                .zip(actions.iter())
                .enumerate()
                .map(step_one)
                .collect()
        };

        let mut transitions = Vec::with_capacity(self.envs.len());
        let mut stats = Vec::new();
        for r in results {
            let (t, s) = r?;
            transitions.push(t);
            if let Some(s) = s {
                stats.push(s);
            }
        }
        Ok((transitions, stats))
    }
}

fn finish_transition(
    index: usize,
    env: &mut JuggleEnv,
    outcome: StepOutcome,
) -> (Transition, Option<EpisodeStats>) {
    let terminated = outcome.terminated.is_some();
    let truncated = outcome.truncated;
    let mut stats = None;
    let mut observation = outcome.observation;
    let mut final_observation = None;
    if terminated || truncated {
        stats = Some(EpisodeStats {
            env_index: index,
            length: env.episode_state().step,
            return_sum: env.episode_state().return_sum,
            max_consecutive_hits: env.episode_state().max_consecutive_hits,
            reason: outcome
                .terminated
                .map(|r| r.as_str())
                .unwrap_or("truncated"),
        });
        final_observation = Some(observation);
        observation = env.reset();
    }
    (
        Transition {
            reward: outcome.reward.total,
            reward_breakdown: outcome.reward,
            terminated,
            truncated,
            observation,
            final_observation,
            hits: outcome.hits.iter().filter(|h| h.hit_valid).count() as u32,
        },
        stats,
    )
}
