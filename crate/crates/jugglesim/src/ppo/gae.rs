//! Generalized advantage estimation over batched rollouts with separate
//! termination (no bootstrap) and truncation (bootstrap) handling.

use ndarray::Array2;

/// Inputs are `T × N` (time-major). `next_values[t]` is the critic value of
/// the observation that followed step `t` *before* any auto-reset: the next
/// row's observation value mid-episode, the terminal observation's value on
/// truncation, and ignored on termination.
pub struct GaeInputs<'a> {
    pub rewards: &'a Array2<f64>,
    pub values: &'a Array2<f64>,
    pub next_values: &'a Array2<f64>,
    /// 1.0 where the episode terminated at step t (no bootstrap).
    pub terminated: &'a Array2<f64>,
    /// 1.0 where the episode ended at step t for any reason (advantage chain
    /// stops).
    pub done: &'a Array2<f64>,
}

/// Reverse-recursion GAE; returns `(advantages, returns)`, both `T × N`.
pub fn compute_gae(inputs: &GaeInputs, gamma: f64, lambda: f64) -> (Array2<f64>, Array2<f64>) {
    let (t_len, n) = inputs.rewards.dim();
    let mut advantages = Array2::zeros((t_len, n));
    for i in 0..n {
        let mut acc = 0.0;
        for t in (0..t_len).rev() {
            let nonterminal = 1.0 - inputs.terminated[(t, i)];
            let chain = 1.0 - inputs.done[(t, i)];
            let delta = inputs.rewards[(t, i)]
                + gamma * nonterminal * inputs.next_values[(t, i)]
                - inputs.values[(t, i)];
            acc = delta + gamma * lambda * chain * acc;
            advantages[(t, i)] = acc;
        }
    }
    let returns = &advantages + inputs.values;
    (advantages, returns)
}
