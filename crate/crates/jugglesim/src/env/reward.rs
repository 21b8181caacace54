//! Per-step reward: sparse hit/apex terms plus shaping.

use serde::{Deserialize, Serialize};

use crate::config::RewardConfig;

/// The seven reward terms and their sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// 50 per valid hit.
    pub r_hit: f64,
    /// 50 per valid apex.
    pub r_apex: f64,
    /// Dense positional term 1/(1 + max(d_xy, 0.2)).
    pub r_rpos: f64,
    /// Center-contact term 10·exp(-5·d_axis), only on hit steps.
    pub r_contact: f64,
    /// Horizontal drift penalty -d_quad.
    pub r_xy: f64,
    /// Smoothness term 2·exp(-‖a_t - a_{t-1}‖).
    pub r_smooth: f64,
    /// Yaw penalty -10·|ψ|.
    pub r_spin: f64,
    /// Exact sum of the included terms.
    pub total: f64,
}

/// Scalar inputs the reward depends on.
#[derive(Debug, Clone, Copy)]
pub struct RewardInputs {
    /// Horizontal ball-to-quadrotor distance, m.
    pub d_xy: f64,
    /// Contact distance from the racket centerline, m (hit steps only).
    pub d_axis: f64,
    /// Horizontal quadrotor distance from the origin, m.
    pub d_quad: f64,
    /// Quadrotor yaw angle, rad, in (-π, π].
    pub yaw: f64,
    /// ‖a_t - a_{t-1}‖₂ on normalized actions.
    pub action_error: f64,
    /// A valid hit occurred this step.
    pub hit: bool,
    /// A valid apex was observed this step.
    pub apex: bool,
}

/// Evaluate the reward. Disabled shaping terms contribute exactly zero and
/// are excluded from the sum; the hit and apex terms are always active.
pub fn compute_reward(inputs: &RewardInputs, toggles: &RewardConfig) -> RewardBreakdown {
    let hit = if inputs.hit { 1.0 } else { 0.0 };
    let apex = if inputs.apex { 1.0 } else { 0.0 };

    let r_hit = 50.0 * hit;
    let r_apex = 50.0 * apex;
    let r_rpos = if toggles.enable_rpos {
        1.0 / (1.0 + inputs.d_xy.max(0.2))
    } else {
        0.0
    };
    let r_contact = if toggles.enable_contact {
        10.0 * (-5.0 * inputs.d_axis).exp() * hit
    } else {
        0.0
    };
    let r_xy = if toggles.enable_xy {
        -1.0 * inputs.d_quad
    } else {
        0.0
    };
    let r_smooth = if toggles.enable_smooth {
        2.0 * (-inputs.action_error).exp()
    } else {
        0.0
    };
    let r_spin = if toggles.enable_spin {
        -10.0 * inputs.yaw.abs()
    } else {
        0.0
    };

    RewardBreakdown {
        r_hit,
        r_apex,
        r_rpos,
        r_contact,
        r_xy,
        r_smooth,
        r_spin,
        total: r_hit + r_apex + r_rpos + r_contact + r_xy + r_smooth + r_spin,
    }
}
