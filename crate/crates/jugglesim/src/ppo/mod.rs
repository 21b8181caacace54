//! From-scratch PPO: Gaussian MLP actor with tanh squashing, privileged
//! critic, GAE, clipped surrogate objective, Adam, and a training loop over
//! the vectorized juggling environment.

pub mod checkpoint;
pub mod gae;
pub mod mlp;
pub mod policy;
pub mod train;
pub mod update;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
pub use gae::{compute_gae, GaeInputs};
pub use mlp::Mlp;
pub use policy::{PolicyParams, RunningNorm};
pub use train::{
    evaluate_policy, train, EvalOutcome, TrainError, TrainIterationRecord, TrainResult,
};
pub use update::{
    clip_grad_norm, ppo_grad, ppo_loss, ppo_update, Adam, PpoLossParts, RolloutBuffer,
    UpdateDiagnostics,
};
