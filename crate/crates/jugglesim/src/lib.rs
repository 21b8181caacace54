//! Quadrotor ball-juggling stack.
//!
//! A self-contained simulation and learning pipeline for the aerial
//! ball-juggling task: a quadrotor carrying a racket must repeatedly strike a
//! falling ball so that each contact and the following flight apex land inside
//! configured altitude windows.
//!
//! The crate is organized around the stages of that pipeline:
//!
//! - [`dynamics`] — rigid-body quadrotor and ball flight models with a
//!   fixed-step RK4 integrator.
//! - [`contact`] — racket-ball collision detection, restitution-based impact
//!   resolution, and hit/apex event classification.
//! - [`control`] — the low-level loop mapping collective-thrust/body-rate
//!   commands to rotor speeds (rate PID + mixer).
//! - [`env`] — the juggling MDP: observations, reward shaping, domain
//!   randomization, termination, and a vectorized batch interface.
//! - [`ppo`] — a from-scratch PPO trainer (Gaussian MLP actor, privileged
//!   critic, GAE, clipped surrogate, Adam).
//! - [`mbpp`] — the model-based predictive-planner baseline: Kalman-filter
//!   ball prediction, interception planning via restitution inversion,
//!   minimum-jerk trajectories, open-loop execution.
//! - [`lcp`] — a fixed-layout binary state-streaming codec with loopback/UDP
//!   transports and a latency benchmark.
//! - [`harness`] — experiment drivers (train / eval / compare / ablate /
//!   generalize / latency-bench / physics-check) and report emission.
//!
//! Most capabilities have a runnable demo under `examples/`; the `jugglesim`
//! binary exposes the same drivers as subcommands.

pub mod config;
pub mod contact;
pub mod control;
pub mod dynamics;
pub mod env;
pub mod harness;
pub mod lcp;
pub mod mbpp;
pub mod ppo;

/// Gravitational acceleration magnitude, m/s². World gravity is `(0, 0, -GRAVITY)`.
pub const GRAVITY: f64 = 9.81;
