//! Versioned flat-binary checkpoint format.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic        8 bytes  "JGSMCKPT"
//! version      u32      (= 1)
//! obs_dim      u32
//! act_dim      u32
//! n_hidden     u32
//! hidden[i]    u32 × n_hidden
//! norm count   f64
//! norm mean    f64 × obs_dim
//! norm m2      f64 × obs_dim
//! log_std      f64 × act_dim
//! actor        f64 × n_actor   (per layer: weights row-major, then bias)
//! critic       f64 × n_critic  (same order; input dim is obs_dim + 1)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::policy::PolicyParams;

const MAGIC: &[u8; 8] = b"JGSMCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint truncated")]
    Truncated,
}

pub fn save_checkpoint(path: &Path, policy: &PolicyParams) -> Result<(), CheckpointError> {
    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(policy.obs_dim as u32).to_le_bytes());
    out.extend_from_slice(&(policy.act_dim as u32).to_le_bytes());
    let hidden: Vec<usize> = policy
        .actor
        .layers
        .iter()
        .take(policy.actor.layers.len() - 1)
        .map(|l| l.w.nrows())
        .collect();
    out.extend_from_slice(&(hidden.len() as u32).to_le_bytes());
    for h in &hidden {
        out.extend_from_slice(&(*h as u32).to_le_bytes());
    }
    let mut push_f64 = |v: f64, out: &mut Vec<u8>| out.extend_from_slice(&v.to_le_bytes());
    push_f64(policy.obs_norm.count, &mut out);
    for v in policy.obs_norm.mean.iter() {
        push_f64(*v, &mut out);
    }
    for v in policy.obs_norm.m2.iter() {
        push_f64(*v, &mut out);
    }
    for v in policy.log_std.iter() {
        push_f64(*v, &mut out);
    }
    let mut actor_params = Vec::new();
    policy.actor.write_params(&mut actor_params);
    for v in actor_params {
        push_f64(v, &mut out);
    }
    let mut critic_params = Vec::new();
    policy.critic.write_params(&mut critic_params);
    for v in critic_params {
        push_f64(v, &mut out);
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<PolicyParams, CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut k = 0usize;
    let take = |k: &mut usize, n: usize| -> Result<&[u8], CheckpointError> {
        if *k + n > bytes.len() {
            return Err(CheckpointError::Truncated);
        }
        let s = &bytes[*k..*k + n];
        *k += n;
        Ok(s)
    };
    if take(&mut k, 8)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let read_u32 = |k: &mut usize| -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(take(k, 4)?.try_into().unwrap()))
    };
    let read_f64 = |k: &mut usize| -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(take(k, 8)?.try_into().unwrap()))
    };
    let version = read_u32(&mut k)?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let obs_dim = read_u32(&mut k)? as usize;
    let act_dim = read_u32(&mut k)? as usize;
    let n_hidden = read_u32(&mut k)? as usize;
    let mut hidden = Vec::with_capacity(n_hidden);
    for _ in 0..n_hidden {
        hidden.push(read_u32(&mut k)? as usize);
    }

    // rebuild with a throwaway seed, then overwrite every parameter
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut policy = PolicyParams::new(obs_dim, act_dim, &hidden, 0.0, &mut rng);

    policy.obs_norm.count = read_f64(&mut k)?;
    for j in 0..obs_dim {
        policy.obs_norm.mean[j] = read_f64(&mut k)?;
    }
    for j in 0..obs_dim {
        policy.obs_norm.m2[j] = read_f64(&mut k)?;
    }
    for j in 0..act_dim {
        policy.log_std[j] = read_f64(&mut k)?;
    }
    let n_actor = policy.actor.n_params();
    let mut actor_params = Vec::with_capacity(n_actor);
    for _ in 0..n_actor {
        actor_params.push(read_f64(&mut k)?);
    }
    policy.actor.read_params(&actor_params);
    let n_critic = policy.critic.n_params();
    let mut critic_params = Vec::with_capacity(n_critic);
    for _ in 0..n_critic {
        critic_params.push(read_f64(&mut k)?);
    }
    policy.critic.read_params(&critic_params);
    Ok(policy)
}
