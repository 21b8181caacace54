//! CSV report emission. All numeric fields use Rust's shortest-round-trip
//! float formatting, so identical values produce identical bytes.

use std::io::Write;
use std::path::Path;

use crate::env::RewardBreakdown;
use crate::lcp::LatencyReport;
use crate::ppo::TrainIterationRecord;

#[derive(Debug, Clone)]
pub struct EpisodeRow {
    pub episode: usize,
    pub hits: u32,
    pub reason: String,
    pub steps: u32,
}

/// Per-episode evaluation results plus summary statistics, recomputable from
/// the rows.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub episodes: Vec<EpisodeRow>,
    pub config_hash: String,
}

impl EvalReport {
    pub fn hits(&self) -> Vec<u32> {
        self.episodes.iter().map(|e| e.hits).collect()
    }

    pub fn mean_hits(&self) -> f64 {
        if self.episodes.is_empty() {
            return 0.0;
        }
        self.episodes.iter().map(|e| e.hits as f64).sum::<f64>() / self.episodes.len() as f64
    }

    pub fn std_hits(&self) -> f64 {
        let mean = self.mean_hits();
        if self.episodes.is_empty() {
            return 0.0;
        }
        (self
            .episodes
            .iter()
            .map(|e| (e.hits as f64 - mean).powi(2))
            .sum::<f64>()
            / self.episodes.len() as f64)
            .sqrt()
    }

    pub fn max_hits(&self) -> u32 {
        self.episodes.iter().map(|e| e.hits).max().unwrap_or(0)
    }

    pub fn min_hits(&self) -> u32 {
        self.episodes.iter().map(|e| e.hits).min().unwrap_or(0)
    }

    pub fn median_hits(&self) -> f64 {
        if self.episodes.is_empty() {
            return 0.0;
        }
        let mut hits = self.hits();
        hits.sort_unstable();
        hits[hits.len() / 2] as f64
    }

    /// Schema: episode, hits, terminated_reason, steps.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "episode,hits,terminated_reason,steps")?;
        for row in &self.episodes {
            writeln!(f, "{},{},{},{}", row.episode, row.hits, row.reason, row.steps)?;
        }
        Ok(())
    }
}

/// Schema: iteration, frames, mean_return, mean_hits, policy_loss,
/// value_loss, entropy, approx_kl, clip_fraction, eval_mean_hits.
pub fn write_curve_csv(path: &Path, curve: &[TrainIterationRecord]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        "iteration,frames,mean_return,mean_hits,policy_loss,value_loss,entropy,approx_kl,clip_fraction,eval_mean_hits"
    )?;
    for r in curve {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{}",
            r.iteration,
            r.frames,
            r.mean_return,
            r.mean_hits,
            r.policy_loss,
            r.value_loss,
            r.entropy,
            r.approx_kl,
            r.clip_fraction,
            r.eval_mean_hits.map_or(String::new(), |v| v.to_string()),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub height: f64,
    pub method: &'static str,
    pub mean: f64,
    pub std: f64,
    pub max: u32,
    pub min: u32,
}

/// Schema: height, method, mean, std, max, min.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "height,method,mean,std,max,min")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            r.height, r.method, r.mean, r.std, r.max, r.min
        )?;
    }
    Ok(())
}

/// Schema: seq, send_ns, recv_ns, latency_ns.
pub fn write_latency_csv(path: &Path, report: &LatencyReport) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "seq,send_ns,recv_ns,latency_ns")?;
    for s in &report.samples {
        writeln!(f, "{},{},{},{}", s.seq, s.send_ns, s.recv_ns, s.latency_ns())?;
    }
    Ok(())
}

/// One trajectory row per control step.
pub struct TrajectoryRow {
    pub t_s: f64,
    pub quad_pos: [f64; 3],
    pub quad_quat: [f64; 4],
    pub quad_vel: [f64; 3],
    pub quad_rates: [f64; 3],
    pub ball_pos: [f64; 3],
    pub ball_vel: [f64; 3],
    pub action: [f64; 4],
    pub reward: RewardBreakdown,
    pub event: String,
}

pub const TRAJECTORY_HEADER: &str = "t_s,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,bpx,bpy,bpz,bvx,bvy,bvz,a0,a1,a2,a3,r_hit,r_apex,r_rpos,r_contact,r_xy,r_smooth,r_spin,r_total,event";

pub fn write_trajectory_csv(path: &Path, rows: &[TrajectoryRow]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{TRAJECTORY_HEADER}")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t_s,
            r.quad_pos[0], r.quad_pos[1], r.quad_pos[2],
            r.quad_quat[0], r.quad_quat[1], r.quad_quat[2], r.quad_quat[3],
            r.quad_vel[0], r.quad_vel[1], r.quad_vel[2],
            r.quad_rates[0], r.quad_rates[1], r.quad_rates[2],
            r.ball_pos[0], r.ball_pos[1], r.ball_pos[2],
            r.ball_vel[0], r.ball_vel[1], r.ball_vel[2],
            r.action[0], r.action[1], r.action[2], r.action[3],
            r.reward.r_hit, r.reward.r_apex, r.reward.r_rpos, r.reward.r_contact,
            r.reward.r_xy, r.reward.r_smooth, r.reward.r_spin, r.reward.total,
            r.event,
        )?;
    }
    Ok(())
}

/// Two-column ablation table.
pub struct AblationRow {
    pub variant: String,
    pub mean: f64,
    pub std: f64,
}

pub fn write_ablation_csv(path: &Path, rows: &[AblationRow]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "variant,mean,std")?;
    for r in rows {
        writeln!(f, "{},{},{}", r.variant, r.mean, r.std)?;
    }
    Ok(())
}
