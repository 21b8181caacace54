//! The run_* drivers behind the CLI subcommands. Every run writes a resolved
//! configuration snapshot next to its outputs; CSV contents are deterministic
//! for a fixed seed (bitwise in `--deterministic` mode, which also forces
//! single-threaded execution).

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use super::report::{
    write_ablation_csv, write_curve_csv, write_latency_csv, write_sweep_csv,
    write_trajectory_csv, AblationRow, EpisodeRow, EvalReport, SweepRow, TrajectoryRow,
};
use super::svg::{line_plot, Series};
use crate::config::{ConfigError, ScenarioConfig};
use crate::env::{EpisodeMode, JuggleEnv, ResetOverrides, ACTOR_OBS_DIM};
use crate::lcp::{self, BenchConfig, CodecKind, LatencyReport, TransportKind};
use crate::mbpp::run_mbpp_episode;
use crate::ppo::{
    self, evaluate_policy, load_checkpoint, save_checkpoint, PolicyParams, TrainResult,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Train(#[from] ppo::TrainError),
    #[error(transparent)]
    Checkpoint(#[from] ppo::CheckpointError),
    #[error(transparent)]
    Bench(#[from] lcp::bench::BenchError),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("unknown ablation toggle '{0}' (expected one of {1})")]
    UnknownToggle(String, String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Where and how a run executes.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out_dir: PathBuf,
    /// Forces single-threaded execution (bitwise-reproducible outputs).
    pub deterministic: bool,
}

impl RunContext {
    pub fn new(out_dir: impl Into<PathBuf>, deterministic: bool) -> Self {
        Self {
            out_dir: out_dir.into(),
            deterministic,
        }
    }

    fn parallel(&self) -> bool {
        !self.deterministic
    }

    fn prepare(&self) -> Result<(), HarnessError> {
        std::fs::create_dir_all(&self.out_dir).map_err(io_err(&self.out_dir))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn snapshot_config(&self, config: &ScenarioConfig, name: &str) -> Result<(), HarnessError> {
        let path = self.path(name);
        config.save(&path)?;
        Ok(())
    }
}

/// `config init`: write a preset's full default configuration.
pub fn run_init(path: &Path, preset: &str) -> Result<(), HarnessError> {
    let config = ScenarioConfig::preset(preset).ok_or_else(|| {
        HarnessError::UnknownToggle(preset.into(), ScenarioConfig::PRESET_NAMES.join(", "))
    })?;
    config.save(path)?;
    Ok(())
}

/// Training artifacts on disk.
pub struct TrainArtifacts {
    pub final_checkpoint: PathBuf,
    pub best_checkpoint: PathBuf,
    pub curve_csv: PathBuf,
    pub result: TrainResult,
}

/// Drive PPO training; emits checkpoints, the curve CSV, and the resolved
/// configuration snapshot.
pub fn run_train(config: &ScenarioConfig, ctx: &RunContext) -> Result<TrainArtifacts, HarnessError> {
    ctx.prepare()?;
    ctx.snapshot_config(config, "resolved_config.toml")?;
    let ckpt_dir = ctx.path("checkpoints");
    std::fs::create_dir_all(&ckpt_dir).map_err(io_err(&ckpt_dir))?;

    let result = ppo::train(config, ctx.parallel(), |record, policy| {
        if record.eval_mean_hits.is_some() {
            let path = ckpt_dir.join(format!("iter_{:06}.ckpt", record.iteration));
            let _ = save_checkpoint(&path, policy);
        }
        if record.iteration % 10 == 0 || record.eval_mean_hits.is_some() {
            eprintln!(
                "iter {:5}  frames {:>11}  return {:>9.2}  hits {:>6.2}  kl {:.4}  eval {}",
                record.iteration,
                record.frames,
                record.mean_return,
                record.mean_hits,
                record.approx_kl,
                record
                    .eval_mean_hits
                    .map_or("-".to_string(), |v| format!("{v:.2}")),
            );
        }
    })?;

    let final_checkpoint = ctx.path("final.ckpt");
    save_checkpoint(&final_checkpoint, &result.policy)?;
    let best_checkpoint = ctx.path("best.ckpt");
    save_checkpoint(&best_checkpoint, &result.best_policy)?;
    let curve_csv = ctx.path("curves.csv");
    write_curve_csv(&curve_csv, &result.curve).map_err(io_err(&curve_csv))?;

    Ok(TrainArtifacts {
        final_checkpoint,
        best_checkpoint,
        curve_csv,
        result,
    })
}

/// What produces actions during evaluation.
pub enum PolicySource {
    Checkpoint(PathBuf),
    Policy(Box<PolicyParams>),
    Mbpp,
}

/// Evaluate a policy source over one-minute episodes; writes eval.csv and
/// returns the report.
pub fn run_eval(
    config: &ScenarioConfig,
    source: &PolicySource,
    n_episodes: usize,
    release_height: Option<f64>,
    ctx: &RunContext,
) -> Result<EvalReport, HarnessError> {
    ctx.prepare()?;
    ctx.snapshot_config(config, "resolved_config.toml")?;
    let overrides = ResetOverrides {
        release_height,
        restitution: None,
    };
    let report = eval_source(config, source, n_episodes, overrides, ctx.parallel())?;
    let path = ctx.path("eval.csv");
    report.write_csv(&path).map_err(io_err(&path))?;
    Ok(report)
}

fn eval_source(
    config: &ScenarioConfig,
    source: &PolicySource,
    n_episodes: usize,
    overrides: ResetOverrides,
    parallel: bool,
) -> Result<EvalReport, HarnessError> {
    let episodes = match source {
        PolicySource::Checkpoint(path) => {
            let policy = load_checkpoint(path)?;
            eval_rl(&policy, config, n_episodes, overrides, parallel)
        }
        PolicySource::Policy(policy) => eval_rl(policy, config, n_episodes, overrides, parallel),
        PolicySource::Mbpp => {
            let run_one = |i: usize| {
                let ep = run_mbpp_episode(config, config.seed, i as u64, overrides);
                EpisodeRow {
                    episode: i,
                    hits: ep.stats.max_consecutive_hits,
                    reason: ep.reason.to_string(),
                    steps: ep.stats.step,
                }
            };
            if parallel {
                (0..n_episodes).into_par_iter().map(run_one).collect()
            } else {
                (0..n_episodes).map(run_one).collect()
            }
        }
    };
    Ok(EvalReport {
        episodes,
        config_hash: config.hash(),
    })
}

fn eval_rl(
    policy: &PolicyParams,
    config: &ScenarioConfig,
    n_episodes: usize,
    overrides: ResetOverrides,
    parallel: bool,
) -> Vec<EpisodeRow> {
    let outcome = evaluate_policy(policy, config, n_episodes, config.seed, overrides, parallel);
    (0..n_episodes)
        .map(|i| EpisodeRow {
            episode: i,
            hits: outcome.hits[i],
            reason: outcome.reasons[i].to_string(),
            steps: outcome.lengths[i],
        })
        .collect()
}

/// Default release-height grid of the comparison sweep, m.
pub const SWEEP_HEIGHTS: [f64; 7] = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5];

pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn rows_for(&self, method: &str) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.method == method).collect()
    }
}

/// Height sweep comparing the trained policy against the planner baseline;
/// emits sweep.csv and an SVG plot.
pub fn run_compare(
    config: &ScenarioConfig,
    checkpoint: &Path,
    heights: &[f64],
    n_episodes: usize,
    ctx: &RunContext,
) -> Result<SweepReport, HarnessError> {
    ctx.prepare()?;
    ctx.snapshot_config(config, "resolved_config.toml")?;
    let policy = load_checkpoint(checkpoint)?;
    let mut rows = Vec::new();
    for &height in heights {
        let overrides = ResetOverrides {
            release_height: Some(height),
            restitution: None,
        };
        for method in ["rl", "mbpp"] {
            let source = match method {
                "rl" => PolicySource::Policy(Box::new(policy.clone())),
                _ => PolicySource::Mbpp,
            };
            let report = eval_source(config, &source, n_episodes, overrides, ctx.parallel())?;
            eprintln!(
                "height {height:.2}  {method:4}  mean {:.2}  median {:.1}",
                report.mean_hits(),
                report.median_hits()
            );
            rows.push(SweepRow {
                height,
                method: if method == "rl" { "rl" } else { "mbpp" },
                mean: report.mean_hits(),
                std: report.std_hits(),
                max: report.max_hits(),
                min: report.min_hits(),
            });
        }
    }
    let csv = ctx.path("sweep.csv");
    write_sweep_csv(&csv, &rows).map_err(io_err(&csv))?;

    let series: Vec<Series> = ["rl", "mbpp"]
        .iter()
        .map(|m| Series {
            label: m.to_string(),
            points: rows
                .iter()
                .filter(|r| r.method == *m)
                .map(|r| (r.height, r.mean))
                .collect(),
        })
        .collect();
    let svg = line_plot(
        "Consecutive hits vs release height",
        "release height (m)",
        "mean consecutive hits",
        &series,
    );
    let svg_path = ctx.path("sweep.svg");
    std::fs::write(&svg_path, svg).map_err(io_err(&svg_path))?;
    Ok(SweepReport { rows })
}

/// Canonical ablation toggle names.
pub const ABLATION_TOGGLES: [&str; 8] = [
    "r_xy", "r_spin", "r_rpos", "r_contact", "r_smooth", "dr_hpos", "dr_rest", "dr_height",
];

/// Apply one toggle to a config copy. Accepts the canonical names above
/// (case-insensitive; '-' and '_' are interchangeable; `r_yaw` aliases
/// `r_spin`).
pub fn apply_toggle(config: &ScenarioConfig, toggle: &str) -> Result<ScenarioConfig, HarnessError> {
    let mut c = config.clone();
    let canon = toggle.to_lowercase().replace('-', "_");
    match canon.as_str() {
        "r_xy" => c.reward.enable_xy = false,
        "r_spin" | "r_yaw" => c.reward.enable_spin = false,
        "r_rpos" => c.reward.enable_rpos = false,
        "r_contact" => c.reward.enable_contact = false,
        "r_smooth" => c.reward.enable_smooth = false,
        "dr_hpos" => c.domain_randomization.randomize_horizontal = false,
        "dr_rest" => c.domain_randomization.randomize_restitution = false,
        "dr_height" => c.domain_randomization.randomize_height = false,
        _ => {
            return Err(HarnessError::UnknownToggle(
                toggle.to_string(),
                ABLATION_TOGGLES.join(", "),
            ))
        }
    }
    Ok(c)
}

pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

/// Train and evaluate the full configuration plus one variant per toggle,
/// sharing seeds and budget; emits ablation.csv and per-variant resolved
/// configs.
pub fn run_ablate(
    config: &ScenarioConfig,
    toggles: &[String],
    eval_episodes: usize,
    ctx: &RunContext,
) -> Result<AblationReport, HarnessError> {
    ctx.prepare()?;
    let mut variants: Vec<(String, ScenarioConfig)> =
        vec![("full".to_string(), config.clone())];
    for toggle in toggles {
        let variant = apply_toggle(config, toggle)?;
        variants.push((format!("wo_{}", toggle.to_lowercase().replace('-', "_")), variant));
    }

    let mut rows = Vec::new();
    for (name, variant) in &variants {
        ctx.snapshot_config(variant, &format!("resolved_config_{name}.toml"))?;
        eprintln!("ablation variant {name}: training...");
        let result = ppo::train(variant, ctx.parallel(), |_, _| {})?;
        let outcome = evaluate_policy(
            &result.best_policy,
            variant,
            eval_episodes,
            variant.seed ^ 0xAB1A,
            ResetOverrides::default(),
            ctx.parallel(),
        );
        let (mean, std, _, _) = outcome.hits_stats();
        eprintln!("ablation variant {name}: mean hits {mean:.2}");
        rows.push(AblationRow {
            variant: name.clone(),
            mean,
            std,
        });
    }
    let path = ctx.path("ablation.csv");
    write_ablation_csv(&path, &rows).map_err(io_err(&path))?;
    Ok(AblationReport { rows })
}

/// Zero-shot evaluation with an overridden ball mass.
pub fn run_generalize(
    config: &ScenarioConfig,
    checkpoint: &Path,
    ball_mass: f64,
    n_episodes: usize,
    ctx: &RunContext,
) -> Result<EvalReport, HarnessError> {
    let mut c = config.clone();
    c.ball.mass = ball_mass;
    c.validate()?;
    ctx.prepare()?;
    ctx.snapshot_config(&c, "resolved_config.toml")?;
    let report = eval_source(
        &c,
        &PolicySource::Checkpoint(checkpoint.to_path_buf()),
        n_episodes,
        ResetOverrides::default(),
        ctx.parallel(),
    )?;
    let path = ctx.path("eval.csv");
    report.write_csv(&path).map_err(io_err(&path))?;
    Ok(report)
}

pub struct LatencyBenchArtifacts {
    pub lcp: LatencyReport,
    pub verbose: LatencyReport,
}

/// Latency benchmark of both codecs on the same transport; emits one CSV per
/// codec plus a summary.
pub fn run_latency_bench(
    rate_hz: f64,
    duration_s: f64,
    transport: TransportKind,
    inject_drops: bool,
    ctx: &RunContext,
) -> Result<LatencyBenchArtifacts, HarnessError> {
    ctx.prepare()?;
    let mut reports = Vec::new();
    for codec in [CodecKind::Lcp, CodecKind::Verbose] {
        let report = lcp::run_latency_bench(&BenchConfig {
            rate_hz,
            duration_s,
            transport,
            codec,
            inject_drops,
            deterministic: ctx.deterministic,
        })?;
        let path = ctx.path(&format!("latency_{}.csv", codec.as_str()));
        write_latency_csv(&path, &report).map_err(io_err(&path))?;
        reports.push(report);
    }
    let verbose = reports.pop().unwrap();
    let lcp_report = reports.pop().unwrap();
    Ok(LatencyBenchArtifacts {
        lcp: lcp_report,
        verbose,
    })
}

/// Roll one deterministic-policy episode and log the per-step trajectory CSV.
pub fn log_trajectory(
    policy: &PolicyParams,
    config: &ScenarioConfig,
    seed: u64,
    release_height: Option<f64>,
    path: &Path,
) -> Result<u32, HarnessError> {
    let mut env = JuggleEnv::new(config, EpisodeMode::Eval, seed, 0);
    env.set_overrides(ResetOverrides {
        release_height,
        restitution: None,
    });
    let obs0 = env.reset();
    let mut rows: Vec<TrajectoryRow> = Vec::new();
    let mut obs = obs0;
    loop {
        let mut raw = ndarray::Array2::zeros((1, ACTOR_OBS_DIM));
        for j in 0..ACTOR_OBS_DIM {
            raw[(0, j)] = obs.actor[j];
        }
        policy.obs_norm.normalize(&mut raw);
        let act = policy.act_deterministic(&raw);
        let action = [act[(0, 0)], act[(0, 1)], act[(0, 2)], act[(0, 3)]];
        let out = match env.step(action) {
            Ok(o) => o,
            Err(_) => break,
        };
        let quad = env.quad_state();
        let ball = env.ball_state();
        let q = quad.attitude.quaternion();
        let mut events = Vec::new();
        for h in &out.hits {
            events.push(if h.hit_valid { "hit" } else { "hit_invalid" });
        }
        if let Some(a) = out.apex {
            events.push(if a.apex_valid { "apex" } else { "apex_invalid" });
        }
        rows.push(TrajectoryRow {
            t_s: env.time(),
            quad_pos: [quad.position.x, quad.position.y, quad.position.z],
            quad_quat: [q.w, q.i, q.j, q.k],
            quad_vel: [quad.velocity.x, quad.velocity.y, quad.velocity.z],
            quad_rates: [quad.body_rates.x, quad.body_rates.y, quad.body_rates.z],
            ball_pos: [ball.position.x, ball.position.y, ball.position.z],
            ball_vel: [ball.velocity.x, ball.velocity.y, ball.velocity.z],
            action,
            reward: out.reward,
            event: events.join(";"),
        });
        obs = out.observation;
        if out.done() {
            break;
        }
    }
    write_trajectory_csv(path, &rows).map_err(io_err(path))?;
    Ok(rows.len() as u32)
}
