//! Thin subcommand CLI over the library's experiment drivers.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use jugglesim::config::ScenarioConfig;
use jugglesim::harness::{
    self, run_physics_check, PolicySource, RunContext, ABLATION_TOGGLES, SWEEP_HEIGHTS,
};
use jugglesim::lcp::TransportKind;

#[derive(Parser)]
#[command(name = "jugglesim", about = "Quadrotor ball-juggling experiments")]
struct Cli {
    /// Scenario configuration file (defaults to the sim preset).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Single-threaded, bitwise-reproducible mode.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Output directory.
    #[arg(long, global = true, default_value = "runs/out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a full default configuration file.
    Init {
        /// Destination path.
        #[arg(default_value = "jugglesim.toml")]
        path: PathBuf,
        /// Preset name (sim, real-analog, paper-racket, smoke, desk, full).
        #[arg(long, default_value = "sim")]
        preset: String,
    },
    /// Train a juggling policy with PPO.
    Train,
    /// Evaluate a checkpoint (or the planner baseline) over one-minute episodes.
    Eval {
        /// Checkpoint path; omit with --mbpp to evaluate the baseline.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Evaluate the model-based predictive planner instead.
        #[arg(long)]
        mbpp: bool,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        /// Fixed ball release height, m.
        #[arg(long)]
        height: Option<f64>,
        /// Also write a per-step trajectory CSV of episode 0 (RL source only).
        #[arg(long)]
        trajectory: bool,
    },
    /// Sweep release heights comparing the RL policy against the planner.
    Compare {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Heights to sweep, m.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        heights: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
    },
    /// Train ablation variants (one toggle each) with shared seed and budget.
    Ablate {
        /// Toggles to ablate; defaults to all.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        toggle: Option<Vec<String>>,
        #[arg(long, default_value_t = 20)]
        episodes: usize,
    },
    /// Zero-shot evaluation with a different ball mass.
    Generalize {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Ball mass override, kg.
        #[arg(long, default_value_t = 0.005)]
        ball_mass: f64,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
    },
    /// State-streaming latency benchmark (binary codec vs verbose baseline).
    LatencyBench {
        #[arg(long, default_value_t = 200.0)]
        rate: f64,
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        /// Transport: loopback or udp.
        #[arg(long, default_value = "loopback")]
        transport: String,
        /// Inject the scripted 1% drop schedule.
        #[arg(long)]
        drops: bool,
    },
    /// Run the analytic physics suite and print pass/fail lines.
    PhysicsCheck,
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => ScenarioConfig::sim(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let ctx = RunContext::new(cli.out.clone(), cli.deterministic);
    match &cli.command {
        Command::Init { path, preset } => {
            harness::run_init(path, preset)?;
            println!("wrote {preset} preset to {}", path.display());
        }
        Command::Train => {
            let config = load_config(&cli)?;
            let artifacts = harness::run_train(&config, &ctx)?;
            println!(
                "trained {} frames over {} iterations; best eval hits {:.2}",
                artifacts.result.frames,
                artifacts.result.curve.len(),
                artifacts.result.best_eval_hits.max(0.0),
            );
            println!("final checkpoint: {}", artifacts.final_checkpoint.display());
        }
        Command::Eval {
            checkpoint,
            mbpp,
            episodes,
            height,
            trajectory,
        } => {
            let config = load_config(&cli)?;
            let source = match (checkpoint, mbpp) {
                (Some(path), false) => PolicySource::Checkpoint(path.clone()),
                (None, true) => PolicySource::Mbpp,
                _ => bail!("pass exactly one of --checkpoint PATH or --mbpp"),
            };
            let report = harness::run_eval(&config, &source, *episodes, *height, &ctx)?;
            println!(
                "episodes {}  hits mean {:.2}  std {:.2}  max {}  min {}  (config {})",
                report.episodes.len(),
                report.mean_hits(),
                report.std_hits(),
                report.max_hits(),
                report.min_hits(),
                &report.config_hash[..12],
            );
            if *trajectory {
                if let Some(path) = checkpoint {
                    let policy = jugglesim::ppo::load_checkpoint(path)?;
                    let traj_path = ctx.out_dir.join("trajectory.csv");
                    let steps =
                        harness::log_trajectory(&policy, &config, config.seed, *height, &traj_path)?;
                    println!("trajectory: {} steps -> {}", steps, traj_path.display());
                }
            }
        }
        Command::Compare {
            checkpoint,
            heights,
            episodes,
        } => {
            let config = load_config(&cli)?;
            let heights = heights.clone().unwrap_or_else(|| SWEEP_HEIGHTS.to_vec());
            let report = harness::run_compare(&config, checkpoint, &heights, *episodes, &ctx)?;
            for row in &report.rows {
                println!(
                    "height {:>4.1}  {:4}  mean {:>7.2}  std {:>6.2}  max {:>4}  min {:>4}",
                    row.height, row.method, row.mean, row.std, row.max, row.min
                );
            }
        }
        Command::Ablate { toggle, episodes } => {
            let config = load_config(&cli)?;
            let toggles = toggle
                .clone()
                .unwrap_or_else(|| ABLATION_TOGGLES.iter().map(|s| s.to_string()).collect());
            let report = harness::run_ablate(&config, &toggles, *episodes, &ctx)?;
            for row in &report.rows {
                println!("{:16} mean {:>7.2}  std {:>6.2}", row.variant, row.mean, row.std);
            }
        }
        Command::Generalize {
            checkpoint,
            ball_mass,
            episodes,
        } => {
            let config = load_config(&cli)?;
            let report =
                harness::run_generalize(&config, checkpoint, *ball_mass, *episodes, &ctx)?;
            println!(
                "ball mass {} kg: hits mean {:.2}  std {:.2}  max {}  min {}",
                ball_mass,
                report.mean_hits(),
                report.std_hits(),
                report.max_hits(),
                report.min_hits(),
            );
        }
        Command::LatencyBench {
            rate,
            duration,
            transport,
            drops,
        } => {
            let transport = match transport.as_str() {
                "loopback" => TransportKind::Loopback,
                "udp" => TransportKind::Udp,
                other => bail!("unknown transport '{other}' (loopback or udp)"),
            };
            let artifacts = harness::run_latency_bench(*rate, *duration, transport, *drops, &ctx)?;
            for report in [&artifacts.lcp, &artifacts.verbose] {
                println!(
                    "{:8} frames {}/{}  bytes/frame {:.1}  median latency {:.1} us  median staleness {:.1} us  gaps {}  decode errors {}",
                    report.codec.as_str(),
                    report.frames_received,
                    report.frames_published,
                    report.mean_frame_bytes,
                    report.median_latency_ns() as f64 / 1e3,
                    report.median_staleness_ns() as f64 / 1e3,
                    report.seq_gaps,
                    report.decode_errors,
                );
            }
        }
        Command::PhysicsCheck => {
            let config = load_config(&cli)?;
            let report = run_physics_check(&config);
            report.print();
            if !report.all_pass() {
                bail!("physics checks failed");
            }
        }
    }
    Ok(())
}
