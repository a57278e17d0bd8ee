use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use stt_core::reward::MotionConfigOverrides;
use stt_cli::commands::{
    augment_stream, descriptor_from_reader, open_input, open_output, score_files, validate_stream, ScoreOptions,
};
use stt_cli::{serve, AppState, FlagOverrides, Settings};

#[derive(Parser)]
#[command(name = "stt", version, about = "Score, augment and validate trajectory-grounded reasoning traces")]
struct Cli {
    /// TOML configuration file; defaults to $STT_CONFIG when set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct RewardFlags {
    /// Lower bound of the temporal tolerance, in seconds.
    #[arg(long)]
    sigma_floor: Option<f64>,
    /// Temporal tolerance as a fraction of video duration.
    #[arg(long)]
    sigma_fraction: Option<f64>,
    /// Temporal gate for spatial credit, in seconds.
    #[arg(long)]
    gate: Option<f64>,
    #[command(flatten)]
    motion: MotionFlags,
}

#[derive(Args, Default)]
struct MotionFlags {
    /// Speed below which a track is stationary (diagonals per second).
    #[arg(long)]
    stationary_threshold: Option<f64>,
    /// Slow/moderate speed cutoff.
    #[arg(long)]
    slow_threshold: Option<f64>,
    /// Moderate/fast speed cutoff.
    #[arg(long)]
    fast_threshold: Option<f64>,
    /// Absolute log area ratio above which scale is not stable.
    #[arg(long)]
    scale_threshold: Option<f64>,
}

impl MotionFlags {
    fn overrides(&self) -> MotionConfigOverrides {
        MotionConfigOverrides {
            stationary_speed_threshold: self.stationary_threshold,
            slow_moderate_threshold: self.slow_threshold,
            moderate_fast_threshold: self.fast_threshold,
            scale_stable_log_threshold: self.scale_threshold,
        }
    }
}

impl RewardFlags {
    fn overrides(&self) -> FlagOverrides {
        FlagOverrides {
            sigma_floor: self.sigma_floor,
            sigma_fraction: self.sigma_fraction,
            gate: self.gate,
            motion: self.motion.overrides(),
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Score predictions against ground-truth records.
    Score {
        /// Predictions, one JSON object per line with `prediction`, optional
        /// `masked_prediction` and the join key.
        #[arg(long)]
        predictions: PathBuf,
        /// Ground-truth records, one per line.
        #[arg(long)]
        records: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "video_id")]
        join_key: String,
        /// Score unmatched or malformed prediction lines as zero instead of failing.
        #[arg(long)]
        permissive: bool,
        #[command(flatten)]
        reward: RewardFlags,
    },
    /// Densify annotations and add motion descriptors and tags.
    Augment {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Interpolation stride in seconds.
        #[arg(long)]
        stride: Option<f64>,
        /// Skip malformed records with a warning.
        #[arg(long)]
        permissive: bool,
        #[command(flatten)]
        motion: MotionFlags,
    },
    /// Check trace formatting; exits 1 if any trace is invalid.
    Validate {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Compute the motion descriptor of one track given as JSON.
    Descriptor {
        #[arg(long, short, default_value = "-")]
        input: PathBuf,
        #[command(flatten)]
        motion: MotionFlags,
    },
    /// Run the HTTP scoring service.
    Serve {
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        batch_cap: Option<usize>,
        #[command(flatten)]
        reward: RewardFlags,
    },
}

fn settings(path: Option<&std::path::Path>, flags: &FlagOverrides) -> Result<Settings> {
    let mut s = Settings::load(path)?;
    s.apply(flags);
    s.validate()?;
    Ok(s)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg_path = cli.config.as_deref();
    match cli.command {
        Command::Score {
            predictions,
            records,
            output,
            join_key,
            permissive,
            reward,
        } => {
            let s = settings(cfg_path, &reward.overrides())?;
            let mut out = open_output(output.as_deref())?;
            let opts = ScoreOptions { join_key, permissive };
            let summary = score_files(&predictions, &records, &mut out, &s.reward, &opts)?;
            eprintln!("{}", summary.render());
        }
        Command::Augment {
            input,
            output,
            stride,
            permissive,
            motion,
        } => {
            let flags = FlagOverrides {
                stride,
                motion: motion.overrides(),
                ..Default::default()
            };
            let s = settings(cfg_path, &flags)?;
            let mut out = open_output(output.as_deref())?;
            let n = augment_stream(open_input(&input)?, &mut out, &s.densify, s.motion(), permissive)?;
            eprintln!("augmented {n} records");
        }
        Command::Validate { input, output } => {
            let mut out = open_output(output.as_deref())?;
            let summary = validate_stream(open_input(&input)?, &mut out)?;
            eprintln!("{} traces, {} invalid", summary.traces, summary.invalid);
            if summary.invalid > 0 {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Descriptor { input, motion } => {
            let flags = FlagOverrides {
                motion: motion.overrides(),
                ..Default::default()
            };
            let s = settings(cfg_path, &flags)?;
            let d = descriptor_from_reader(open_input(&input)?, s.motion())?;
            println!("{}", serde_json::to_string(&d)?);
        }
        Command::Serve {
            host,
            port,
            batch_cap,
            reward,
        } => {
            let flags = FlagOverrides {
                host,
                port,
                batch_cap,
                ..reward.overrides()
            };
            let s = settings(cfg_path, &flags)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let addr = format!("{}:{}", s.server.host, s.server.port);
                let listener = tokio::net::TcpListener::bind(&addr)
                    .await
                    .with_context(|| format!("cannot bind {addr}"))?;
                let state = AppState::new(s.reward, s.server.batch_cap);
                log::info!("listening on {} (config {})", listener.local_addr()?, state.digest());
                serve(listener, state, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
