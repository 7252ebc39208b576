use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use moseg::pipeline::{self, PipelineConfig, PipelineError};
use moseg::synth::SynthParams;

#[derive(Parser)]
#[command(
    name = "moseg",
    version,
    about = "Trajectory-based motion segmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; relative paths resolve against its directory.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides a config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads (falls back to MOSEG_JOBS, then all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Flows to trajectories (TRJ1).
    Track(Common),
    /// Trajectories and flows to a graph with translational costs (GRF1).
    Graph(Common),
    /// Trains the Siamese GRU on gt-labeled trajectory pairs (GRUP1).
    GruTrain(Common),
    /// Replaces graph costs with GRU costs (GRF1).
    GruCost(Common),
    /// Multicut of the costed graph to trajectory labels (SPL1).
    Cluster(Common),
    /// Sparse labels to dense per-frame label maps.
    Densify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma_blur: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// binary or multi
        #[arg(long)]
        label_mode: Option<String>,
    },
    /// Scores dense maps against gt; prints `metric=value` lines.
    Eval(Common),
    /// Writes a synthetic sequence and a config for it.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Number of moving rectangles (0 to 2).
        #[arg(long, default_value_t = 2)]
        objects: usize,
        #[arg(long, default_value = "synth")]
        seq: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Runs every stage.
    Pipeline(Common),
}

fn cli_err(kind: &'static str, msg: impl Into<String>) -> PipelineError {
    PipelineError::new("cli", kind, msg)
}

fn config(common: &Common, extra: &[(&str, String)]) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::parse("", Path::new("."))?,
    };
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| cli_err("config", format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    for (k, v) in extra {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads(jobs: Option<usize>) -> Result<(), PipelineError> {
    let jobs = match jobs {
        Some(j) => Some(j),
        None => match std::env::var("MOSEG_JOBS") {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| cli_err("config", format!("MOSEG_JOBS: invalid value '{v}'")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(j) = jobs {
        if j == 0 {
            return Err(cli_err("config", "--jobs must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| cli_err("config", e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let (common, extra) = match &cli.command {
        Command::Synth {
            out,
            objects,
            seq,
            seed,
        } => {
            if *objects > 2 {
                return Err(PipelineError::new(
                    "synth",
                    "config",
                    "--objects must be 0, 1 or 2",
                ));
            }
            let params = SynthParams {
                seed: *seed,
                ..SynthParams::two_rects(*objects)
            };
            let path = pipeline::write_synth_dataset(out, &params, seq)?;
            println!("{}", path.display());
            return Ok(());
        }
        Command::Densify {
            common,
            sigma_blur,
            lambda,
            label_mode,
        } => {
            let mut extra = Vec::new();
            if let Some(s) = sigma_blur {
                extra.push(("sigma_blur", s.to_string()));
            }
            if let Some(l) = lambda {
                extra.push(("lambda", l.to_string()));
            }
            if let Some(m) = label_mode {
                extra.push(("label_mode", m.clone()));
            }
            (common, extra)
        }
        Command::Track(c)
        | Command::Graph(c)
        | Command::GruTrain(c)
        | Command::GruCost(c)
        | Command::Cluster(c)
        | Command::Eval(c)
        | Command::Pipeline(c) => (c, Vec::new()),
    };
    init_threads(common.jobs)?;
    let cfg = config(common, &extra)?;
    match cli.command {
        Command::Track(_) => pipeline::run_track(&cfg).map(drop),
        Command::Graph(_) => pipeline::run_graph(&cfg).map(drop),
        Command::GruTrain(_) => pipeline::run_gru_train(&cfg).map(drop),
        Command::GruCost(_) => pipeline::run_gru_cost(&cfg).map(drop),
        Command::Cluster(_) => pipeline::run_cluster(&cfg).map(drop),
        Command::Densify { .. } => pipeline::run_densify(&cfg),
        Command::Eval(_) => {
            print!("{}", pipeline::run_eval(&cfg)?.to_kv());
            Ok(())
        }
        Command::Pipeline(_) => {
            if let Some(report) = pipeline::run_pipeline(&cfg)? {
                print!("{}", report.to_kv());
            }
            Ok(())
        }
        Command::Synth { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error {e}");
            ExitCode::FAILURE
        }
    }
}
