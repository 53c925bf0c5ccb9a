//! Command-line surface: `mp`, `synth` and `eval`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::eval::{evaluate, evaluate_labeled, EvalReport};
use crate::io::{self, RunManifest};
use crate::profile::{mp_fast, MatrixProfile};
use crate::series::WindowConfig;
use crate::synthesis::{synthesize, InitMode, SynthesisConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_NUMERICAL_ABORT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "mpanon",
    version,
    about = "Matrix Profile preserving time series anonymization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the Matrix Profile and its index.
    Mp(MpArgs),
    /// Synthesize an anonymized substitute series.
    Synth(SynthArgs),
    /// Compare an original and a synthesized series; prints JSON.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct MpArgs {
    pub input: PathBuf,
    #[arg(short = 'm', long = "window")]
    pub window: usize,
    /// Defaults to ceil(window / 4).
    #[arg(long)]
    pub exclusion: Option<usize>,
    /// Writes `<out>.mp.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitFlag {
    Noise,
    Smooth,
}

impl From<InitFlag> for InitMode {
    fn from(f: InitFlag) -> Self {
        match f {
            InitFlag::Noise => InitMode::Noise,
            InitFlag::Smooth => InitMode::SmoothedNoise,
        }
    }
}

/// Flags override `--config`, which overrides the built-in defaults.
#[derive(Debug, Args, Default)]
pub struct SynthArgs {
    pub input: PathBuf,
    #[arg(short = 'm', long = "window")]
    pub window: Option<usize>,
    #[arg(long)]
    pub exclusion: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long)]
    pub w_local: Option<f64>,
    #[arg(long)]
    pub w_distance: Option<f64>,
    #[arg(long)]
    pub w_identity: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long, value_enum)]
    pub init: Option<InitFlag>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// JSON synthesis config, or a manifest from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Writes `<out>.synth.csv`, `<out>.trace.csv` and `<out>.manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub original: PathBuf,
    pub synth: PathBuf,
    #[arg(short = 'm', long = "window")]
    pub window: usize,
    #[arg(long)]
    pub exclusion: Option<usize>,
    /// One 0/1 label per timestep; adds the detector AUCs to the report.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

pub fn output_path(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn window_config(m: usize, exclusion: Option<usize>) -> WindowConfig {
    let cfg = WindowConfig::new(m);
    match exclusion {
        Some(r) => cfg.with_exclusion(r),
        None => cfg,
    }
}

pub fn cmd_mp(args: &MpArgs) -> Result<(PathBuf, MatrixProfile)> {
    let ts = io::read_series(&args.input)?;
    let mp = mp_fast(&ts, &window_config(args.window, args.exclusion))?;
    let path = output_path(&args.out, ".mp.csv");
    io::write_profile(&path, &mp)?;
    Ok((path, mp))
}

/// Reads a config file holding either a bare [`SynthesisConfig`] or a
/// [`RunManifest`].
pub fn load_config(path: &Path) -> Result<(SynthesisConfig, Option<RunManifest>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::invalid(format!("config {} is not JSON: {e}", path.display())))?;
    if value.get("input_sha256").is_some() {
        let manifest: RunManifest = serde_json::from_value(value)
            .map_err(|e| Error::invalid(format!("bad manifest {}: {e}", path.display())))?;
        Ok((manifest.config.clone(), Some(manifest)))
    } else {
        let cfg = serde_json::from_value(value)
            .map_err(|e| Error::invalid(format!("bad config {}: {e}", path.display())))?;
        Ok((cfg, None))
    }
}

/// Layers flags over the config file (if any) over the defaults.
pub fn resolve_config(args: &SynthArgs) -> Result<(SynthesisConfig, Option<RunManifest>)> {
    let (mut cfg, manifest) = match &args.config {
        Some(path) => load_config(path)?,
        None => (SynthesisConfig::default(), None),
    };
    if let Some(m) = args.window {
        if m != cfg.window {
            // derived defaults follow the new window unless set explicitly below
            if manifest.is_some() {
                cfg.exclusion_radius = None;
                cfg.smoothing_width = None;
            }
            cfg.window = m;
        }
    }
    if let Some(r) = args.exclusion {
        cfg.exclusion_radius = Some(r);
    }
    if let Some(v) = args.iters {
        cfg.iterations = v;
    }
    if let Some(v) = args.batch {
        cfg.batch_size = v;
    }
    if let Some(v) = args.step_size {
        cfg.step_size = v;
    }
    if let Some(v) = args.w_local {
        cfg.weights.w_local = v;
    }
    if let Some(v) = args.w_distance {
        cfg.weights.w_distance = v;
    }
    if let Some(v) = args.w_identity {
        cfg.weights.w_identity = v;
    }
    if let Some(v) = args.margin {
        cfg.weights.identity_margin = v;
    }
    if let Some(v) = args.init {
        cfg.init_mode = v.into();
    }
    if let Some(v) = args.seed {
        cfg.rng_seed = v;
    }
    if let Some(v) = args.checkpoint_every {
        cfg.checkpoint_every = v;
    }
    cfg.validate()?;
    Ok((cfg.resolved(), manifest))
}

#[derive(Debug, Clone)]
pub struct SynthOutputs {
    pub synth: PathBuf,
    pub trace: PathBuf,
    pub manifest: PathBuf,
}

pub fn cmd_synth(args: &SynthArgs) -> Result<SynthOutputs> {
    let (cfg, previous) = resolve_config(args)?;
    let bytes = std::fs::read(&args.input).map_err(|e| {
        Error::invalid(format!(
            "cannot read series file {}: {e}",
            args.input.display()
        ))
    })?;
    let checksum = io::sha256_hex(&bytes);
    if let Some(prev) = &previous {
        if prev.input_sha256 != checksum {
            eprintln!(
                "warning: input checksum {checksum} differs from the manifest's {}",
                prev.input_sha256
            );
        }
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::invalid(format!("{} is not UTF-8 text", args.input.display())))?;
    let ts = io::parse_series(&text)?;

    let outputs = SynthOutputs {
        synth: output_path(&args.out, ".synth.csv"),
        trace: output_path(&args.out, ".trace.csv"),
        manifest: output_path(&args.out, ".manifest.json"),
    };
    let started = io::unix_now();
    let (that, trace) = match synthesize(&ts, &cfg) {
        Ok(result) => result,
        Err(Error::NumericalAbort {
            iteration,
            components,
            partial_trace,
        }) => {
            io::write_trace(&outputs.trace, &partial_trace)?;
            return Err(Error::NumericalAbort {
                iteration,
                components,
                partial_trace,
            });
        }
        Err(e) => return Err(e),
    };
    io::write_series(&outputs.synth, &that)?;
    io::write_trace(&outputs.trace, &trace)?;
    RunManifest {
        tool_version: io::TOOL_VERSION.to_string(),
        input_path: args.input.display().to_string(),
        input_sha256: checksum,
        seed: cfg.rng_seed,
        config: cfg,
        started_unix: started,
        finished_unix: io::unix_now(),
    }
    .write(&outputs.manifest)?;
    Ok(outputs)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    let t = io::read_series(&args.original)?;
    let that = io::read_series(&args.synth)?;
    let cfg = window_config(args.window, args.exclusion);
    match &args.labels {
        Some(path) => evaluate_labeled(&t, &that, &io::read_labels(path)?, &cfg),
        None => evaluate(&t, &that, &cfg),
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NumericalAbort { .. } => EXIT_NUMERICAL_ABORT,
        Error::InvalidInput(_) | Error::Io(_) | Error::Json(_) => EXIT_INVALID_INPUT,
    }
}

/// Runs a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Mp(args) => cmd_mp(args).map(|(path, _)| eprintln!("wrote {}", path.display())),
        Command::Synth(args) => cmd_synth(args).map(|o| {
            eprintln!(
                "wrote {}, {}, {}",
                o.synth.display(),
                o.trace.display(),
                o.manifest.display()
            )
        }),
        Command::Eval(args) => cmd_eval(args).and_then(|report| {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
