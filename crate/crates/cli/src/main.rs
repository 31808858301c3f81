//! `pjt`: discrete Zakharov-Shabat spectra from the command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use pjt_core::bench::{run_bench, write_bench, Method};
use pjt_core::export::{arg_field, write_arg_field, write_boundary, write_trajectories};
use pjt_core::pipeline::{run_ci_detailed, run_pjt_detailed, SolverConfig, Spectrum, Status};
use pjt_core::presets::{Preset, DEFAULT_INTERVALS};
use pjt_core::refine::RefineMethod;
use pjt_core::signal::{load_signal, SampledSignal};

/// Exit code for a spectrum that is not `complete`.
const EXIT_INCOMPLETE: u8 = 3;
/// Exit code for an unreadable or invalid config file.
const EXIT_CONFIG: u8 = 23;

#[derive(Parser)]
#[command(name = "pjt", version, about = "Discrete spectrum of the Zakharov-Shabat problem by phase-jump tracking")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the discrete spectrum of one signal.
    Spectrum(SpectrumArgs),
    /// Time the solvers over several grid sizes.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolverFlags {
    /// TOML file with solver settings; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Refinement: muller, newton or none.
    #[arg(long)]
    refine: Option<String>,
    /// Tracking step constant C_h.
    #[arg(long)]
    ch: Option<f64>,
    /// Spectral power ratio C_q bounding the real parts.
    #[arg(long)]
    cq: Option<f64>,
    /// Refinement step tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Minimum argument difference counted as a jump.
    #[arg(long = "jump-threshold")]
    jump_threshold: Option<f64>,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["preset", "signal"])))]
struct SpectrumArgs {
    /// Built-in signal, e.g. `oversoliton:A=5,C=0`, `rectangle:A=10,T=1`,
    /// `double_eigenvalue:xi=1,eta=1,q11=1,q10=1`, `zero`.
    #[arg(long)]
    preset: Option<String>,
    /// CSV signal file with columns `t,re,im`.
    #[arg(long)]
    signal: Option<PathBuf>,
    /// Number of grid intervals for presets.
    #[arg(long = "M")]
    intervals: Option<usize>,
    /// Grid half-width for presets.
    #[arg(long = "T")]
    half_width: Option<f64>,
    /// Solver: `pjt` or `ci` (contour-integral baseline).
    #[arg(long, default_value = "pjt")]
    method: String,
    #[command(flatten)]
    solver: SolverFlags,
    /// JSON output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of the boundary argument samples (`re,im,arg,side`).
    #[arg(long = "dump-boundary")]
    dump_boundary: Option<PathBuf>,
    /// CSV of the tracked paths (`trajectory,step,re,im`).
    #[arg(long = "dump-trajectories")]
    dump_trajectories: Option<PathBuf>,
    /// CSV raster of `arg a` over the search domain (`re,im,arg`).
    #[arg(long = "dump-arg-field")]
    dump_arg_field: Option<PathBuf>,
    /// Raster size of the argument field as `NXxNY`.
    #[arg(long = "arg-field-size", default_value = "200x100")]
    arg_field_size: String,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated methods.
    #[arg(long, default_value = "pjt,ci")]
    methods: String,
    /// Comma-separated grid sizes; `2^k` is accepted.
    #[arg(long = "M-list", default_value = "2^10,2^11,2^12,2^13,2^14")]
    m_list: String,
    /// Built-in signal to benchmark.
    #[arg(long, default_value = "oversoliton:A=5,C=0")]
    preset: String,
    #[command(flatten)]
    solver: SolverFlags,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error carrying the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = error
            .chain()
            .find_map(|e| e.downcast_ref::<pjt_core::Error>())
            .map_or(1, |e| e.exit_code() as u8);
        Failure { code, error }
    }
}

impl From<pjt_core::Error> for Failure {
    fn from(e: pjt_core::Error) -> Self {
        Failure::from(anyhow::Error::new(e))
    }
}

fn config_failure(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_CONFIG, error }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Defaults (tuned for the preset), then the config file, then flags.
fn solver_config(flags: &SolverFlags, preset: Option<&Preset>) -> Result<SolverConfig, Failure> {
    let base = preset.map_or_else(SolverConfig::default, |p| p.tune(SolverConfig::default()));
    let mut cfg = base;
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(config_failure)?;
        let table: toml::Table = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))
            .map_err(config_failure)?;
        let mut value = serde_json::to_value(base).expect("config serializes");
        merge(&mut value, serde_json::to_value(table).expect("toml converts to json"));
        cfg = serde_json::from_value(value)
            .with_context(|| format!("invalid config {}", path.display()))
            .map_err(config_failure)?;
    }
    if let Some(m) = &flags.refine {
        cfg.refine.method = match m.to_ascii_lowercase().as_str() {
            "muller" => RefineMethod::Muller,
            "newton" => RefineMethod::Newton,
            "none" => RefineMethod::None,
            other => return Err(pjt_core::Error::InvalidParameter(format!("unknown refinement `{other}`")).into()),
        };
    }
    if let Some(v) = flags.ch {
        cfg.ch = v;
    }
    if let Some(v) = flags.cq {
        cfg.cq = v;
    }
    if let Some(v) = flags.tol {
        cfg.refine.tolerance = v;
    }
    if let Some(v) = flags.jump_threshold {
        cfg.jump_threshold = v;
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &SolverConfig) -> Result<(), pjt_core::Error> {
    let bad = |what: &str, v: f64| pjt_core::Error::InvalidParameter(format!("{what} must be positive and finite, got {v}"));
    for (name, v) in [("ch", cfg.ch), ("cq", cfg.cq), ("tol", cfg.refine.tolerance), ("jump-threshold", cfg.jump_threshold)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(bad(name, v));
        }
    }
    if cfg.ch >= 1.0 {
        return Err(pjt_core::Error::InvalidParameter(format!("ch must be below 1, got {}", cfg.ch)));
    }
    Ok(())
}

fn parse_size(s: &str) -> Result<usize, pjt_core::Error> {
    let s = s.trim();
    let parsed = match s.split_once('^') {
        Some((b, e)) => match (b.trim().parse::<usize>(), e.trim().parse::<u32>()) {
            (Ok(b), Ok(e)) => b.checked_pow(e),
            _ => None,
        },
        None => s.parse().ok(),
    };
    parsed.ok_or_else(|| pjt_core::Error::InvalidParameter(format!("bad grid size `{s}`")))
}

fn parse_raster(s: &str) -> Result<(usize, usize), pjt_core::Error> {
    let bad = || pjt_core::Error::InvalidParameter(format!("raster size `{s}` is not NXxNY"));
    let (x, y) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).map_err(pjt_core::Error::Io).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

#[derive(Serialize)]
struct Echo<'a> {
    input: String,
    method: &'a str,
    #[serde(rename = "M")]
    intervals: usize,
    #[serde(rename = "T")]
    half_width: f64,
    solver: &'a SolverConfig,
}

#[derive(Serialize)]
struct Output<'a> {
    #[serde(flatten)]
    spectrum: &'a Spectrum,
    config_echo: Echo<'a>,
}

fn load_input(args: &SpectrumArgs) -> Result<(SampledSignal, Option<Preset>, String), Failure> {
    if let Some(path) = &args.signal {
        if args.intervals.is_some() || args.half_width.is_some() {
            log::warn!("--M and --T are ignored for file input");
        }
        let signal = load_signal(path)?;
        return Ok((signal, None, format!("file:{}", path.display())));
    }
    let preset: Preset = args.preset.as_deref().expect("clap enforces an input").parse()?;
    let signal = preset.signal(args.half_width, args.intervals.unwrap_or(DEFAULT_INTERVALS))?;
    Ok((signal, Some(preset), preset.to_string()))
}

fn spectrum(args: SpectrumArgs) -> Result<u8, Failure> {
    let method: Method = args.method.parse()?;
    let (signal, preset, input) = load_input(&args)?;
    let mut cfg = solver_config(&args.solver, preset.as_ref())?;
    if args.dump_trajectories.is_some() {
        cfg.record_paths = true;
    }
    let raster = args.dump_arg_field.as_ref().map(|_| parse_raster(&args.arg_field_size)).transpose()?;

    let result = match method {
        Method::Pjt => {
            let run = run_pjt_detailed(&signal, &cfg)?;
            if let Some(p) = &args.dump_boundary {
                write_boundary(&run.boundary, create(p)?)?;
            }
            if let Some(p) = &args.dump_trajectories {
                write_trajectories(&run.trajectories, create(p)?)?;
            }
            run.spectrum
        }
        Method::Ci => {
            if args.dump_boundary.is_some() || args.dump_trajectories.is_some() {
                log::warn!("boundary and trajectory dumps are only produced by --method pjt");
            }
            let run = run_ci_detailed(&signal, &cfg)?;
            log::info!("contour integrals: winding {}, {} boxes", run.winding, run.ci.boxes.len());
            run.spectrum
        }
    };
    if let (Some(p), Some((nx, ny))) = (&args.dump_arg_field, raster) {
        write_arg_field(&arg_field(&signal, &cfg, nx, ny)?, create(p)?)?;
    }

    let output = Output {
        spectrum: &result,
        config_echo: Echo {
            input,
            method: &args.method,
            intervals: signal.intervals(),
            half_width: signal.half_width(),
            solver: &cfg,
        },
    };
    let json = serde_json::to_string_pretty(&output).context("serializing output")?;
    match &args.out {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{json}").map_err(pjt_core::Error::Io)?;
            w.flush().map_err(pjt_core::Error::Io)?;
        }
        None => println!("{json}"),
    }
    if result.status != Status::Complete {
        log::warn!("spectrum status: {:?}", result.status);
        return Ok(EXIT_INCOMPLETE);
    }
    Ok(0)
}

fn bench(args: BenchArgs) -> Result<u8, Failure> {
    let preset: Preset = args.preset.parse()?;
    let cfg = solver_config(&args.solver, None)?;
    let methods: Vec<Method> = args.methods.split(',').map(str::parse).collect::<Result<_, _>>()?;
    let sizes: Vec<usize> = args.m_list.split(',').map(parse_size).collect::<Result<_, _>>()?;
    if methods.is_empty() || sizes.is_empty() {
        return Err(pjt_core::Error::InvalidParameter("bench needs at least one method and one grid size".into()).into());
    }
    let rows = run_bench(&preset, &methods, &sizes, &cfg);
    match &args.out {
        Some(p) => write_bench(&rows, create(p)?)?,
        None => write_bench(&rows, io::stdout().lock())?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Spectrum(a) => spectrum(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

