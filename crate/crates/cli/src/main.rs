//! `frontlab`: singular curves, Gauss–Bonnet reports, zigzag numbers and
//! hypersurface scans for wave fronts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod input;

#[derive(Parser, Debug)]
#[command(name = "frontlab", version, about = "Curvature and singularities of wave fronts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List gallery fronts, plane fronts and their parameters.
    Gallery(Common),
    /// Trace and classify the singular set; export curves and curvature fields.
    Analyze(Common),
    /// Gauss–Bonnet report for a compact or complete front.
    Gb(Common),
    /// Zigzag word and rotation number of a plane front or a null loop.
    Zigzag(Common),
    /// Singular-set scan of a hypersurface front in R⁴.
    Hyper(HyperArgs),
    /// Check unit normal, orthogonality and the front condition on a grid.
    Validate(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Gallery name or path to a TOML description.
    #[arg(long)]
    pub surface: Option<String>,
    /// Parameter override, `name=value`; repeatable.
    #[arg(long = "param", value_name = "K=V", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// Grid resolution (cells or quadrature nodes per axis).
    #[arg(long)]
    pub grid: Option<usize>,
    /// |λ| tolerance along traced curves, relative to max |λ|.
    #[arg(long)]
    pub tol_trace: Option<f64>,
    /// Threshold on the normalized det(γ′, η) for peaks.
    #[arg(long)]
    pub tol_class: Option<f64>,
    /// Write files here instead of printing to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Null loop description (TOML) for `zigzag` on a surface front.
    #[arg(long = "loop")]
    pub loop_file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct HyperArgs {
    #[command(flatten)]
    pub common: Common,
    /// Run the boundedness scan over a, b, c ∈ {−1, 0, 1} instead of one report.
    #[arg(long)]
    pub scan: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(format!("empty parameter name in `{s}`"));
    }
    let v: f64 = v.trim().parse().map_err(|_| format!("`{}` is not a number", v.trim()))?;
    Ok((k.to_string(), v))
}

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Contract(String),
    Inapplicable(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Contract(_) => 2,
            Failure::Inapplicable(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Contract(m) | Failure::Inapplicable(m) => m,
        }
    }
}

fn threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("FRONTLAB_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("FRONTLAB_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let run = threads().and_then(|()| match &cli.command {
        Command::Gallery(c) => commands::gallery(c),
        Command::Analyze(c) => commands::analyze(c),
        Command::Gb(c) => commands::gb(c),
        Command::Zigzag(c) => commands::zigzag(c),
        Command::Hyper(h) => commands::hyper(h),
        Command::Validate(c) => commands::validate(c),
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
