//! Command implementations behind the `qvd` binary.
//!
//! Every command writes its artifacts plus a `report.json` into `--out` and
//! maps errors to stable exit codes (see [`QvdError::exit_code`]).

mod commands;
pub mod footprint;
mod report;

pub use commands::{cmd_analyze, cmd_calibrate, cmd_footprint, cmd_gen, cmd_report, cmd_scri, GenSpec};
pub use report::{merge_reports, render_markdown, ReportTable, RunReport, REPORT_FILE, REPORT_SCHEMA};

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{QvdError, Result};

#[derive(Debug, Parser)]
#[command(name = "qvd", version, about = "Quantization calibration and analysis on synthetic diffusion features")]
pub struct Cli {
    #[command(flatten)]
    pub global: Globals,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Globals {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Output directory for artifacts and report.json.
    #[arg(long, global = true, default_value = "qvd-out")]
    pub out: PathBuf,
    /// Print the run report as JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic data from a spec (defaults when no file is given).
    Gen(GenArgs),
    /// Calibrate quantizer parameters (minmax, mse or htdq search).
    Calibrate(CalibrateArgs),
    /// Coverage, temporal discriminability or level-occupancy analysis.
    Analyze(AnalyzeArgs),
    /// Search the range-integration top value t and fold it into a block.
    Scri(ScriArgs),
    /// Model size and bit operations for given bit-widths.
    Footprint(FootprintArgs),
    /// Merge run reports into one table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Skewed,
    Interchannel,
    ToyBlock,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    /// JSON spec with a "kind" tag; overrides --kind.
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "skewed")]
    pub kind: GenKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Minmax,
    Mse,
    Htdq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GranularityArg {
    Tensor,
    Channel,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CalibrateArgs {
    /// QVDT tensor or trajectory directory.
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long, default_value_t = 8)]
    pub bits: u32,
    /// MinMax only.
    #[arg(long, value_enum, default_value = "tensor")]
    pub granularity: GranularityArg,
    /// Channel axis for per-channel MinMax; defaults to the tensor's tag.
    #[arg(long)]
    pub axis: Option<usize>,
    #[arg(long, default_value_t = crate::temporal::DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = 0.05)]
    pub s_step: f64,
    #[arg(long, default_value_t = 16)]
    pub beta_grid: usize,
    #[arg(long, default_value_t = crate::temporal::DEFAULT_EPS)]
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Coverage,
    Tdscore,
    Levels,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    /// QVDT tensor or trajectory directory.
    pub input: PathBuf,
    #[arg(long = "analysis", value_enum, value_delimiter = ',', required = true)]
    pub analyses: Vec<Analysis>,
    /// Params JSON from `calibrate`; required for levels.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub axis: Option<usize>,
    #[arg(long, default_value_t = crate::temporal::DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = crate::temporal::DEFAULT_EPS)]
    pub eps: f64,
    /// Central fraction of values considered by levels.
    #[arg(long, default_value_t = 0.9)]
    pub fraction: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScriArgs {
    /// Block JSON (weight referenced as a QVDT file).
    pub block: PathBuf,
    /// Calibration input, rows x channels.
    pub calib: PathBuf,
    #[arg(long = "bits", default_value_t = 8)]
    pub act_bits: u32,
    #[arg(long, default_value_t = 8)]
    pub weight_bits: u32,
    #[arg(long, default_value_t = crate::scri::DEFAULT_GRID_SIZE)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FootprintArgs {
    pub spec: PathBuf,
    /// Overrides the spec's w_bits.
    #[arg(long)]
    pub w_bits: Option<u32>,
    /// Overrides the spec's a_bits.
    #[arg(long)]
    pub a_bits: Option<u32>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// report.json files or run directories.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

/// Runs a parsed command, writes its report and returns it.
pub fn execute(cli: &Cli) -> Result<RunReport> {
    let g = &cli.global;
    std::fs::create_dir_all(&g.out)?;
    let start = Instant::now();
    let mut report = match &cli.command {
        Command::Gen(a) => cmd_gen(a, g)?,
        Command::Calibrate(a) => cmd_calibrate(a, g)?,
        Command::Analyze(a) => cmd_analyze(a, g)?,
        Command::Scri(a) => cmd_scri(a, g)?,
        Command::Footprint(a) => cmd_footprint(a, g)?,
        Command::Report(a) => cmd_report(a, g)?,
    };
    report.duration_ms = start.elapsed().as_millis() as u64;
    report.write(&g.out)?;
    Ok(report)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let text = if cli.global.json {
                match serde_json::to_string_pretty(&report) {
                    Ok(s) => s + "\n",
                    Err(e) => return fail(&e.into()),
                }
            } else {
                report.summary()
            };
            // a closed pipe is not a failure of the run
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            0
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &QvdError) -> i32 {
    eprintln!("qvd: {e}");
    e.exit_code()
}
