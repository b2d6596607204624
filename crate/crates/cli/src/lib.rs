//! `graspmap` command-line front end.
//!
//! Every subcommand reads line-delimited JSON (or TOML for profiles and
//! manifests), calls the matching `graspmap-core` operation and writes one
//! JSON line per result. Data goes to `--out` or standard output; diagnostics
//! go to standard error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
pub mod formats;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable, malformed or inconsistent input.
    Input(anyhow::Error),
    /// A numerical operation could not produce a result.
    Numerical(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(e) | Failure::Numerical(e) => write!(f, "{e:#}"),
        }
    }
}

pub(crate) trait ResultExt<T> {
    fn input(self) -> Result<T, Failure>;
    fn numerical(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }

    fn numerical(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Numerical(e.into()))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "graspmap",
    version,
    about = "Human hand keypoints to robot grasp annotations",
    after_help = "Exit codes: 0 success, 1 input or usage error, 2 numerical failure.\n\
                  Angles are radians, positions meters, friction coefficients dimensionless."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Keypoint stream -> 20 human joint angles per frame.
    Angles(AnglesArgs),
    /// Human angle lines -> robot joint angles through a hand profile.
    Retarget(RetargetArgs),
    /// Fit one finger's mapping block from paired human/robot samples.
    FitMap(FitMapArgs),
    /// Robot joint lines -> actuator commands through the profile coupling.
    Actuate(ActuateArgs),
    /// Force-closure verdict per contact set.
    FcCheck(FcCheckArgs),
    /// Full pipeline: keypoint stream -> grasp records.
    Annotate(AnnotateArgs),
    /// Stratified object-level train/test split of a manifest.
    Split(SplitArgs),
    /// L1 errors between predicted and reference records (or keypoints).
    Eval(EvalArgs),
    /// Counts and closure pass rate over a record file.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Input file ("-" for standard input).
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long = "out", value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct JobsArgs {
    /// Worker threads for per-record processing. Output order never changes.
    #[arg(long, value_name = "N", default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
}

#[derive(Debug, Args)]
pub struct ClosureArgs {
    /// Friction coefficient for contacts that omit "mu" (dimensionless, >= 0).
    #[arg(long, value_name = "MU", value_parser = parse_mu)]
    pub mu: Option<f64>,
    /// Friction-cone edges per contact (>= 3).
    #[arg(long, value_name = "M", default_value_t = graspmap_core::force_closure::DEFAULT_EDGES,
          value_parser = parse_edges)]
    pub edges: usize,
    /// Closure margin tolerance (normalized wrench units, > 0).
    #[arg(long, value_name = "TOL", default_value_t = graspmap_core::force_closure::DEFAULT_TOL,
          value_parser = parse_tol)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct AnglesArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub jobs: JobsArgs,
}

#[derive(Debug, Args)]
pub struct RetargetArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Hand profile (TOML).
    #[arg(long, value_name = "PATH")]
    pub profile: PathBuf,
    #[command(flatten)]
    pub jobs: JobsArgs,
}

#[derive(Debug, Args)]
pub struct FitMapArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Tikhonov weight on the gains (rad^2, >= 0). 0 means plain least squares.
    #[arg(long, value_name = "LAMBDA", default_value_t = 0.0, value_parser = parse_nonneg)]
    pub ridge: f64,
}

#[derive(Debug, Args)]
pub struct ActuateArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Hand profile (TOML).
    #[arg(long, value_name = "PATH")]
    pub profile: PathBuf,
    #[command(flatten)]
    pub jobs: JobsArgs,
}

#[derive(Debug, Args)]
pub struct FcCheckArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub closure: ClosureArgs,
    #[command(flatten)]
    pub jobs: JobsArgs,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Hand profile (TOML).
    #[arg(long, value_name = "PATH")]
    pub profile: PathBuf,
    /// Object id written into every record.
    #[arg(long, value_name = "ID")]
    pub object: String,
    /// Object category written into every record.
    #[arg(long, value_name = "NAME")]
    pub category: String,
    /// Manifest (TOML) to check the object id and category against.
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    /// Contact sets keyed by grasp_id = frame_index. Frames without one are
    /// left unvalidated.
    #[arg(long, value_name = "PATH")]
    pub contacts: Option<PathBuf>,
    #[command(flatten)]
    pub closure: ClosureArgs,
    #[command(flatten)]
    pub jobs: JobsArgs,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Split seed (unsigned 64-bit integer).
    #[arg(long, value_name = "SEED", default_value_t = 0)]
    pub seed: u64,
    /// TRAIN:TEST proportions; defaults to the manifest's value, else 8.5:1.5.
    #[arg(long, value_name = "TRAIN:TEST")]
    pub ratio: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Reference file, paired with --in line by line.
    #[arg(long, value_name = "PATH")]
    pub truth: PathBuf,
    /// Weights on the rotation, translation and joint L1 terms (dimensionless).
    #[arg(long, value_name = "R,T,J", default_value = "1,1,1")]
    pub lambda: String,
    /// Compare keypoint streams (summed coordinate L1, meters) instead of records.
    #[arg(long)]
    pub keypoints: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Manifest (TOML) with the object inventory.
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
}

fn parse_mu(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("'{s}' is not a friction coefficient >= 0")),
    }
}

fn parse_edges(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 3 => Ok(v),
        _ => Err(format!("'{s}' is not an edge count >= 3")),
    }
}

fn parse_tol(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("'{s}' is not a tolerance > 0")),
    }
}

fn parse_nonneg(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("'{s}' is not a number >= 0")),
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("graspmap: {f}");
            f.exit_code()
        }
    }
}
