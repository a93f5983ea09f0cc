mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use config::{Config, Source};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: segmat::io::MeshIoError },
    #[error("{0}")]
    Invalid(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invariant(_) => 3,
            CliError::Output { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "segmat", version, about = "Shape segmentation on the medial axis transform")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment a surface mesh given its medial mesh.
    Segment(SegmentArgs),
    /// Simplify a medial mesh into a structured one.
    Simplify(SimplifyArgs),
    /// Compare predicted face labels against ground truth.
    Eval(EvalArgs),
    /// Fit one oriented box per segment and score the abstraction.
    Abstract(AbstractArgs),
    /// Segment a meso-skeleton point cloud.
    Cloud(CloudArgs),
}

/// Parameter sources shared by all pipeline commands.
#[derive(Debug, Args, Default)]
pub struct ParamArgs {
    /// key=value parameter file; defaults to $SEGMAT_CONFIG when set.
    #[arg(long, env = "SEGMAT_CONFIG", global = true)]
    config: Option<PathBuf>,
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    merge_tau: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    target_error: Option<f64>,
    /// Neighbors per skeleton point.
    #[arg(long)]
    knn: Option<usize>,
    #[arg(long)]
    no_swallowing: bool,
    #[arg(long, visible_alias = "merge-off")]
    no_merging: bool,
    #[arg(long)]
    no_graphcut: bool,
    /// Any parameter as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ParamArgs {
    pub fn resolve(&self) -> Result<Config, CliError> {
        let mut c = Config::default();
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        let numbers = [
            ("delta0", self.delta0),
            ("eta", self.eta),
            ("alpha", self.alpha),
            ("lambda", self.lambda),
            ("merge_tau", self.merge_tau),
            ("omega", self.omega),
            ("target_error", self.target_error),
            ("knn", self.knn.map(|k| k as f64)),
        ];
        for (key, v) in numbers {
            if let Some(v) = v {
                c.set(key, &v.to_string(), Source::Cli)?;
            }
        }
        for (key, off) in [("swallowing", self.no_swallowing), ("merging", self.no_merging), ("graph_cut", self.no_graphcut)]
        {
            if off {
                c.set(key, "false", Source::Cli)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Config(format!("--set {kv:?}: expected KEY=VALUE")))?;
            c.set(k.trim(), v, Source::Cli)?;
        }
        c.params()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Surface mesh (.off or .obj).
    #[arg(long, required_unless_present = "batch")]
    mesh: Option<PathBuf>,
    /// Base medial mesh (.ma).
    #[arg(long, required_unless_present = "batch")]
    mat: Option<PathBuf>,
    /// Structured medial mesh; simplified from the base MAT when absent.
    #[arg(long)]
    structured_mat: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,
    /// Output file stem; defaults to the mesh file stem.
    #[arg(long)]
    name: Option<String>,
    /// Also write the structured MAT as `<stem>.smat.ma`.
    #[arg(long)]
    emit_structured_mat: bool,
    /// File listing one shape per line: `mesh mat [structured_mat]`.
    #[arg(long, conflicts_with_all = ["mesh", "mat", "structured_mat", "name"])]
    batch: Option<PathBuf>,
    /// Shapes processed concurrently in batch mode.
    #[arg(long, short, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct SimplifyArgs {
    #[arg(long)]
    mat: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth label file, or a directory of them (results are averaged).
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    report: ReportFormat,
}

#[derive(Debug, Args)]
pub struct AbstractArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Write the boxes as one surface mesh (.off or .obj).
    #[arg(long)]
    boxes_out: Option<PathBuf>,
    #[arg(long, default_value_t = segmat::abstraction::VOXEL_RESOLUTION)]
    resolution: usize,
    #[arg(long, default_value_t = segmat::abstraction::SAMPLE_COUNT)]
    samples: usize,
    #[arg(long, default_value_t = segmat::abstraction::SAMPLING_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
pub struct CloudArgs {
    /// Skeleton points, `x y z` per line.
    #[arg(long)]
    skeleton: PathBuf,
    /// Raw point cloud the radii are measured against.
    #[arg(long)]
    cloud: PathBuf,
    /// Label file for the skeleton points.
    #[arg(long, short)]
    out: PathBuf,
    /// Also label every raw point by its nearest skeleton point.
    #[arg(long)]
    cloud_labels: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = std::panic::catch_unwind(|| match &cli.command {
        Command::Segment(a) => commands::segment(a),
        Command::Simplify(a) => commands::simplify(a),
        Command::Eval(a) => commands::eval(a),
        Command::Abstract(a) => commands::abstract_boxes(a),
        Command::Cloud(a) => commands::cloud(a),
    });
    match run {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(e)) => {
            eprintln!("segmat: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(3),
    }
}
