mod commands;
mod dot;
mod error;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

/// Train small GNNs on generated graphs and explain their predictions edge
/// by edge.
#[derive(Debug, Parser)]
#[command(name = "grex", version)]
pub struct Cli {
    /// Flat key = value file; flags win on conflict.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads. Outputs do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a benchmark dataset directory.
    GenData(GenData),
    /// Train a model and write its checkpoint and metrics.
    Train(Train),
    /// Explain one prediction.
    Explain(Explain),
    /// Score explainers on one or more trained models.
    Evaluate(Evaluate),
    /// Render an explanation as Graphviz DOT.
    ExportDot(ExportDot),
}

#[derive(Debug, Args)]
pub struct GenData {
    /// ba-shapes or rings
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<String>,
    /// Ring dataset size.
    #[arg(long)]
    pub num_graphs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Train {
    /// Dataset directory.
    #[arg(long)]
    pub data: Option<String>,
    /// gcn or ggnn
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<String>,
    /// Hidden widths, comma separated (GCN) or a single width (GGNN).
    #[arg(long)]
    pub hidden: Vec<String>,
    /// GGNN propagation steps.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct LimeFlags {
    /// LIME sample count.
    #[arg(long)]
    pub m: Option<usize>,
    /// LIME per-edge perturbation probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// LIME kernel width.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Lasso penalty.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// uniform or zero
    #[arg(long)]
    pub perturbation: Option<String>,
    /// weight or binary
    #[arg(long)]
    pub features: Option<String>,
}

#[derive(Debug, Args)]
pub struct Explain {
    #[arg(long)]
    pub checkpoint: Option<String>,
    #[arg(long)]
    pub data: Option<String>,
    /// lime, saliency, gradcam, removal or random
    #[arg(long)]
    pub method: Option<String>,
    /// Node id (node tasks) or graph index (graph tasks).
    #[arg(long)]
    pub target: Option<usize>,
    /// Class whose logit is explained; defaults to the predicted class.
    #[arg(long)]
    pub class: Option<usize>,
    /// receptive or full
    #[arg(long)]
    pub scope: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<String>,
    #[command(flatten)]
    pub lime: LimeFlags,
}

#[derive(Debug, Args)]
pub struct Evaluate {
    /// Checkpoint files, paired in order with --data.
    #[arg(long)]
    pub checkpoint: Vec<String>,
    #[arg(long)]
    pub data: Vec<String>,
    /// Comma-separated methods.
    #[arg(long)]
    pub methods: Vec<String>,
    /// recall or auc
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated seeds; defaults to the single run seed.
    #[arg(long)]
    pub seeds: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Targets per dataset.
    #[arg(long)]
    pub max_targets: Option<usize>,
    /// receptive or full
    #[arg(long)]
    pub scope: Option<String>,
    /// Fill the wall_time_ms column.
    #[arg(long)]
    pub wall_time: bool,
    #[arg(long)]
    pub out: Option<String>,
    #[command(flatten)]
    pub lime: LimeFlags,
}

#[derive(Debug, Args)]
pub struct ExportDot {
    #[arg(long)]
    pub explanation: Option<String>,
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// Highlight this many top edges.
    #[arg(long)]
    pub top_k: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ")
                .to_string();
            eprintln!("{}", CliError::usage(first));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
