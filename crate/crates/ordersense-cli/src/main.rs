//! Command-line front end for the ordering vs. selection sensitivity harness.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ordersense::bundle::{
    self, CurveArtifact, OrderSearchArtifact, SensitivityArtifact, TransferArtifact,
};
use ordersense::commands::{
    cmd_find_order, cmd_report, cmd_sensitivity, cmd_sweep, cmd_transfer, CommandError, SweepKind,
};
use ordersense::config::{load_config, ExperimentConfig};
use ordersense::sensitivity::GroupBy;

#[derive(Parser)]
#[command(
    name = "ordersense",
    version,
    about = "Measure how much few-shot accuracy depends on demonstration ordering vs. selection, \
             and search for strong orderings using only a development set"
)]
struct Cli {
    /// Log at debug level.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an M x P accuracy matrix on the test split and report
    /// order/selection sensitivity.
    Sensitivity {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Search P sampled permutations per demonstration set for the one with
    /// the highest dev accuracy.
    FindOrder {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Recompute average/highest-dev/max curves from a completed find-order
    /// bundle (no model calls).
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: SweepKindArg,
        /// Permutation budgets or dev-set sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Apply each dataset's best dev ordering to the other dataset and
    /// report the transfer ratio.
    Transfer {
        #[arg(long)]
        config_a: PathBuf,
        #[arg(long)]
        config_b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate sensitivity reports into a per-model or per-dataset table.
    Report {
        #[arg(long, value_enum, default_value = "model")]
        group_by: GroupByArg,
        #[arg(long)]
        out: PathBuf,
        /// Paths to report.json files from sensitivity bundles.
        #[arg(required = true)]
        bundles: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKindArg {
    PermBudget,
    DevSize,
}

impl From<SweepKindArg> for SweepKind {
    fn from(value: SweepKindArg) -> Self {
        match value {
            SweepKindArg::PermBudget => SweepKind::PermBudget,
            SweepKindArg::DevSize => SweepKind::DevSize,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupByArg {
    Model,
    Dataset,
}

impl From<GroupByArg> for GroupBy {
    fn from(value: GroupByArg) -> Self {
        match value {
            GroupByArg::Model => GroupBy::Model,
            GroupByArg::Dataset => GroupBy::Dataset,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_max_level(if cli.verbose {
            tracing_subscriber::filter::LevelFilter::DEBUG
        } else {
            tracing_subscriber::filter::LevelFilter::WARN
        })
        .with_target(false)
        .init();

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), CommandError> {
    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| CommandError::Eval(format!("failed to start async runtime: {e}")))?;
    match command {
        Command::Sensitivity { config } => {
            let config = read_config(&config)?;
            let bundle = runtime.block_on(cmd_sensitivity(&config))?;
            let artifact: SensitivityArtifact = bundle::read_json(&bundle.dir.join("report.json"))?;
            println!(
                "{} on {}: order sensitivity {:.5}, selection sensitivity {:.5}, r = {}",
                artifact.provenance.model_id,
                artifact.provenance.dataset,
                artifact.report.order_sensitivity,
                artifact.report.selection_sensitivity,
                bundle::ratio_cell(artifact.report.ratio.map(|r| (r * 100.0).round() / 100.0)),
            );
            list_files(&bundle);
            Ok(())
        }
        Command::FindOrder { config } => {
            let config = read_config(&config)?;
            let bundle = runtime.block_on(cmd_find_order(&config))?;
            let artifact: OrderSearchArtifact =
                bundle::read_json(&bundle.dir.join("order_search.json"))?;
            println!(
                "{} on {}: average {:.4} | highest-dev {:.4} | max {:.4} (M={}, P={})",
                artifact.provenance.model_id,
                artifact.provenance.dataset,
                artifact.result.aggregate.average,
                artifact.result.aggregate.highest_dev,
                artifact.result.aggregate.max,
                artifact.result.per_set.len(),
                artifact.result.p,
            );
            list_files(&bundle);
            Ok(())
        }
        Command::Sweep {
            config,
            kind,
            values,
            trials,
            seed,
        } => {
            let config = read_config(&config)?;
            let bundle =
                runtime.block_on(cmd_sweep(&config, kind.into(), &values, trials, seed))?;
            let artifact: CurveArtifact = bundle::read_json(&bundle.dir.join("curve.json"))?;
            for i in 0..artifact.curve.x.len() {
                println!(
                    "{} = {:>5}: average {:.4} | highest-dev {:.4} | max {:.4}",
                    artifact.sweep.kind,
                    artifact.curve.x[i],
                    artifact.curve.average[i],
                    artifact.curve.highest_dev[i],
                    artifact.curve.max[i],
                );
            }
            list_files(&bundle);
            Ok(())
        }
        Command::Transfer {
            config_a,
            config_b,
            out,
        } => {
            let config_a = read_config(&config_a)?;
            let config_b = read_config(&config_b)?;
            let bundle = runtime.block_on(cmd_transfer(&config_a, &config_b, &out))?;
            let artifact: TransferArtifact = bundle::read_json(&bundle.dir.join("transfer.json"))?;
            let r = &artifact.result;
            println!(
                "{} -> {}: {:.4} (best {:.4}) | {} -> {}: {:.4} (best {:.4}) | transfer ratio {:.3}",
                r.dataset_a, r.dataset_b, r.a_to_b, r.best_b,
                r.dataset_b, r.dataset_a, r.b_to_a, r.best_a,
                r.transfer_ratio,
            );
            list_files(&bundle);
            Ok(())
        }
        Command::Report {
            group_by,
            out,
            bundles,
        } => {
            let bundle = cmd_report(&bundles, group_by.into(), &out)?;
            list_files(&bundle);
            Ok(())
        }
    }
}

fn read_config(path: &Path) -> Result<ExperimentConfig, CommandError> {
    load_config(path).map_err(CommandError::from)
}

fn list_files(bundle: &ordersense::bundle::ReportBundle) {
    for file in &bundle.files {
        println!("wrote {}", file.display());
    }
}
