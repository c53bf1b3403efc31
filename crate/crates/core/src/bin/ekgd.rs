//! Command-line front end: ingest event tables, sample observations, discover
//! or score feature models, export EKG graphs, and verify against the
//! brute-force oracles.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ekgd_core::cli::{run_discover, run_export, run_sample, run_score, CliError, RunManifest};
use ekgd_core::event_model::SamplingScheme;

#[derive(Parser)]
#[command(
    name = "ekgd",
    version,
    about = "Discovers which event features induce the order structure of an event log"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Input event table (delimiter-separated, header row mandatory).
    #[arg(long)]
    input: Option<PathBuf>,

    /// JSON manifest; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Number of observation samples.
    #[arg(long)]
    samples: Option<usize>,

    /// Events per sample (default: the whole table).
    #[arg(long = "sample-size")]
    sample_size: Option<usize>,

    /// Sampling scheme: contiguous-window or partition.
    #[arg(long)]
    scheme: Option<String>,

    /// Seed for sampling.
    #[arg(long)]
    seed: Option<u64>,

    /// Per-call counting budget in deterministic milliseconds.
    #[arg(long = "budget-ms")]
    budget_ms: Option<u64>,

    /// Budget multiplier per re-estimation pass.
    #[arg(long = "budget-growth")]
    budget_growth: Option<u32>,

    /// Maximum re-estimation passes.
    #[arg(long = "max-passes")]
    max_passes: Option<u32>,

    /// Candidate features for discovery, comma separated.
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,

    /// Explicit model as JSON, e.g. '[["Order"],["Order","Payment"]]'.
    #[arg(long)]
    model: Option<String>,

    /// Worker threads (0 = automatic). Capped by EKG_THREADS.
    #[arg(long)]
    workers: Option<usize>,

    /// Column holding the unique event id.
    #[arg(long = "id-column")]
    id_column: Option<String>,

    /// Column defining the observed order (ties keep row order).
    #[arg(long = "order-column")]
    order_column: Option<String>,

    /// Separator for multi-valued cells.
    #[arg(long = "value-separator")]
    value_separator: Option<String>,

    /// Field delimiter of the input.
    #[arg(long)]
    delimiter: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Search the atomic-feature model space and write result artifacts.
    Discover(CommonArgs),
    /// Score an explicit model (atomic or derived feature sets).
    Score(CommonArgs),
    /// Emit sampled observation index lists.
    Sample(CommonArgs),
    /// Export DOT graphs for an explicit model.
    Export(CommonArgs),
    /// Run the small-instance oracle agreement suite.
    Verify {
        /// Random instances per check.
        #[arg(long, default_value_t = 40)]
        trials: usize,
        #[arg(long, default_value_t = 17)]
        seed: u64,
    },
}

fn build_manifest(args: &CommonArgs) -> Result<RunManifest, CliError> {
    let mut manifest = match &args.config {
        Some(path) => RunManifest::from_json_file(path)?,
        None => RunManifest::default(),
    };
    if let Some(v) = &args.input {
        manifest.input = v.clone();
    }
    if let Some(v) = &args.out {
        manifest.out = Some(v.clone());
    }
    if let Some(v) = args.samples {
        manifest.samples = v;
    }
    if let Some(v) = args.sample_size {
        manifest.sample_size = Some(v);
    }
    if let Some(v) = &args.scheme {
        manifest.scheme = match v.as_str() {
            "contiguous-window" | "window" => SamplingScheme::ContiguousWindow,
            "partition" => SamplingScheme::Partition,
            other => {
                return Err(CliError::Config(format!(
                    "unknown sampling scheme {other:?}"
                )))
            }
        };
    }
    if let Some(v) = args.seed {
        manifest.seed = v;
    }
    if let Some(v) = args.budget_ms {
        manifest.budget_ms = v;
    }
    if let Some(v) = args.budget_growth {
        manifest.budget_growth = v;
    }
    if let Some(v) = args.max_passes {
        manifest.max_passes = v;
    }
    if let Some(v) = &args.features {
        manifest.features = Some(v.clone());
    }
    if let Some(v) = &args.model {
        let lists: Vec<Vec<String>> = serde_json::from_str(v)
            .map_err(|e| CliError::ModelInvalid(format!("model JSON: {e}")))?;
        manifest.model = Some(lists);
    }
    if let Some(v) = args.workers {
        manifest.workers = v;
    }
    if let Some(v) = &args.id_column {
        manifest.id_column = v.clone();
    }
    if let Some(v) = &args.order_column {
        manifest.order_column = Some(v.clone());
    }
    if let Some(v) = &args.value_separator {
        manifest.value_separator = v.clone();
    }
    if let Some(v) = &args.delimiter {
        manifest.delimiter = v.clone();
    }
    Ok(manifest)
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Discover(args) => {
            let manifest = build_manifest(&args)?;
            let artifacts = run_discover(&manifest)?;
            println!(
                "best model: {} (log2 score {})",
                artifacts.result.best_model, artifacts.result.best_score.score_lo
            );
            println!(
                "visited {} states, pruned {}, re-estimated {}",
                artifacts.result.visited, artifacts.result.pruned, artifacts.result.reestimated
            );
            println!("wrote {}", artifacts.result_path.display());
            println!("wrote {}", artifacts.trace_path.display());
            for path in &artifacts.dot_paths {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Score(args) => {
            let manifest = build_manifest(&args)?;
            let value = run_score(&manifest)?;
            println!("{}", serde_json::to_string_pretty(&value).expect("json"));
            Ok(())
        }
        Command::Sample(args) => {
            let manifest = build_manifest(&args)?;
            let value = run_sample(&manifest)?;
            println!("{}", serde_json::to_string_pretty(&value).expect("json"));
            Ok(())
        }
        Command::Export(args) => {
            let manifest = build_manifest(&args)?;
            for path in run_export(&manifest)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        #[cfg(not(feature = "oracle"))]
        Command::Verify { .. } => Err(CliError::Config(
            "this build lacks the oracle feature; rebuild with --features oracle".to_string(),
        )),
        #[cfg(feature = "oracle")]
        Command::Verify { trials, seed } => {
            let reports = ekgd_core::oracle::run_verification(trials, seed);
            let failures = reports.iter().filter(|r| !r.agree).count();
            println!(
                "{:<44} {:>18} {:>24} {:>6} {:>12}",
                "instance", "oracle", "system", "agree", "discrepancy"
            );
            for r in &reports {
                println!(
                    "{:<44} {:>18} {:>24} {:>6} {:>12.3e}",
                    r.instance,
                    r.oracle_value,
                    r.system_value,
                    if r.agree { "yes" } else { "NO" },
                    r.discrepancy
                );
            }
            println!("{} checks, {} failures", reports.len(), failures);
            if failures > 0 {
                return Err(CliError::Internal(format!(
                    "{failures} oracle disagreements"
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            println!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
