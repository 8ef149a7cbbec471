//! Command-line front end for experiments, re-analysis and plots.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use moead_ps::harness::{
    self, ExperimentManifest, MetricsOptions, PlotKind, ResultsStore, Subset, OUTPUT_ENV,
};
use moead_ps::weights::{generate_weights, weights_to_csv};
use moead_ps::{Error, Result};

#[derive(Parser)]
#[command(name = "moead-ps", version, about = "MOEA/D with partial population updates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every problem, variant and repetition of a manifest.
    Run {
        manifest: PathBuf,
        /// Worker threads for independent runs.
        #[arg(long)]
        workers: Option<usize>,
        /// Output root (otherwise the manifest's, then `results`).
        #[arg(long, env = OUTPUT_ENV)]
        out: Option<PathBuf>,
    },
    /// Recompute metric tables from stored runs.
    Metrics {
        store: PathBuf,
        /// Evaluation-set override, `label=final` or `label=last_k:K`.
        #[arg(long = "archive", value_name = "LABEL=POLICY")]
        archive: Vec<String>,
    },
    /// Rank-sum tests and median intervals at the given budgets.
    Stats {
        store: PathBuf,
        /// Comma-separated evaluation counts (default: the manifest's).
        #[arg(long, value_delimiter = ',')]
        at: Vec<usize>,
    },
    /// Render SVG plots from stored tables.
    Plot {
        store: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
    },
    /// Run the built-in three-variant suite.
    PaperSuite {
        #[arg(long, value_enum, default_value = "all")]
        subset: SubsetArg,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, env = OUTPUT_ENV)]
        out: Option<PathBuf>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        base_seed: Option<u64>,
        #[arg(long)]
        budget: Option<usize>,
        /// Print the manifest instead of running it.
        #[arg(long)]
        print_manifest: bool,
    },
    /// Print a weight set as CSV.
    Weights {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Anytime,
    #[value(name = "eaf_diff")]
    EafDiff,
    Ci,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubsetArg {
    Dtlz,
    Uf,
    All,
}

fn render_all(store: &ResultsStore) -> Result<()> {
    harness::render_plots(store, PlotKind::Anytime)?;
    harness::render_plots(store, PlotKind::EafDiff)?;
    if store.stats_dir().join("intervals.csv").is_file() {
        harness::render_plots(store, PlotKind::Ci)?;
    }
    Ok(())
}

fn run_and_report(manifest: &ExperimentManifest, out: &Path, workers: Option<usize>) -> Result<()> {
    let store = harness::execute(manifest, out, workers)?;
    render_all(&store)?;
    println!("results written to {}", out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { manifest, workers, out } => {
            let m = ExperimentManifest::load(&manifest)?;
            let out = out
                .or_else(|| m.output.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            run_and_report(&m, &out, workers)
        }
        Command::Metrics { store, archive } => {
            let store = ResultsStore::new(store);
            let manifest = store.manifest()?;
            let archive_overrides = archive
                .iter()
                .map(|s| MetricsOptions::parse_override(s, &manifest))
                .collect::<Result<Vec<_>>>()?;
            let tables = harness::recompute_metrics(&store, &MetricsOptions { archive_overrides })?;
            println!(
                "{} problems x {} variants recomputed in {}",
                tables.problems.len(),
                tables.variants.len(),
                store.metrics_dir().display()
            );
            Ok(())
        }
        Command::Stats { store, at } => {
            let store = ResultsStore::new(store);
            let at = if at.is_empty() { store.manifest()?.stats_evals } else { at };
            let out = harness::run_stats(&store, &at)?;
            for r in &out.reports {
                println!(
                    "{:>6}  {} vs {}: adjusted p = {:e} {}",
                    r.evals,
                    r.row,
                    r.column,
                    r.adjusted_p,
                    r.direction.symbol()
                );
            }
            Ok(())
        }
        Command::Plot { store, kind } => {
            let kind = match kind {
                Kind::Anytime => PlotKind::Anytime,
                Kind::EafDiff => PlotKind::EafDiff,
                Kind::Ci => PlotKind::Ci,
            };
            for path in harness::render_plots(&ResultsStore::new(store), kind)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::PaperSuite {
            subset,
            workers,
            out,
            runs,
            base_seed,
            budget,
            print_manifest,
        } => {
            let (subset, name) = match subset {
                SubsetArg::Dtlz => (Subset::Dtlz, "dtlz"),
                SubsetArg::Uf => (Subset::Uf, "uf"),
                SubsetArg::All => (Subset::All, "all"),
            };
            let mut m = ExperimentManifest::reference(subset);
            if let Some(r) = runs {
                m.runs = r;
            }
            if let Some(s) = base_seed {
                m.base_seed = s;
            }
            if let Some(b) = budget {
                m.budget = b;
                m.stats_evals.clear();
            }
            m.materialize();
            m.validate()?;
            if print_manifest {
                print!("{}", m.to_json());
                return Ok(());
            }
            let out = out.unwrap_or_else(|| PathBuf::from(format!("results/suite-{name}")));
            run_and_report(&m, &out, workers)
        }
        Command::Weights { n, m, seed } => {
            print!("{}", weights_to_csv(&generate_weights(n, m, seed)?));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_byte(&e))
        }
    }
}

fn exit_byte(e: &Error) -> u8 {
    u8::try_from(e.exit_code()).unwrap_or(1)
}
