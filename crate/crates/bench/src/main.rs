use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cgso::config::ConfigFile;
use cgso::dataset::Manifest;
use cgso::experiment::{self, Algorithm, ExperimentConfig, FitnessSplit, PreparedData};
use cgso::report::{self, Format};
use cgso::stats::DEFAULT_ALPHA_PER_TEST;

#[derive(Parser)]
#[command(name = "bench", version, about = "Train MLP classifiers with GSO variants and compare the results")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-trial experiment and write a report.
    Run(RunArgs),
    /// One-way ANOVA and pairwise t tests over the accuracies of several reports.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Dataset manifest (TOML).
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    algo: Option<Algorithm>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Number of cooperative subgroups.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    fitness_split: Option<FitnessSplit>,
    /// Report path. Printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to the extension of --out, then jsonl.
    #[arg(long)]
    format: Option<Format>,
    /// TOML config file. Flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run trials one after another instead of on the thread pool.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(required = true, num_args = 2..)]
    reports: Vec<PathBuf>,
    /// Per-test significance level.
    #[arg(long, default_value_t = DEFAULT_ALPHA_PER_TEST)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: RunArgs) -> Result<()> {
    let file = match &args.config {
        Some(p) => ConfigFile::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => ConfigFile::default(),
    };
    let algorithm = args.algo.or(file.algorithm()).unwrap_or(Algorithm::Gso);
    let mut config = ExperimentConfig::for_algorithm(algorithm);
    // --algo overrides whatever coop.variant says
    let mut file_for_apply = file.clone();
    if args.algo.is_some() {
        file_for_apply.coop.variant = None;
    }
    file_for_apply.apply(&mut config)?;

    if let Some(v) = args.trials {
        config.trials = v;
    }
    if let Some(v) = args.pop {
        config.population = v;
    }
    if let Some(v) = args.iters {
        config.max_iter = v;
    }
    if let Some(v) = args.k {
        config.k = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.fitness_split {
        config.fitness_split = v;
    }
    config.parallel = !args.sequential;
    config.validate()?;

    let Some(manifest_path) = args.dataset.or(file.dataset) else {
        bail!("no dataset given (use --dataset or set `dataset` in the config file)");
    };
    let manifest = Manifest::load(&manifest_path)?;
    let data = PreparedData::from_manifest(&manifest)?;
    if data.sizes_scaled {
        eprintln!(
            "note: {} has {} usable rows; split scaled to {}/{}/{}",
            data.dataset.name,
            data.dataset.rows(),
            data.sizes.train,
            data.sizes.validation,
            data.sizes.test
        );
    }
    let result = experiment::run_experiment(&config, &data)?;
    eprintln!(
        "{} {}: {} trials, accuracy {:.2} +/- {:.2}%, {:.3}s per trial",
        result.summary.dataset,
        result.summary.algorithm,
        result.summary.trials,
        result.summary.mean_accuracy,
        result.summary.std_accuracy,
        result.summary.mean_time
    );

    let format = args
        .format
        .or(args.out.as_deref().map(Format::from_path))
        .unwrap_or(Format::Jsonl);
    match args.out {
        Some(path) => report::emit_report(&result, format, &path)?,
        None => print!("{}", report::render(&result, format)?),
    }
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let reports = args
        .reports
        .iter()
        .map(|p| report::read_report(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let cmp = experiment::compare_reports(&reports, args.alpha)?;
    let text = serde_json::to_string_pretty(&cmp)? + "\n";
    match args.out {
        Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
