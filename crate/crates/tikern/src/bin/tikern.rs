//! Command-line harness: experiments, PD reports, the toy demo, and
//! dataset synthesis.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tikern::config::{ExperimentConfig, Method};
use tikern::data::{load_idx, make_rotated, make_translated, save_cache, save_idx, subsample};
use tikern::experiment::{run_experiment, run_pd_report, write_pd_report, PdReportConfig};
use tikern::toy::demo_toy_example;

#[derive(Parser)]
#[command(name = "tikern", about = "Transformation-invariant kernel SVM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an accuracy experiment from a TOML config.
    Experiment(ExperimentArgs),
    /// Positive-definiteness report: Gaussian Monte-Carlo sweep and/or
    /// dataset threshold search.
    PdReport(PdReportArgs),
    /// Two-pixel toy example contrasting augmentation, average-fit, and
    /// best-fit kernels.
    ToyDemo(ToyDemoArgs),
    /// Synthesize a translated/rotated dataset from an IDX pair.
    MakeDataset(MakeDatasetArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured methods (repeatable).
    #[arg(long = "method")]
    methods: Vec<String>,
    /// Override the configured training sizes (repeatable).
    #[arg(long = "train-size")]
    train_sizes: Vec<usize>,
    /// Override the configured repetition count.
    #[arg(long)]
    repetitions: Option<usize>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured worker count.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the configured CSV output path.
    #[arg(long)]
    output_csv: Option<PathBuf>,
}

#[derive(Args)]
struct PdReportArgs {
    /// TOML experiment config supplying dataset paths and kernel params.
    #[arg(long)]
    config: PathBuf,
    /// Methods to analyze (repeatable); defaults to the config's methods.
    #[arg(long = "method")]
    methods: Vec<String>,
    /// Gaussian sweep entries "rows,cols,n,trials" (repeatable).
    #[arg(long = "gaussian")]
    gaussian: Vec<String>,
    /// Run the dataset threshold search on a subset of this size
    /// (0 disables the search).
    #[arg(long, default_value_t = 0)]
    subset_size: usize,
    /// Subsample draws per candidate n in the threshold search.
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ToyDemoArgs {
    /// Optional path for the grid plot data (TSV).
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Args)]
struct MakeDatasetArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// "translated" or "rotated".
    #[arg(long)]
    transform: String,
    #[arg(long, default_value_t = 64)]
    canvas_rows: usize,
    #[arg(long, default_value_t = 64)]
    canvas_cols: usize,
    #[arg(long, default_value_t = 0.1)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep only n samples (stratified) before the transform; 0 keeps all.
    #[arg(long, default_value_t = 0)]
    limit: usize,
    /// Output IDX image file (pixels clamped to [0,255] bytes).
    #[arg(long)]
    out_images: Option<PathBuf>,
    /// Output IDX label file.
    #[arg(long)]
    out_labels: Option<PathBuf>,
    /// Output lossless cache file (32-bit float pixels).
    #[arg(long)]
    out_cache: Option<PathBuf>,
}

fn parse_gaussian(s: &str) -> tikern::Result<(usize, usize, usize, usize)> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| tikern::Error::InvalidConfig(format!("bad --gaussian {s:?}: {e}")))?;
    if parts.len() != 4 {
        return Err(tikern::Error::InvalidConfig(format!(
            "--gaussian wants rows,cols,n,trials; got {s:?}"
        )));
    }
    Ok((parts[0], parts[1], parts[2], parts[3]))
}

fn cmd_experiment(args: ExperimentArgs) -> tikern::Result<()> {
    let mut cfg = ExperimentConfig::from_toml_file(&args.config)?;
    if !args.methods.is_empty() {
        cfg.methods = args.methods;
    }
    if !args.train_sizes.is_empty() {
        cfg.train_sizes = args.train_sizes;
    }
    if let Some(r) = args.repetitions {
        cfg.repetitions = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if args.output_csv.is_some() {
        cfg.output_csv = args.output_csv;
    }
    cfg.validate()?;
    let table = run_experiment(&cfg)?;
    print!("{}", table.render());
    Ok(())
}

fn cmd_pd_report(args: PdReportArgs) -> tikern::Result<()> {
    let cfg = ExperimentConfig::from_toml_file(&args.config)?;
    let methods: Vec<Method> = if args.methods.is_empty() {
        cfg.methods()?
    } else {
        args.methods
            .iter()
            .map(|m| m.parse())
            .collect::<tikern::Result<_>>()?
    };
    let gaussian_sweep = args
        .gaussian
        .iter()
        .map(|g| parse_gaussian(g))
        .collect::<tikern::Result<Vec<_>>>()?;
    let pd_cfg = PdReportConfig {
        kernel: cfg.kernel.clone(),
        methods,
        gaussian_sweep,
        dataset: (args.subset_size > 0).then(|| cfg.dataset.clone()),
        subset_size: args.subset_size,
        trials: args.trials,
        seed: args.seed.unwrap_or(cfg.seed),
        workers: cfg.workers,
    };
    let out = run_pd_report(&pd_cfg)?;
    write_pd_report(&out, &args.output)?;
    print!("{}", out.to_csv());
    Ok(())
}

fn cmd_toy_demo(args: ToyDemoArgs) -> tikern::Result<()> {
    let demo = demo_toy_example()?;
    print!("{}", demo.render());
    if let Some(path) = args.plot_data {
        std::fs::write(&path, demo.plot_data())?;
        println!("plot data written to {}", path.display());
    }
    Ok(())
}

fn cmd_make_dataset(args: MakeDatasetArgs) -> tikern::Result<()> {
    let mut ds = load_idx(&args.images, &args.labels)?;
    if args.limit > 0 && args.limit < ds.len() {
        ds = subsample(&ds, args.limit, args.seed, true)?;
    }
    let out = match args.transform.as_str() {
        "translated" => make_translated(
            &ds,
            (args.canvas_rows, args.canvas_cols),
            args.noise_sigma,
            args.seed,
        )?,
        "rotated" => make_rotated(&ds, args.noise_sigma, args.seed)?,
        other => {
            return Err(tikern::Error::InvalidConfig(format!(
                "unknown transform {other:?}; expected translated or rotated"
            )))
        }
    };
    println!(
        "{} samples, {}x{}, classes {:?}",
        out.len(),
        out.rows(),
        out.cols(),
        out.classes()
    );
    if let (Some(oi), Some(ol)) = (&args.out_images, &args.out_labels) {
        save_idx(&out, oi, ol)?;
        println!("idx pair written to {} / {}", oi.display(), ol.display());
    }
    if let Some(oc) = &args.out_cache {
        save_cache(&out, oc)?;
        println!("cache written to {}", oc.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Experiment(args) => cmd_experiment(args),
        Command::PdReport(args) => cmd_pd_report(args),
        Command::ToyDemo(args) => cmd_toy_demo(args),
        Command::MakeDataset(args) => cmd_make_dataset(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
