//! Command-line front end: `features`, `evaluate`, `sweep` and `report`.

pub mod commands;
pub mod grids;
pub mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phonation::learn::KernelKind;
use phonation::FeatureKind;

pub use commands::{
    cmd_evaluate, cmd_features, cmd_report, cmd_sweep, EvaluateConfig, FeaturesConfig, SweepConfig,
};
pub use grids::GridConfig;

/// Invalid invocation or configuration; exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierChoice {
    Svm,
    Xgb,
    /// Answers with the true label; for testing the reporting path.
    #[value(hide = true)]
    Oracle,
}

impl ClassifierChoice {
    pub fn label(self, kernel: KernelKind) -> String {
        match self {
            ClassifierChoice::Svm => match kernel {
                KernelKind::Linear => "svm-linear".into(),
                KernelKind::Rbf => "svm-rbf".into(),
            },
            ClassifierChoice::Xgb => "xgb".into(),
            ClassifierChoice::Oracle => "oracle".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Linear,
    Rbf,
}

impl From<KernelArg> for KernelKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Linear => KernelKind::Linear,
            KernelArg::Rbf => KernelKind::Rbf,
        }
    }
}

fn baseline_kind(s: &str) -> Result<FeatureKind, String> {
    match s.parse::<FeatureKind>() {
        Ok(k) if k.baseline_dim().is_some() => Ok(k),
        _ => Err(format!("unknown feature kind `{s}` (expected spectrogram, mel or mfcc)")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "phonation", version, about = "Singing phonation-mode classification")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract baseline features from the manifest's recordings
    Features(FeaturesArgs),
    /// Cross-validate features × classifiers and write the results table
    Evaluate(EvaluateArgs),
    /// Evaluate every layer of one or more embedding stores
    Sweep(SweepArgs),
    /// Rebuild tables and charts from a previous output directory
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', value_parser = baseline_kind, default_value = "spectrogram,mel,mfcc")]
    features: Vec<FeatureKind>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
    k: u64,
    #[arg(long, value_delimiter = ',', default_value = "svm,xgb")]
    classifier: Vec<ClassifierChoice>,
    #[arg(long, value_enum, default_value = "rbf")]
    kernel: KernelArg,
    /// TOML file overriding the hyperparameter grids
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Baseline kinds; defaults to all three when no store is given
    #[arg(long, value_delimiter = ',', value_parser = baseline_kind)]
    features: Option<Vec<FeatureKind>>,
    /// Embedding store (repeatable)
    #[arg(long)]
    store: Vec<PathBuf>,
    /// Store layers to evaluate (default: all)
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, required = true)]
    store: Vec<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Output directory of a previous `evaluate` or `sweep`
    #[arg(long)]
    out: PathBuf,
}

fn grids(config: &Option<PathBuf>) -> anyhow::Result<GridConfig> {
    match config {
        Some(p) => GridConfig::load(p),
        None => Ok(GridConfig::default()),
    }
}

fn dedup<T: PartialEq + Copy>(v: &[T]) -> Vec<T> {
    let mut out = Vec::new();
    for &x in v {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Features(a) => {
            cmd_features(&FeaturesConfig {
                manifest: a.manifest,
                out: a.out,
                kinds: dedup(&a.features),
            })?;
        }
        Command::Evaluate(a) => {
            let kinds = match a.features {
                Some(k) => dedup(&k),
                None if a.store.is_empty() => vec![FeatureKind::Spectrogram, FeatureKind::MelSpectrogram, FeatureKind::Mfcc],
                None => Vec::new(),
            };
            cmd_evaluate(&EvaluateConfig {
                manifest: a.manifest,
                out: a.out,
                seed: a.model.seed,
                k: a.model.k as usize,
                kinds,
                stores: a.store,
                layers: a.layers,
                classifiers: dedup(&a.model.classifier),
                kernel: a.model.kernel.into(),
                grids: grids(&a.model.config)?,
            })?;
        }
        Command::Sweep(a) => {
            cmd_sweep(&SweepConfig {
                manifest: a.manifest,
                out: a.out,
                seed: a.model.seed,
                k: a.model.k as usize,
                stores: a.store,
                classifiers: dedup(&a.model.classifier),
                kernel: a.model.kernel.into(),
                grids: grids(&a.model.config)?,
            })?;
        }
        Command::Report(a) => {
            cmd_report(&a.out)?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return 2;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}
