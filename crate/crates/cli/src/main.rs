use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use malviz::imaging::Technique;
use malviz::pipeline::{self, FeatureSet, NormScope, PipelineConfig};

#[derive(Parser, Debug)]
#[command(
    name = "malviz",
    version,
    about = "Turn executables into images, extract features and evaluate KNN classifiers"
)]
struct Cli {
    /// Versioned TOML configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the split, the forest and the hyperparameter search.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Corpus root with one sub-directory per family.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// CSV `path,family` overriding directory labels.
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    /// Comma-separated techniques, e.g. `grayscale,hit`.
    #[arg(long, global = true, value_delimiter = ',')]
    techniques: Option<Vec<String>>,
    /// Comma-separated feature kinds: histogram, hog, haralick.
    #[arg(long, global = true, value_delimiter = ',')]
    features: Option<Vec<String>>,
    /// Random-search trials per feature file.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Samples used to fit the spiral byte ranking and normalization.
    #[arg(long, global = true, value_enum)]
    norm_scope: Option<Scope>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scope {
    Train,
    All,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scan the corpus and write manifest.csv.
    Ingest,
    /// Per-family size statistics.
    Stats,
    /// Stratified train/val/test split.
    Split,
    /// Render images for the selected techniques.
    Convert,
    /// Extract feature CSVs.
    Featurize,
    /// Search, fit and evaluate KNN on feature files (all of them by default).
    TrainEval { files: Vec<PathBuf> },
    /// Aggregate reports into summary tables.
    Report,
    /// Print the resolved configuration as TOML.
    ShowConfig,
}

fn resolve(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    if let Some(c) = &cli.corpus {
        cfg.corpus_root = c.clone();
    }
    if let Some(l) = &cli.labels {
        cfg.label_file = Some(l.clone());
    }
    if let Some(ts) = &cli.techniques {
        cfg.techniques = ts
            .iter()
            .map(|t| t.parse::<Technique>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(fs) = &cli.features {
        cfg.feature_kinds = fs
            .iter()
            .map(|f| f.parse::<FeatureSet>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(b) = cli.budget {
        cfg.search_budget = b;
    }
    if let Some(scope) = cli.norm_scope {
        cfg.norm_scope = match scope {
            Scope::Train => NormScope::Train,
            Scope::All => NormScope::All,
        };
    }
    Ok(cfg.resolved()?)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = resolve(cli)?;
    pipeline::with_jobs(cfg.jobs, || dispatch(cli, &cfg))?
}

fn dispatch(cli: &Cli, cfg: &PipelineConfig) -> anyhow::Result<()> {
    match &cli.command {
        Command::Ingest => {
            let m = pipeline::cmd_ingest(cfg)?;
            println!(
                "{} samples, {} families -> {}",
                m.len(),
                m.family_census.len(),
                cfg.manifest_path().display()
            );
        }
        Command::Stats => {
            let stats = pipeline::cmd_stats(cfg)?;
            println!(
                "{:<24} {:>10} {:>10} {:>12} {:>7} {:>7}",
                "family", "min", "max", "mean", "trunc%", "pad%"
            );
            for s in stats {
                println!(
                    "{:<24} {:>10} {:>10} {:>12.2} {:>7.1} {:>7.1}",
                    s.family, s.min_bytes, s.max_bytes, s.mean_bytes, s.pct_truncated, s.pct_padded
                );
            }
        }
        Command::Split => {
            let split = pipeline::cmd_split(cfg)?;
            for p in malviz::corpus::Partition::ALL {
                println!("{p}: {}", split.ids_in(p).count());
            }
        }
        Command::Convert => {
            let s = pipeline::cmd_convert(cfg)?;
            println!("{} images written, {} unchanged", s.written, s.skipped);
        }
        Command::Featurize => {
            for p in pipeline::cmd_featurize(cfg)? {
                println!("{}", p.display());
            }
        }
        Command::TrainEval { files } => {
            let files = if files.is_empty() {
                pipeline::feature_files(cfg)?
            } else {
                files.clone()
            };
            anyhow::ensure!(
                !files.is_empty(),
                malviz::Error::Missing("no feature files; run `featurize` first".into())
            );
            for f in files {
                let r = pipeline::cmd_train_eval(cfg, &f)
                    .with_context(|| format!("train-eval {}", f.display()))?;
                let m = &r.metrics;
                println!(
                    "{:<24} acc {:.4}  prec {:.4}  rec {:.4}  f1 {:.4}  [{}]",
                    r.name,
                    m.accuracy,
                    m.precision,
                    m.recall,
                    m.f1,
                    r.hyperparameters()
                );
            }
        }
        Command::Report => {
            for p in pipeline::cmd_report(cfg)? {
                println!("{}", p.display());
            }
        }
        Command::ShowConfig => print!("{}", cfg.to_toml()),
    }
    Ok(())
}

fn error_code(err: &anyhow::Error) -> &'static str {
    err.chain()
        .find_map(|e| e.downcast_ref::<malviz::Error>())
        .map_or("error", |e| e.code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // sources are often already embedded in their parent's message
            let mut message = String::new();
            for cause in err.chain() {
                let text = cause.to_string();
                if !message.contains(&text) {
                    if !message.is_empty() {
                        message.push_str(": ");
                    }
                    message.push_str(&text);
                }
            }
            let message = message.replace('\n', " ");
            eprintln!("error[{}]: {message}", error_code(&err));
            ExitCode::FAILURE
        }
    }
}
