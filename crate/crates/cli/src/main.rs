mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sca_reco::learners::ModelKind;
use sca_reco::Beta;

/// Label analyzer warnings across releases, score analyzers per project and
/// train analyzer recommenders.
#[derive(Parser)]
#[command(name = "sca-reco", version)]
struct Cli {
    /// Worker threads for per-project stages (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted ground truth.
    Synth(SynthArgs),
    /// Label every analyzer's older-release warnings per project.
    Label(LabelArgs),
    /// Align, score and pick the optimal analyzers per project.
    Evaluate(EvaluateArgs),
    /// Select features by cross-validated RFE and export PCA footprints.
    Mine(MineArgs),
    /// Train a recommendation model.
    Train(TrainArgs),
    /// Recommend one analyzer per project row of a feature file.
    Recommend(RecommendArgs),
    /// Cross-validate a model kind.
    Cv(CvArgs),
    /// Score a fixed or random baseline against the optimal sets.
    Baseline(BaselineArgs),
    /// Cross-validate under several betas.
    Sweep(SweepArgs),
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: sca_reco::Error| e.to_string())
}

fn parse_beta(s: &str) -> Result<Beta, String> {
    s.parse().map_err(|e: sca_reco::Error| e.to_string())
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long = "gdc-map")]
    gdc_map: PathBuf,
    /// Defaults to the built-in illustrative taxonomy.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long)]
    features: PathBuf,
    /// `evaluation.json` written by `evaluate`.
    #[arg(long)]
    evaluation: PathBuf,
    /// One feature name per line; defaults to every column.
    #[arg(long)]
    selected: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// JSON generator configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    projects: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct LabelArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Only this analyzer.
    #[arg(long)]
    sca: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value = "1", value_parser = parse_beta)]
    beta: Beta,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MineArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    evaluation: PathBuf,
    #[arg(long, default_value = "rf", value_parser = parse_kind)]
    model: ModelKind,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, default_value = "rf", value_parser = parse_kind)]
    model: ModelKind,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RecommendArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, default_value = "rf", value_parser = parse_kind)]
    model: ModelKind,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    evaluation: PathBuf,
    /// `fixed:<sca>` or `random`.
    #[arg(long)]
    strategy: String,
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, default_value = "rf", value_parser = parse_kind)]
    model: ModelKind,
    /// Comma-separated; `inf` for pure recall.
    #[arg(long, default_value = "0,0.5,1,2,inf", value_delimiter = ',', value_parser = parse_beta)]
    betas: Vec<Beta>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SCA_RECO_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| commands::run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(3),
    }
}
