use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use emolatent::dataset::{EmotionLabel, StandardizeScope, ZScoreScope};
use emolatent::evaluation::{Method, TriadSpec};

/// Interpretable speech-emotion recognition over eGeMAPS functionals.
#[derive(Debug, Parser)]
#[command(name = "emolatent", version, about)]
pub struct Cli {
    /// More log output (-v info, -vv debug). Logs go to stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with planted 2-D emotion structure.
    Synth(SynthArgs),
    /// Preprocess, cross-validate every method and export the report.
    Run(RunArgs),
    /// DeepLIFT attributions of a saved model on a corpus.
    Attribute(AttributeArgs),
    /// Export 2-D embeddings of corpora under a saved model.
    ExportLatent(ExportLatentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Four well-separated classes.
    Separable,
    /// Happy drawn on top of neutral.
    HappyOverlap,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,

    /// Output CSV; standard output when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Preset::Separable)]
    pub preset: Preset,

    /// Generator settings (JSON or TOML) replacing the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Samples per class [default: 250].
    #[arg(long)]
    pub per_class: Option<usize>,

    /// Rotation of the class layout in the latent plane, in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub rotation: Option<f64>,

    /// Standard deviation of the per-feature noise, in feature scale units.
    #[arg(long)]
    pub feature_noise: Option<f64>,

    /// Corpus name used as sample-id prefix.
    #[arg(long)]
    pub name: Option<String>,

    #[arg(long)]
    pub language: Option<String>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: emolatent::Error| e.to_string())
}

fn parse_triad(s: &str) -> Result<TriadSpec, String> {
    s.parse().map_err(|e: emolatent::Error| e.to_string())
}

fn parse_label(s: &str) -> Result<EmotionLabel, String> {
    s.parse().map_err(|e: emolatent::Error| e.to_string())
}

fn parse_zscore(s: &str) -> Result<ZScoreScope, String> {
    s.parse().map_err(|e: emolatent::Error| e.to_string())
}

fn parse_standardize(s: &str) -> Result<StandardizeScope, String> {
    s.parse().map_err(|e: emolatent::Error| e.to_string())
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Run configuration (TOML, or JSON by extension); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Training corpus CSV.
    #[arg(long)]
    pub train: Option<PathBuf>,

    /// Transfer corpus CSV; repeat for several.
    #[arg(long)]
    pub transfer: Vec<PathBuf>,

    /// Column-schema sidecar applied to every corpus.
    #[arg(long)]
    pub schema: Option<PathBuf>,

    /// Comma-separated subset of raw, pca, uae, dae.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Option<Vec<Method>>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Number of cross-validation folds.
    #[arg(long)]
    pub k: Option<usize>,

    #[arg(long)]
    pub epochs: Option<usize>,

    #[arg(long)]
    pub batch_size: Option<usize>,

    #[arg(long)]
    pub lr: Option<f64>,

    /// DAE corruption standard deviation.
    #[arg(long)]
    pub noise_std: Option<f64>,

    /// Encoder widths from input to latent, e.g. 88,32,8,2.
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<usize>>,

    /// Statistics for outlier z-scores: train or per-corpus.
    #[arg(long, value_parser = parse_zscore)]
    pub zscore_scope: Option<ZScoreScope>,

    /// Statistics for standardizing transfer corpora: per-corpus or train-stats.
    #[arg(long, value_parser = parse_standardize)]
    pub standardize_scope: Option<StandardizeScope>,

    /// Outlier threshold on |z|.
    #[arg(long)]
    pub threshold: Option<f64>,

    /// Assign folds without stratifying by class.
    #[arg(long)]
    pub no_stratify: bool,

    /// Also run triads; without values all four (N-S-H,N-S-A,N-H-A,S-H-A).
    #[arg(long, num_args = 0.., value_delimiter = ',', value_parser = parse_triad)]
    pub triads: Option<Vec<TriadSpec>>,

    /// SVC hinge-loss weight C.
    #[arg(long)]
    pub svc_c: Option<f64>,

    /// Maximum SVC coordinate-descent passes.
    #[arg(long)]
    pub svc_iterations: Option<usize>,

    /// Report directory [env: EMOLATENT_OUT_DIR, default: emolatent-out].
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttributeArgs {
    /// Model bundle written by `run` (models/<method>_fold0.json).
    #[arg(long)]
    pub model: PathBuf,

    #[arg(long)]
    pub corpus: PathBuf,

    #[arg(long)]
    pub schema: Option<PathBuf>,

    /// Emotion class to attribute: neutral, sad, happy or angry.
    #[arg(long, value_parser = parse_label)]
    pub class: EmotionLabel,

    /// Latent dimension, 1 or 2.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub dim: u8,

    /// Output CSV; standard output when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,

    /// Optional per-group summary CSV (mean and mean |score| per group).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportLatentArgs {
    #[arg(long)]
    pub model: PathBuf,

    /// Corpus CSV; repeat for several.
    #[arg(long, required = true)]
    pub corpus: Vec<PathBuf>,

    #[arg(long)]
    pub schema: Option<PathBuf>,

    /// Output directory [env: EMOLATENT_OUT_DIR, default: emolatent-out].
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}
