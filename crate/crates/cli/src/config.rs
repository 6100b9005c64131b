//! Run configuration: command-line flags override a TOML/JSON file, which
//! overrides the built-in defaults (the standard training regime).

use std::path::{Path, PathBuf};

use emolatent::dataset::{PreprocessConfig, StandardizeScope, ZScoreScope};
use emolatent::evaluation::{ExperimentConfig, Method, TriadSpec};
use serde::{Deserialize, Serialize};

use crate::args::RunArgs;
use crate::error::{CliError, Stage};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "EMOLATENT_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "emolatent-out";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum TriadSetting {
    All(bool),
    List(Vec<String>),
}

/// On-disk configuration; every field is optional.
#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub train: Option<PathBuf>,
    #[serde(default)]
    pub transfer: Vec<PathBuf>,
    pub schema: Option<PathBuf>,
    pub methods: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub noise_std: Option<f64>,
    pub widths: Option<Vec<usize>>,
    pub zscore_scope: Option<ZScoreScope>,
    pub standardize_scope: Option<StandardizeScope>,
    pub threshold: Option<f64>,
    pub stratify: Option<bool>,
    pub triads: Option<TriadSetting>,
    pub svc_c: Option<f64>,
    pub svc_iterations: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl FileConfig {
    /// Parses JSON for `.json` files and TOML otherwise. Relative paths are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::usage(
                Stage::Config,
                format!("cannot read config {}: {e}", path.display()),
            )
        })?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg: FileConfig = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        }
        .map_err(|e| {
            CliError::usage(
                Stage::Config,
                format!("invalid config {}: {e}", path.display()),
            )
        })?;

        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.train.as_mut().map(resolve);
        cfg.schema.as_mut().map(resolve);
        cfg.out_dir.as_mut().map(resolve);
        cfg.transfer.iter_mut().for_each(resolve);
        Ok(cfg)
    }
}

/// Fully resolved settings of a `run`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub train: PathBuf,
    pub transfer: Vec<PathBuf>,
    pub schema: Option<PathBuf>,
    pub preprocess: PreprocessConfig,
    pub experiment: ExperimentConfig,
    pub triads: Vec<TriadSpec>,
    pub out_dir: PathBuf,
}

/// Output directory when no flag or file sets one.
pub fn default_out_dir(env_value: Option<String>) -> PathBuf {
    env_value
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn parse_list<T: std::str::FromStr<Err = emolatent::Error>>(
    items: &[String],
    what: &str,
) -> Result<Vec<T>, CliError> {
    items
        .iter()
        .map(|s| s.parse::<T>())
        .collect::<emolatent::Result<Vec<T>>>()
        .map_err(|e| CliError::usage(Stage::Config, format!("invalid {what} in config: {e}")))
}

impl RunConfig {
    /// Merges flags, an optional config file and defaults. `env_out_dir` is
    /// the value of [`OUT_DIR_ENV`], passed in to keep this function pure.
    pub fn resolve(
        args: &RunArgs,
        file: FileConfig,
        env_out_dir: Option<String>,
    ) -> Result<Self, CliError> {
        let seed = args.seed.or(file.seed).ok_or_else(|| {
            CliError::usage(
                Stage::Config,
                "a seed is required (--seed or `seed` in the config file)",
            )
        })?;
        let train = args.train.clone().or(file.train).ok_or_else(|| {
            CliError::usage(Stage::Config, "a training corpus is required (--train)")
        })?;
        let transfer = if args.transfer.is_empty() {
            file.transfer
        } else {
            args.transfer.clone()
        };

        let mut exp = ExperimentConfig::new(seed);
        if let Some(m) = &args.methods {
            exp.methods = m.clone();
        } else if let Some(m) = &file.methods {
            exp.methods = parse_list::<Method>(m, "method")?;
        }
        macro_rules! pick {
            ($field:ident, $target:expr) => {
                if let Some(v) = args.$field.clone().or(file.$field.clone()) {
                    $target = v;
                }
            };
        }
        pick!(k, exp.k);
        pick!(epochs, exp.epochs);
        pick!(batch_size, exp.batch_size);
        pick!(lr, exp.lr);
        pick!(noise_std, exp.noise_std);
        pick!(widths, exp.encoder_widths);
        pick!(svc_c, exp.svc_c);
        pick!(svc_iterations, exp.svc_iterations);
        exp.stratify = if args.no_stratify {
            false
        } else {
            file.stratify.unwrap_or(true)
        };
        exp.validate()
            .map_err(|e| CliError::usage(Stage::Config, e.to_string()))?;

        let mut preprocess = PreprocessConfig::default();
        pick!(zscore_scope, preprocess.zscore_scope);
        pick!(standardize_scope, preprocess.standardize_scope);
        pick!(threshold, preprocess.threshold);
        if preprocess.threshold.is_nan() || preprocess.threshold <= 0.0 {
            return Err(CliError::usage(
                Stage::Config,
                format!(
                    "outlier threshold must be positive, got {}",
                    preprocess.threshold
                ),
            ));
        }

        let triads = match (&args.triads, file.triads) {
            (Some(list), _) if list.is_empty() => TriadSpec::all(),
            (Some(list), _) => list.clone(),
            (None, Some(TriadSetting::All(true))) => TriadSpec::all(),
            (None, Some(TriadSetting::List(list))) if list.is_empty() => TriadSpec::all(),
            (None, Some(TriadSetting::List(list))) => parse_list::<TriadSpec>(&list, "triad")?,
            (None, _) => Vec::new(),
        };

        let out_dir = args
            .out
            .clone()
            .or(file.out_dir)
            .unwrap_or_else(|| default_out_dir(env_out_dir));

        Ok(RunConfig {
            train,
            transfer,
            schema: args.schema.clone().or(file.schema),
            preprocess,
            experiment: exp,
            triads,
            out_dir,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> RunArgs {
        RunArgs {
            train: Some("t.csv".into()),
            seed: Some(7),
            ..RunArgs::default()
        }
    }

    #[test]
    fn defaults_follow_the_standard_regime() {
        let cfg = RunConfig::resolve(&args(), FileConfig::default(), None).unwrap();
        assert_eq!(cfg.experiment.k, 10);
        assert_eq!(cfg.experiment.epochs, 50);
        assert_eq!(cfg.experiment.batch_size, 64);
        assert_eq!(cfg.experiment.lr, 1e-3);
        assert_eq!(cfg.experiment.encoder_widths, vec![88, 32, 8, 2]);
        assert_eq!(cfg.preprocess.threshold, 10.0);
        assert_eq!(cfg.experiment.methods, Method::ALL.to_vec());
        assert!(cfg.triads.is_empty());
        assert_eq!(cfg.out_dir, PathBuf::from(DEFAULT_OUT_DIR));
    }

    #[test]
    fn flags_beat_file_beats_defaults() {
        let file: FileConfig = toml::from_str(
            "seed = 1\nk = 5\nepochs = 7\nmethods = [\"pca\"]\nzscore_scope = \"per-corpus\"\nout_dir = \"from-file\"\ntriads = true\n",
        )
        .unwrap();
        let mut a = args();
        a.k = Some(4);
        let cfg = RunConfig::resolve(&a, file.clone(), Some("from-env".into())).unwrap();
        assert_eq!(cfg.experiment.seed, 7);
        assert_eq!(cfg.experiment.k, 4);
        assert_eq!(cfg.experiment.epochs, 7);
        assert_eq!(cfg.experiment.methods, vec![Method::Pca]);
        assert_eq!(cfg.preprocess.zscore_scope, ZScoreScope::PerCorpus);
        assert_eq!(cfg.out_dir, PathBuf::from("from-file"));
        assert_eq!(cfg.triads.len(), 4);

        a.out = Some("from-flag".into());
        let cfg = RunConfig::resolve(&a, file, None).unwrap();
        assert_eq!(cfg.out_dir, PathBuf::from("from-flag"));
    }

    #[test]
    fn environment_only_supplies_the_default_out_dir() {
        let cfg =
            RunConfig::resolve(&args(), FileConfig::default(), Some("env-dir".into())).unwrap();
        assert_eq!(cfg.out_dir, PathBuf::from("env-dir"));
    }

    #[test]
    fn missing_seed_is_a_usage_error() {
        let mut a = args();
        a.seed = None;
        let err = RunConfig::resolve(&a, FileConfig::default(), None).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_USAGE);
    }

    #[test]
    fn invalid_file_values_are_usage_errors() {
        let file: FileConfig = toml::from_str("methods = [\"lda\"]").unwrap();
        assert!(RunConfig::resolve(&args(), file, None).is_err());
        assert!(toml::from_str::<FileConfig>("colour = 1").is_err());
        let file: FileConfig = toml::from_str("triads = [\"N-S-A\"]").unwrap();
        let cfg = RunConfig::resolve(&args(), file, None).unwrap();
        assert_eq!(cfg.triads[0].name(), "N-S-A");
    }

    #[test]
    fn config_paths_resolve_against_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"train": "data/a.csv", "transfer": ["/abs/b.csv"], "seed": 3}"#,
        )
        .unwrap();
        let file = FileConfig::load(&path).unwrap();
        assert_eq!(file.train.unwrap(), dir.path().join("data/a.csv"));
        assert_eq!(file.transfer, vec![PathBuf::from("/abs/b.csv")]);
    }
}
