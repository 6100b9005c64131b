use serde::{Deserialize, Serialize};

use super::{Corpus, FeatureVector};
use crate::error::{Error, Result};
use crate::features::FEATURE_DIM;

/// Per-column mean and population standard deviation.
///
/// Zero-variance columns keep a stddev of 1 and are flagged in `degenerate`,
/// so standardizing maps them to 0 instead of dividing by zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
    pub degenerate: Vec<bool>,
}

impl Standardizer {
    pub fn z_scores(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.means)
            .zip(&self.stddevs)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn degenerate_columns(&self) -> Vec<usize> {
        self.degenerate
            .iter()
            .enumerate()
            .filter_map(|(i, &d)| d.then_some(i))
            .collect()
    }
}

pub fn fit_standardizer(corpus: &Corpus) -> Result<Standardizer> {
    if corpus.is_empty() {
        return Err(Error::Empty("cannot fit a standardizer on an empty corpus"));
    }
    let n = corpus.len() as f64;
    let mut means = vec![0.0; FEATURE_DIM];
    for s in corpus.samples() {
        for (m, v) in means.iter_mut().zip(s.features.as_slice()) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);

    let mut vars = vec![0.0; FEATURE_DIM];
    for s in corpus.samples() {
        for ((acc, v), m) in vars.iter_mut().zip(s.features.as_slice()).zip(&means) {
            let d = v - m;
            *acc += d * d;
        }
    }
    let mut degenerate = vec![false; FEATURE_DIM];
    let stddevs = vars
        .iter()
        .zip(degenerate.iter_mut())
        .map(|(&ss, flag)| {
            let sd = (ss / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                *flag = true;
                1.0
            }
        })
        .collect();
    Ok(Standardizer {
        means,
        stddevs,
        degenerate,
    })
}

pub fn apply_standardizer(corpus: &Corpus, stats: &Standardizer) -> Result<Corpus> {
    let samples = corpus
        .samples()
        .iter()
        .map(|s| {
            let mut out = s.clone();
            out.features = FeatureVector::new(stats.z_scores(s.features.as_slice()))?;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(corpus.with_samples(samples))
}

/// Keeps the samples whose z-scores all satisfy `|z| <= threshold`.
pub fn remove_outliers(corpus: &Corpus, stats: &Standardizer, threshold: f64) -> Result<Corpus> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "outlier threshold must be positive, got {threshold}"
        )));
    }
    let kept: Vec<_> = corpus
        .samples()
        .iter()
        .filter(|s| {
            stats
                .z_scores(s.features.as_slice())
                .iter()
                .all(|z| z.abs() <= threshold)
        })
        .cloned()
        .collect();
    if kept.is_empty() && !corpus.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "outlier removal at |z| <= {threshold} removed every sample of {}",
            corpus.name
        )));
    }
    Ok(corpus.with_samples(kept))
}

/// Which statistics define the z-scores used for outlier removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZScoreScope {
    /// Statistics of the training corpus, applied to every corpus.
    #[default]
    Train,
    /// Each corpus is screened with its own statistics.
    PerCorpus,
}

/// Which statistics standardize the transfer corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandardizeScope {
    /// Every corpus is standardized with its own fitted statistics.
    #[default]
    PerCorpus,
    /// Transfer corpora reuse the training corpus statistics.
    TrainStats,
}

impl std::str::FromStr for ZScoreScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(ZScoreScope::Train),
            "per-corpus" => Ok(ZScoreScope::PerCorpus),
            other => Err(Error::InvalidArgument(format!(
                "z-score scope must be `train` or `per-corpus`, got `{other}`"
            ))),
        }
    }
}

impl std::str::FromStr for StandardizeScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-corpus" => Ok(StandardizeScope::PerCorpus),
            "train-stats" => Ok(StandardizeScope::TrainStats),
            other => Err(Error::InvalidArgument(format!(
                "standardize scope must be `per-corpus` or `train-stats`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub zscore_scope: ZScoreScope,
    pub standardize_scope: StandardizeScope,
    /// Samples with any `|z|` above this are dropped.
    pub threshold: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            zscore_scope: ZScoreScope::Train,
            standardize_scope: StandardizeScope::PerCorpus,
            threshold: 10.0,
        }
    }
}

/// Statistics fitted on the training corpus, sufficient to preprocess any
/// further corpus the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub config: PreprocessConfig,
    /// Raw training statistics used for outlier screening.
    pub outlier_stats: Standardizer,
    /// Statistics of the screened training corpus.
    pub train_standardizer: Standardizer,
}

impl PreprocessStats {
    /// Screens and standardizes a non-training corpus. Returns the result,
    /// the statistics that standardized it and the number of dropped samples.
    pub fn prepare(&self, corpus: &Corpus) -> Result<(Corpus, Standardizer, usize)> {
        let kept = screen(corpus, &self.config, &self.outlier_stats)
            .map_err(|e| e.context(format!("corpus {}", corpus.name)))?;
        let stats = match self.config.standardize_scope {
            StandardizeScope::PerCorpus => fit_standardizer(&kept)?,
            StandardizeScope::TrainStats => self.train_standardizer.clone(),
        };
        let removed = corpus.len() - kept.len();
        Ok((apply_standardizer(&kept, &stats)?, stats, removed))
    }
}

fn screen(
    corpus: &Corpus,
    config: &PreprocessConfig,
    train_stats: &Standardizer,
) -> Result<Corpus> {
    match config.zscore_scope {
        ZScoreScope::Train => remove_outliers(corpus, train_stats, config.threshold),
        ZScoreScope::PerCorpus => {
            remove_outliers(corpus, &fit_standardizer(corpus)?, config.threshold)
        }
    }
}

/// Corpora after outlier removal and standardization.
#[derive(Debug, Clone)]
pub struct PreparedCorpora {
    pub train: Corpus,
    pub transfer: Vec<Corpus>,
    pub stats: PreprocessStats,
    /// Statistics that standardized each transfer corpus.
    pub transfer_standardizers: Vec<Standardizer>,
    /// Outliers dropped per corpus, training corpus first.
    pub removed: Vec<usize>,
}

/// Removes outliers, then standardizes every corpus according to `config`.
pub fn prepare_corpora(
    train: &Corpus,
    transfer: &[Corpus],
    config: &PreprocessConfig,
) -> Result<PreparedCorpora> {
    let outlier_stats = fit_standardizer(train)?;
    let train_kept = screen(train, config, &outlier_stats)?;
    let train_standardizer = fit_standardizer(&train_kept)?;
    let train_out = apply_standardizer(&train_kept, &train_standardizer)?;
    let stats = PreprocessStats {
        config: *config,
        outlier_stats,
        train_standardizer,
    };

    let mut removed = vec![train.len() - train_kept.len()];
    let mut transfer_out = Vec::with_capacity(transfer.len());
    let mut transfer_standardizers = Vec::with_capacity(transfer.len());
    for corpus in transfer {
        let (prepared, standardizer, dropped) = stats.prepare(corpus)?;
        removed.push(dropped);
        transfer_out.push(prepared);
        transfer_standardizers.push(standardizer);
    }
    Ok(PreparedCorpora {
        train: train_out,
        transfer: transfer_out,
        stats,
        transfer_standardizers,
        removed,
    })
}
