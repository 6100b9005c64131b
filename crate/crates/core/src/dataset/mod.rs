//! Corpus types, CSV ingestion, preprocessing, fold splitting and the
//! synthetic corpus generator.

mod csv_io;
mod folds;
mod preprocess;
mod synthetic;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FEATURE_DIM;

pub use csv_io::{parse_corpus, parse_corpus_from, write_corpus, ColumnSchema};
pub use folds::{kfold_split, FoldSplit};
pub use preprocess::{
    apply_standardizer, fit_standardizer, prepare_corpora, remove_outliers, PreparedCorpora,
    PreprocessConfig, PreprocessStats, StandardizeScope, Standardizer, ZScoreScope,
};
pub use synthetic::{generate_synthetic, ClassSpec, LatentMap, SyntheticConfig};

/// The four emotion categories shared by all corpora, in their fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Neutral,
    Sad,
    Happy,
    Angry,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 4] = [
        EmotionLabel::Neutral,
        EmotionLabel::Sad,
        EmotionLabel::Happy,
        EmotionLabel::Angry,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Neutral => "neutral",
            EmotionLabel::Sad => "sad",
            EmotionLabel::Happy => "happy",
            EmotionLabel::Angry => "angry",
        }
    }

    pub fn short(self) -> char {
        match self {
            EmotionLabel::Neutral => 'N',
            EmotionLabel::Sad => 'S',
            EmotionLabel::Happy => 'H',
            EmotionLabel::Angry => 'A',
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmotionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "neutral" | "n" => Ok(EmotionLabel::Neutral),
            "sad" | "s" => Ok(EmotionLabel::Sad),
            "happy" | "h" => Ok(EmotionLabel::Happy),
            "angry" | "a" => Ok(EmotionLabel::Angry),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

/// One utterance's 88 functionals. Always exactly 88 finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(FeatureVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        FeatureVector::new(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(v: FeatureVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub sample_id: String,
    pub speaker_id: String,
    pub features: FeatureVector,
    pub label: EmotionLabel,
    pub valence: Option<f64>,
    pub activation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub language: String,
    samples: Vec<LabeledSample>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate sample ids and non-finite annotations.
    /// An empty sample list is allowed here; ingestion rejects it separately.
    pub fn new(
        name: impl Into<String>,
        language: impl Into<String>,
        samples: Vec<LabeledSample>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if !seen.insert(s.sample_id.as_str()) {
                return Err(Error::DuplicateSampleId(s.sample_id.clone()));
            }
            for v in [s.valence, s.activation].into_iter().flatten() {
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "sample {} has a non-finite valence/activation annotation",
                        s.sample_id
                    )));
                }
            }
        }
        Ok(Corpus {
            name: name.into(),
            language: language.into(),
            samples,
        })
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<EmotionLabel> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn feature_rows(&self) -> Vec<&[f64]> {
        self.samples.iter().map(|s| s.features.as_slice()).collect()
    }

    /// Per-class sample counts indexed by `EmotionLabel::index`.
    pub fn class_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for s in &self.samples {
            counts[s.label.index()] += 1;
        }
        counts
    }

    /// Classes that occur at least once, in fixed order.
    pub fn classes_present(&self) -> Vec<EmotionLabel> {
        let counts = self.class_counts();
        EmotionLabel::ALL
            .into_iter()
            .filter(|c| counts[c.index()] > 0)
            .collect()
    }

    /// The samples at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            name: self.name.clone(),
            language: self.language.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    pub(crate) fn with_samples(&self, samples: Vec<LabeledSample>) -> Corpus {
        Corpus {
            name: self.name.clone(),
            language: self.language.clone(),
            samples,
        }
    }
}

/// Keeps the samples whose label is in `keep`, preserving order.
pub fn filter_classes(corpus: &Corpus, keep: &[EmotionLabel]) -> Corpus {
    corpus.with_samples(
        corpus
            .samples
            .iter()
            .filter(|s| keep.contains(&s.label))
            .cloned()
            .collect(),
    )
}
