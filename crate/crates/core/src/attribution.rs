//! DeepLIFT (Rescale rule) attributions of latent coordinates to input
//! features, relative to a neutral reference input.
//!
//! The reference is the mean feature vector of correctly classified neutral
//! validation samples. For every layer the multiplier of a nonlinearity is
//! `Δa / Δz`; when the two passes agree to within [`RESCALE_EPSILON`] the
//! local derivative at the reference is used instead. Multipliers are chained
//! back through the transposed weights so that the scores of one sample sum
//! to the change of the target output (summation-to-delta).

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Corpus, EmotionLabel};
use crate::error::{Error, Result};
use crate::features::EGEMAPS_FEATURES;
use crate::format_float;
use crate::nn::{Activation, NetworkModel};

/// Below this `|Δz|` the Rescale multiplier falls back to the gradient.
pub const RESCALE_EPSILON: f64 = 1e-7;

const DEFAULT_GROUPS_CSV: &str = include_str!("../data/egemaps_groups.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceInput {
    pub vector: Vec<f64>,
    /// Human-readable description of how the vector was obtained.
    pub provenance: String,
    /// Number of samples averaged into `vector`.
    pub count: usize,
}

/// Averages the features of validation samples that are neutral and were
/// predicted neutral.
pub fn build_reference(
    validation: &Corpus,
    predictions: &[EmotionLabel],
) -> Result<ReferenceInput> {
    if predictions.len() != validation.len() {
        return Err(Error::DimensionMismatch {
            expected: validation.len(),
            actual: predictions.len(),
        });
    }
    let mut sum: Option<Vec<f64>> = None;
    let mut count = 0usize;
    for (sample, &pred) in validation.samples().iter().zip(predictions) {
        if sample.label != EmotionLabel::Neutral || pred != EmotionLabel::Neutral {
            continue;
        }
        let x = sample.features.as_slice();
        let acc = sum.get_or_insert_with(|| vec![0.0; x.len()]);
        for (a, v) in acc.iter_mut().zip(x) {
            *a += v;
        }
        count += 1;
    }
    let Some(mut vector) = sum else {
        return Err(Error::NoNeutralTruePositives);
    };
    for v in &mut vector {
        *v /= count as f64;
    }
    Ok(ReferenceInput {
        vector,
        provenance: format!(
            "mean of {count} true-positive neutral samples of {}",
            validation.name
        ),
        count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    pub sample_id: String,
    /// 1-based index of the attributed output coordinate.
    pub target_dim: usize,
    pub scores: Vec<f64>,
    /// `f(x)[target] - f(reference)[target]`.
    pub delta_output: f64,
}

impl AttributionResult {
    pub fn score_sum(&self) -> f64 {
        self.scores.iter().sum()
    }
}

struct Pass {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

fn trace(model: &NetworkModel, x: &[f64]) -> Pass {
    let mut pre = Vec::with_capacity(model.layers.len());
    let mut post = Vec::with_capacity(model.layers.len());
    let mut a = x.to_vec();
    for layer in &model.layers {
        let mut z = vec![0.0; layer.output_dim];
        layer.affine_into(&a, &mut z);
        a = z.iter().map(|&v| layer.activation.apply(v)).collect();
        pre.push(z);
        post.push(a.clone());
    }
    Pass { pre, post }
}

fn rescale_multiplier(activation: Activation, z: f64, z_ref: f64, a: f64, a_ref: f64) -> f64 {
    if activation == Activation::Linear {
        return 1.0;
    }
    let dz = z - z_ref;
    if dz.abs() < RESCALE_EPSILON {
        activation.derivative(z_ref)
    } else {
        (a - a_ref) / dz
    }
}

/// Raw DeepLIFT scores for output `target` (0-based) of `model`.
///
/// Returns the per-input scores and the output difference they explain.
pub fn deeplift_scores(
    model: &NetworkModel,
    x: &[f64],
    reference: &[f64],
    target: usize,
) -> Result<(Vec<f64>, f64)> {
    for v in [x, reference] {
        if v.len() != model.input_dim {
            return Err(Error::DimensionMismatch {
                expected: model.input_dim,
                actual: v.len(),
            });
        }
    }
    if target >= model.output_dim {
        return Err(Error::InvalidArgument(format!(
            "target output {target} out of range for a {}-dimensional output",
            model.output_dim
        )));
    }
    if let Some(i) = x.iter().chain(reference).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i % model.input_dim));
    }

    let px = trace(model, x);
    let pr = trace(model, reference);

    // Multipliers with respect to the activations of the current layer.
    let mut m = vec![0.0; model.output_dim];
    m[target] = 1.0;
    for (l, layer) in model.layers.iter().enumerate().rev() {
        let mz: Vec<f64> = (0..layer.output_dim)
            .map(|o| {
                m[o] * rescale_multiplier(
                    layer.activation,
                    px.pre[l][o],
                    pr.pre[l][o],
                    px.post[l][o],
                    pr.post[l][o],
                )
            })
            .collect();
        let mut prev = vec![0.0; layer.input_dim];
        for (o, &g) in mz.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for (p, w) in prev.iter_mut().zip(layer.weight_row(o)) {
                *p += g * w;
            }
        }
        m = prev;
    }

    let scores: Vec<f64> = m
        .iter()
        .zip(x.iter().zip(reference))
        .map(|(mi, (xi, ri))| mi * (xi - ri))
        .collect();
    let last = model.layers.len() - 1;
    let delta = px.post[last][target] - pr.post[last][target];
    Ok((scores, delta))
}

/// Attributes latent coordinate `target_dim` (1-based) of `encoder` for one
/// sample.
pub fn deeplift_attribute(
    encoder: &NetworkModel,
    sample_id: &str,
    x: &[f64],
    reference: &ReferenceInput,
    target_dim: usize,
) -> Result<AttributionResult> {
    if target_dim == 0 || target_dim > encoder.output_dim {
        return Err(Error::InvalidArgument(format!(
            "target dimension must be in 1..={}, got {target_dim}",
            encoder.output_dim
        )));
    }
    let (scores, delta_output) = deeplift_scores(encoder, x, &reference.vector, target_dim - 1)?;
    Ok(AttributionResult {
        sample_id: sample_id.to_string(),
        target_dim,
        scores,
        delta_output,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAttribution {
    pub class: EmotionLabel,
    pub target_dim: usize,
    pub results: Vec<AttributionResult>,
    /// Set when the class had no correctly classified samples to attribute.
    pub no_true_positives: bool,
}

/// Attributes every true-positive sample of `class` in `corpus`.
///
/// A class without true positives yields an empty result with the warning
/// flag set rather than an error.
pub fn attribute_class(
    encoder: &NetworkModel,
    corpus: &Corpus,
    predictions: &[EmotionLabel],
    reference: &ReferenceInput,
    class: EmotionLabel,
    target_dim: usize,
) -> Result<ClassAttribution> {
    if predictions.len() != corpus.len() {
        return Err(Error::DimensionMismatch {
            expected: corpus.len(),
            actual: predictions.len(),
        });
    }
    let selected: Vec<_> = corpus
        .samples()
        .iter()
        .zip(predictions)
        .filter(|(s, &p)| s.label == class && p == class)
        .map(|(s, _)| s)
        .collect();
    if selected.is_empty() {
        warn!(
            "no true-positive {class} samples in {}; nothing to attribute",
            corpus.name
        );
    }
    let results = selected
        .par_iter()
        .map(|s| {
            deeplift_attribute(
                encoder,
                &s.sample_id,
                s.features.as_slice(),
                reference,
                target_dim,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassAttribution {
        class,
        target_dim,
        no_true_positives: results.is_empty(),
        results,
    })
}

/// Maps each feature to a named group. Every feature belongs to exactly one
/// group, so group scores partition the feature scores.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrouping {
    features: Vec<String>,
    groups: Vec<String>,
}

impl FeatureGrouping {
    /// The shipped eGeMAPS grouping (`data/egemaps_groups.csv`).
    pub fn egemaps() -> Self {
        let names: Vec<String> = EGEMAPS_FEATURES.iter().map(|s| s.to_string()).collect();
        Self::from_csv_str(DEFAULT_GROUPS_CSV, &names)
            .expect("shipped grouping table covers eGeMAPS")
    }

    /// Parses a `feature_name,group` table and aligns it with `features`.
    /// Features missing from the table are an error.
    pub fn from_csv_str(text: &str, features: &[String]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Schema(format!("grouping table lacks a `{name}` column")))
        };
        let (fi, gi) = (col("feature_name")?, col("group")?);
        let mut table = HashMap::new();
        for record in reader.records() {
            let record = record?;
            let (f, g) = (&record[fi], &record[gi]);
            if g.is_empty() {
                return Err(Error::Schema(format!("feature `{f}` has an empty group")));
            }
            if table.insert(f.to_string(), g.to_string()).is_some() {
                return Err(Error::Schema(format!(
                    "feature `{f}` is listed twice in the grouping table"
                )));
            }
        }
        let groups = features
            .iter()
            .map(|f| {
                table.get(f).cloned().ok_or_else(|| {
                    Error::Schema(format!("feature `{f}` is not assigned to any group"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            features: features.to_vec(),
            groups,
        })
    }

    pub fn load(path: &std::path::Path, features: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, features)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_name(&self, i: usize) -> &str {
        &self.features[i]
    }

    pub fn group_of(&self, i: usize) -> &str {
        &self.groups[i]
    }

    /// Distinct group names, in order of first appearance.
    pub fn group_names(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for g in &self.groups {
            if !seen.contains(&g.as_str()) {
                seen.push(g.as_str());
            }
        }
        seen
    }

    /// Sums feature scores per group.
    pub fn group_scores(&self, scores: &[f64]) -> Result<BTreeMap<String, f64>> {
        if scores.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: scores.len(),
            });
        }
        let mut out = BTreeMap::new();
        for (g, s) in self.groups.iter().zip(scores) {
            *out.entry(g.clone()).or_insert(0.0) += s;
        }
        Ok(out)
    }
}

/// Writes attributions in long format: one row per sample and feature.
pub fn write_attribution_csv<W: Write>(
    writer: W,
    sets: &[ClassAttribution],
    grouping: &FeatureGrouping,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "sample_id",
        "class",
        "target_dim",
        "feature_name",
        "group",
        "score",
        "delta_output",
    ])?;
    for set in sets {
        for r in &set.results {
            if r.scores.len() != grouping.len() {
                return Err(Error::DimensionMismatch {
                    expected: grouping.len(),
                    actual: r.scores.len(),
                });
            }
            let delta = format_float(r.delta_output);
            for (i, s) in r.scores.iter().enumerate() {
                w.write_record([
                    r.sample_id.as_str(),
                    set.class.name(),
                    &r.target_dim.to_string(),
                    grouping.feature_name(i),
                    grouping.group_of(i),
                    &format_float(*s),
                    &delta,
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<attribution csv>", e))?;
    Ok(())
}
