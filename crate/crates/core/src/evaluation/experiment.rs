use std::fmt;
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{
    accuracy, confusion_matrix, t_confidence_interval, unweighted_accuracy, ConfidenceInterval,
    ConfusionMatrix,
};
use crate::attribution::{attribute_class, build_reference, ClassAttribution, ReferenceInput};
use crate::autoencoder::{self, AutoencoderConfig, TrainedAutoencoder, LATENT_DIM};
use crate::baselines::{
    pca_fit, pca_transform, svc_fit, svc_predict, PcaModel, SvcConfig, SvcModel,
};
use crate::dataset::{filter_classes, kfold_split, Corpus, EmotionLabel};
use crate::error::{Error, Result};
use crate::features::FEATURE_DIM;
use crate::nn::{Activation, DenseLayer, NetworkModel};
use crate::seed::derive_seed;

const STREAM_FOLDS: u64 = 10;
const STREAM_AUTOENCODER: u64 = 11;
const STREAM_SVC: u64 = 12;

/// Name of the pseudo-dataset made of the training folds.
pub const TRAIN_DATASET: &str = "train";
/// Name of the pseudo-dataset made of the held-out fold.
pub const VALID_DATASET: &str = "valid";

/// Embedding that feeds the linear SVC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// The standardized 88 features themselves.
    Raw,
    Pca,
    Uae,
    Dae,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Raw, Method::Pca, Method::Uae, Method::Dae];

    pub fn name(self) -> &'static str {
        match self {
            Method::Raw => "raw",
            Method::Pca => "pca",
            Method::Uae => "uae",
            Method::Dae => "dae",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" | "raw-svc" | "rawsvc" | "svc" => Ok(Method::Raw),
            "pca" => Ok(Method::Pca),
            "uae" => Ok(Method::Uae),
            "dae" => Ok(Method::Dae),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}` (expected raw, pca, uae or dae)"
            ))),
        }
    }
}

/// Everything that determines a cross-validation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub k: usize,
    pub seed: u64,
    pub stratify: bool,
    pub encoder_widths: Vec<usize>,
    pub hidden_activation: Activation,
    /// Corruption level of the DAE; the UAE always trains without noise.
    pub noise_std: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub svc_c: f64,
    pub svc_iterations: usize,
    /// Keep fold-0 latents, models and attributions in the report.
    pub capture_fold0: bool,
}

impl ExperimentConfig {
    /// The standard regime: 10 folds, 50 epochs, batch 64, lr 1e-3.
    pub fn new(seed: u64) -> Self {
        let ae = AutoencoderConfig::dae(seed);
        let svc = SvcConfig::default();
        ExperimentConfig {
            methods: Method::ALL.to_vec(),
            k: 10,
            seed,
            stratify: true,
            encoder_widths: ae.encoder_widths,
            hidden_activation: ae.hidden_activation,
            noise_std: ae.noise_std,
            epochs: ae.epochs,
            batch_size: ae.batch_size,
            lr: ae.lr,
            svc_c: svc.c,
            svc_iterations: svc.iterations,
            capture_fold0: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one method is required".into(),
            ));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::InvalidArgument(format!("method {m} listed twice")));
            }
        }
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if !(self.svc_c > 0.0 && self.svc_c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "SVC C must be positive, got {}",
                self.svc_c
            )));
        }
        self.autoencoder_config(Method::Dae, 0).validate()
    }

    /// Autoencoder settings for `method` in `fold`. UAE and DAE of one fold
    /// share their seed, so they differ only in the corruption.
    pub fn autoencoder_config(&self, method: Method, fold: usize) -> AutoencoderConfig {
        AutoencoderConfig {
            encoder_widths: self.encoder_widths.clone(),
            hidden_activation: self.hidden_activation,
            noise_std: if method == Method::Dae {
                self.noise_std
            } else {
                0.0
            },
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            seed: derive_seed(self.seed, &[STREAM_AUTOENCODER, fold as u64]),
        }
    }

    fn svc_config(&self, method: Method, fold: usize) -> SvcConfig {
        SvcConfig {
            c: self.svc_c,
            iterations: self.svc_iterations,
            seed: derive_seed(self.seed, &[STREAM_SVC, fold as u64, method as u64]),
        }
    }
}

/// A fitted feature map from standardized eGeMAPS vectors to SVC inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Embedding {
    Raw,
    Pca { model: PcaModel },
    Autoencoder { model: TrainedAutoencoder },
}

impl Embedding {
    pub fn fit(
        method: Method,
        train: &Corpus,
        config: &ExperimentConfig,
        fold: usize,
    ) -> Result<Self> {
        match method {
            Method::Raw => Ok(Embedding::Raw),
            Method::Pca => Ok(Embedding::Pca {
                model: pca_fit(&train.feature_rows(), LATENT_DIM)?,
            }),
            Method::Uae | Method::Dae => Ok(Embedding::Autoencoder {
                model: autoencoder::train(train, &config.autoencoder_config(method, fold))?,
            }),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Embedding::Raw => FEATURE_DIM,
            Embedding::Pca { model } => model.output_dim(),
            Embedding::Autoencoder { .. } => LATENT_DIM,
        }
    }

    pub fn embed(&self, corpus: &Corpus) -> Result<Vec<Vec<f64>>> {
        let rows = corpus.feature_rows();
        match self {
            Embedding::Raw => Ok(rows.iter().map(|r| r.to_vec()).collect()),
            Embedding::Pca { model } => pca_transform(model, &rows),
            Embedding::Autoencoder { model } => {
                rows.iter().map(|r| model.encoder.predict(r)).collect()
            }
        }
    }

    /// The differentiable encoder, for attribution.
    pub fn encoder(&self) -> Option<&NetworkModel> {
        match self {
            Embedding::Autoencoder { model } => Some(&model.encoder),
            _ => None,
        }
    }

    /// The embedding as a network: the encoder of an autoencoder, or a single
    /// linear layer computing the PCA projection. `None` for raw features.
    pub fn latent_network(&self) -> Result<Option<NetworkModel>> {
        match self {
            Embedding::Raw => Ok(None),
            Embedding::Autoencoder { model } => Ok(Some(model.encoder.clone())),
            Embedding::Pca { model } => {
                let weights: Vec<f64> = model.components.iter().flatten().copied().collect();
                let biases = model
                    .components
                    .iter()
                    .map(|c| -c.iter().zip(&model.mean).map(|(a, m)| a * m).sum::<f64>())
                    .collect();
                let layer =
                    DenseLayer::new(weights, biases, model.input_dim(), Activation::Linear)?;
                Ok(Some(NetworkModel::from_layers(vec![layer])?))
            }
        }
    }
}

/// An embedding together with the SVC trained on its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedMethod {
    pub method: Method,
    pub embedding: Embedding,
    pub svc: SvcModel,
}

impl FittedMethod {
    pub fn fit(
        method: Method,
        train: &Corpus,
        config: &ExperimentConfig,
        fold: usize,
    ) -> Result<Self> {
        let embedding = Embedding::fit(method, train, config, fold)?;
        let svc = svc_fit(
            &embedding.embed(train)?,
            &train.labels(),
            &config.svc_config(method, fold),
        )?;
        Ok(FittedMethod {
            method,
            embedding,
            svc,
        })
    }

    pub fn predict(&self, corpus: &Corpus) -> Result<Vec<EmotionLabel>> {
        svc_predict(&self.svc, &self.embedding.embed(corpus)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldEntry {
    pub fold: usize,
    pub method: Method,
    pub dataset: String,
    pub samples: usize,
    /// Unweighted average recall.
    pub uar: f64,
    /// Per-sample accuracy.
    pub accuracy: f64,
}

/// Confusion counts of one method on one dataset, pooled over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfusion {
    pub method: Method,
    pub dataset: String,
    pub matrix: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPoint {
    pub sample_id: String,
    pub coords: [f64; 2],
    pub label: EmotionLabel,
    pub corpus: String,
    pub valence: Option<f64>,
    pub activation: Option<f64>,
}

/// 2-D embeddings of one dataset under one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentSet {
    pub method: Method,
    pub dataset: String,
    pub points: Vec<LatentPoint>,
}

impl LatentSet {
    /// Embeds `corpus`; the embedding must be two-dimensional.
    pub fn from_embedding(
        method: Method,
        dataset: &str,
        embedding: &Embedding,
        corpus: &Corpus,
    ) -> Result<Self> {
        if embedding.output_dim() != 2 {
            return Err(Error::InvalidArgument(format!(
                "{method} embeddings are {}-dimensional, not 2-D",
                embedding.output_dim()
            )));
        }
        let coords = embedding.embed(corpus)?;
        let points = corpus
            .samples()
            .iter()
            .zip(coords)
            .map(|(s, c)| LatentPoint {
                sample_id: s.sample_id.clone(),
                coords: [c[0], c[1]],
                label: s.label,
                corpus: corpus.name.clone(),
                valence: s.valence,
                activation: s.activation,
            })
            .collect();
        Ok(LatentSet {
            method,
            dataset: dataset.to_string(),
            points,
        })
    }
}

/// Fold-0 attributions of an autoencoder's latent coordinates on the
/// held-out fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionRun {
    pub method: Method,
    pub reference: ReferenceInput,
    pub sets: Vec<ClassAttribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub dataset: String,
    pub folds: usize,
    pub uar: ConfidenceInterval,
    pub accuracy_mean: f64,
    pub chance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// `all` for the full class set, or the triad name such as `N-S-A`.
    pub name: String,
    pub classes: Vec<EmotionLabel>,
    pub chance: f64,
    pub config: ExperimentConfig,
    pub train_corpus: String,
    /// `train`, `valid`, then the transfer corpora in the given order.
    pub datasets: Vec<String>,
    /// Ordered by fold, then method, then dataset.
    pub folds: Vec<FoldEntry>,
    pub confusions: Vec<MethodConfusion>,
    pub latents: Vec<LatentSet>,
    pub attribution: Option<AttributionRun>,
    pub fold0_models: Vec<FittedMethod>,
}

impl ExperimentReport {
    /// A report without any results.
    pub fn empty(name: &str, classes: &[EmotionLabel], config: ExperimentConfig) -> Self {
        ExperimentReport {
            name: name.to_string(),
            classes: classes.to_vec(),
            chance: if classes.is_empty() {
                0.0
            } else {
                1.0 / classes.len() as f64
            },
            config,
            train_corpus: String::new(),
            datasets: Vec::new(),
            folds: Vec::new(),
            confusions: Vec::new(),
            latents: Vec::new(),
            attribution: None,
            fold0_models: Vec::new(),
        }
    }

    pub fn fold_entries(&self, method: Method, dataset: &str) -> Vec<&FoldEntry> {
        self.folds
            .iter()
            .filter(|e| e.method == method && e.dataset == dataset)
            .collect()
    }

    pub fn mean_uar(&self, method: Method, dataset: &str) -> Option<f64> {
        let v = self.fold_entries(method, dataset);
        (!v.is_empty()).then(|| v.iter().map(|e| e.uar).sum::<f64>() / v.len() as f64)
    }

    pub fn confusion(&self, method: Method, dataset: &str) -> Option<&ConfusionMatrix> {
        self.confusions
            .iter()
            .find(|c| c.method == method && c.dataset == dataset)
            .map(|c| &c.matrix)
    }

    /// Mean and 95% Student-t interval per method and dataset.
    pub fn summary(&self) -> Result<Vec<SummaryRow>> {
        let mut rows = Vec::new();
        for &method in &self.config.methods {
            for dataset in &self.datasets {
                let entries = self.fold_entries(method, dataset);
                if entries.is_empty() {
                    continue;
                }
                let uars: Vec<f64> = entries.iter().map(|e| e.uar).collect();
                rows.push(SummaryRow {
                    method,
                    dataset: dataset.clone(),
                    folds: entries.len(),
                    uar: t_confidence_interval(&uars, 0.95)?,
                    accuracy_mean: entries.iter().map(|e| e.accuracy).sum::<f64>()
                        / entries.len() as f64,
                    chance: self.chance,
                });
            }
        }
        Ok(rows)
    }
}

struct FoldOutcome {
    entries: Vec<FoldEntry>,
    confusions: Vec<MethodConfusion>,
    latents: Vec<LatentSet>,
    attribution: Option<AttributionRun>,
    models: Vec<FittedMethod>,
}

/// Four-class (or all classes present) k-fold cross-validation with
/// transfer evaluation.
pub fn run_cross_validation(
    train: &Corpus,
    transfer: &[Corpus],
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    run_experiment("all", train, transfer, &train.classes_present(), config)
}

fn run_experiment(
    name: &str,
    train: &Corpus,
    transfer: &[Corpus],
    classes: &[EmotionLabel],
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    config.validate()?;
    if classes.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "{} has fewer than two classes to separate",
            train.name
        )));
    }
    let mut datasets = vec![TRAIN_DATASET.to_string(), VALID_DATASET.to_string()];
    let mut transfer_sets = Vec::with_capacity(transfer.len());
    for corpus in transfer {
        if datasets.contains(&corpus.name) {
            return Err(Error::InvalidArgument(format!(
                "transfer corpus name `{}` clashes with another dataset",
                corpus.name
            )));
        }
        let kept = filter_classes(corpus, classes);
        if kept.len() < corpus.len() {
            warn!(
                "{}: dropped {} samples of classes outside the experiment",
                corpus.name,
                corpus.len() - kept.len()
            );
        }
        if kept.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "transfer corpus `{}` has no samples of the evaluated classes",
                corpus.name
            )));
        }
        datasets.push(corpus.name.clone());
        transfer_sets.push(kept);
    }

    let split = kfold_split(
        train,
        config.k,
        derive_seed(config.seed, &[STREAM_FOLDS]),
        config.stratify,
    )?;
    info!(
        "{name}: {} folds over {} samples of {}",
        config.k,
        train.len(),
        train.name
    );

    let outcomes = (0..config.k)
        .into_par_iter()
        .map(|fold| {
            run_fold(
                fold,
                train,
                &split.training(fold),
                &split.held_out(fold),
                &transfer_sets,
                classes,
                config,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = ExperimentReport::empty(name, classes, config.clone());
    report.train_corpus = train.name.clone();
    report.datasets = datasets;
    for &method in &config.methods {
        for dataset in &report.datasets {
            report.confusions.push(MethodConfusion {
                method,
                dataset: dataset.clone(),
                matrix: ConfusionMatrix::empty(classes),
            });
        }
    }
    for outcome in outcomes {
        report.folds.extend(outcome.entries);
        for c in outcome.confusions {
            let slot = report
                .confusions
                .iter_mut()
                .find(|s| s.method == c.method && s.dataset == c.dataset)
                .expect("confusion slots cover every method and dataset");
            slot.matrix.merge(&c.matrix)?;
        }
        report.latents.extend(outcome.latents);
        if outcome.attribution.is_some() {
            report.attribution = outcome.attribution;
        }
        report.fold0_models.extend(outcome.models);
    }
    Ok(report)
}

fn run_fold(
    fold: usize,
    corpus: &Corpus,
    train_idx: &[usize],
    valid_idx: &[usize],
    transfer: &[Corpus],
    classes: &[EmotionLabel],
    config: &ExperimentConfig,
) -> Result<FoldOutcome> {
    let train = corpus.subset(train_idx);
    let valid = corpus.subset(valid_idx);
    let capture = fold == 0 && config.capture_fold0;
    let mut out = FoldOutcome {
        entries: Vec::new(),
        confusions: Vec::new(),
        latents: Vec::new(),
        attribution: None,
        models: Vec::new(),
    };
    let mut valid_predictions = Vec::new();

    for &method in &config.methods {
        let ctx = |e: Error| e.context(format!("fold {fold}, method {method}"));
        let fitted = FittedMethod::fit(method, &train, config, fold).map_err(ctx)?;
        let sets = [(TRAIN_DATASET, &train), (VALID_DATASET, &valid)]
            .into_iter()
            .chain(transfer.iter().map(|c| (c.name.as_str(), c)));
        for (dataset, data) in sets {
            let preds = fitted.predict(data).map_err(ctx)?;
            let labels = data.labels();
            out.entries.push(FoldEntry {
                fold,
                method,
                dataset: dataset.to_string(),
                samples: data.len(),
                uar: unweighted_accuracy(&preds, &labels).map_err(ctx)?,
                accuracy: accuracy(&preds, &labels).map_err(ctx)?,
            });
            out.confusions.push(MethodConfusion {
                method,
                dataset: dataset.to_string(),
                matrix: confusion_matrix(&preds, &labels, classes).map_err(ctx)?,
            });
            if capture && dataset != TRAIN_DATASET && fitted.embedding.output_dim() == 2 {
                out.latents.push(
                    LatentSet::from_embedding(method, dataset, &fitted.embedding, data)
                        .map_err(ctx)?,
                );
            }
            if dataset == VALID_DATASET {
                valid_predictions.push((method, preds));
            }
        }
        if capture {
            out.models.push(fitted);
        }
    }

    if capture {
        out.attribution = attribute_fold(&valid, &out.models, &valid_predictions, classes)
            .map_err(|e| e.context(format!("fold {fold}, attribution")))?;
    }
    Ok(out)
}

fn attribute_fold(
    valid: &Corpus,
    models: &[FittedMethod],
    predictions: &[(Method, Vec<EmotionLabel>)],
    classes: &[EmotionLabel],
) -> Result<Option<AttributionRun>> {
    let Some(fitted) = [Method::Dae, Method::Uae]
        .iter()
        .find_map(|m| models.iter().find(|f| f.method == *m))
    else {
        return Ok(None);
    };
    let encoder = fitted
        .embedding
        .encoder()
        .expect("autoencoder methods have an encoder");
    let preds = &predictions
        .iter()
        .find(|(m, _)| *m == fitted.method)
        .expect("validation predictions recorded for every method")
        .1;
    let reference = match build_reference(valid, preds) {
        Ok(r) => r,
        Err(Error::NoNeutralTruePositives) => {
            warn!("no correctly classified neutral samples; skipping attribution");
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let mut sets = Vec::new();
    for &class in classes {
        for dim in 1..=LATENT_DIM {
            sets.push(attribute_class(
                encoder, valid, preds, &reference, class, dim,
            )?);
        }
    }
    Ok(Some(AttributionRun {
        method: fitted.method,
        reference,
        sets,
    }))
}

/// Three of the four classes, trained and evaluated in isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriadSpec {
    classes: [EmotionLabel; 3],
}

impl TriadSpec {
    pub fn new(classes: [EmotionLabel; 3]) -> Result<Self> {
        let mut sorted = classes;
        sorted.sort();
        if sorted[0] == sorted[1] || sorted[1] == sorted[2] {
            return Err(Error::InvalidArgument(format!(
                "triad classes must be distinct, got {classes:?}"
            )));
        }
        Ok(TriadSpec { classes: sorted })
    }

    /// N-S-H, N-S-A, N-H-A and S-H-A.
    pub fn all() -> Vec<TriadSpec> {
        use EmotionLabel::*;
        [
            [Neutral, Sad, Happy],
            [Neutral, Sad, Angry],
            [Neutral, Happy, Angry],
            [Sad, Happy, Angry],
        ]
        .into_iter()
        .map(|c| TriadSpec { classes: c })
        .collect()
    }

    pub fn classes(&self) -> [EmotionLabel; 3] {
        self.classes
    }

    pub fn name(&self) -> String {
        self.classes
            .iter()
            .map(|c| c.short().to_string())
            .collect::<Vec<_>>()
            .join("-")
    }
}

impl fmt::Display for TriadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for TriadSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['-', ',']).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidArgument(format!(
                "a triad names three classes, got `{s}`"
            )));
        }
        let labels = parts
            .iter()
            .map(|p| p.parse())
            .collect::<Result<Vec<EmotionLabel>>>()?;
        TriadSpec::new([labels[0], labels[1], labels[2]])
    }
}

/// Runs one cross-validation per triad. Samples of the excluded class are
/// removed before any model is fitted.
pub fn run_triads(
    train: &Corpus,
    transfer: &[Corpus],
    triads: &[TriadSpec],
    config: &ExperimentConfig,
) -> Result<Vec<ExperimentReport>> {
    triads
        .iter()
        .map(|triad| {
            let classes = triad.classes();
            let filtered = filter_classes(train, &classes);
            run_experiment(&triad.name(), &filtered, transfer, &classes, config)
                .map_err(|e| e.context(format!("triad {triad}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{
        apply_standardizer, fit_standardizer, generate_synthetic, SyntheticConfig,
    };

    fn corpus(per_class: usize, seed: u64) -> Corpus {
        let raw = generate_synthetic(&SyntheticConfig::separable(per_class), seed).unwrap();
        apply_standardizer(&raw, &fit_standardizer(&raw).unwrap()).unwrap()
    }

    fn quick(seed: u64, methods: &[Method]) -> ExperimentConfig {
        ExperimentConfig {
            methods: methods.to_vec(),
            k: 3,
            epochs: 3,
            ..ExperimentConfig::new(seed)
        }
    }

    #[test]
    fn methods_parse_and_print() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("Raw-SVC".parse::<Method>().unwrap(), Method::Raw);
        assert!("lda".parse::<Method>().is_err());
    }

    #[test]
    fn triads_parse_in_canonical_order() {
        let t: TriadSpec = "a-n-s".parse().unwrap();
        assert_eq!(t.name(), "N-S-A");
        assert!("N-N-A".parse::<TriadSpec>().is_err());
        assert!("N-S".parse::<TriadSpec>().is_err());
        let names: Vec<String> = TriadSpec::all().iter().map(|t| t.name()).collect();
        assert_eq!(names, ["N-S-H", "N-S-A", "N-H-A", "S-H-A"]);
    }

    #[test]
    fn raw_svc_separates_the_separable_corpus() {
        let mut cfg = SyntheticConfig::separable(30);
        cfg.feature_noise = 0.0;
        for class in &mut cfg.classes {
            class.covariance = [[0.01, 0.0], [0.0, 0.01]];
        }
        let raw = generate_synthetic(&cfg, 1).unwrap();
        let c = apply_standardizer(&raw, &fit_standardizer(&raw).unwrap()).unwrap();
        let report = run_cross_validation(&c, &[], &quick(4, &[Method::Raw])).unwrap();
        assert_eq!(report.folds.len(), 3 * 2);
        let row = &report.summary().unwrap()[1];
        assert_eq!(row.dataset, VALID_DATASET);
        assert_eq!(row.uar.mean, 1.0);
        assert_eq!((row.uar.low, row.uar.high), (1.0, 1.0));
    }

    #[test]
    fn report_structure_and_pooled_confusions() {
        let c = corpus(12, 2);
        let mut other = corpus(5, 3);
        other.name = "other".into();
        let report =
            run_cross_validation(&c, &[other], &quick(1, &[Method::Pca, Method::Uae])).unwrap();
        assert_eq!(report.datasets, ["train", "valid", "other"]);
        assert_eq!(report.folds.len(), 3 * 2 * 3);
        for w in report.folds.windows(2) {
            assert!(w[0].fold <= w[1].fold);
        }
        // Every training sample is held out exactly once.
        assert_eq!(report.confusion(Method::Pca, "valid").unwrap().total(), 48);
        // The transfer corpus is scored once per fold.
        assert_eq!(
            report.confusion(Method::Uae, "other").unwrap().total(),
            3 * 20
        );
        assert_eq!(report.latents.len(), 2 * 2);
        assert_eq!(report.fold0_models.len(), 2);
        let att = report
            .attribution
            .as_ref()
            .expect("UAE attribution on fold 0");
        assert_eq!(att.method, Method::Uae);
        assert_eq!(att.sets.len(), 4 * 2);
    }

    #[test]
    fn transfer_corpora_never_influence_fitting() {
        let c = corpus(12, 5);
        let mut other = corpus(6, 6);
        other.name = "other".into();
        let cfg = quick(9, &[Method::Raw, Method::Dae]);
        let with = run_cross_validation(&c, &[other], &cfg).unwrap();
        let without = run_cross_validation(&c, &[], &cfg).unwrap();
        assert_eq!(with.fold0_models, without.fold0_models);
        let own: Vec<_> = with
            .folds
            .iter()
            .filter(|e| e.dataset != "other")
            .cloned()
            .collect();
        assert_eq!(own, without.folds);
    }

    #[test]
    fn runs_are_deterministic() {
        let c = corpus(10, 7);
        let cfg = quick(3, &[Method::Dae]);
        let a = run_cross_validation(&c, &[], &cfg).unwrap();
        let b = run_cross_validation(&c, &[], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn triads_filter_before_fitting() {
        let c = corpus(9, 8);
        let reports = run_triads(&c, &[], &TriadSpec::all(), &quick(2, &[Method::Pca])).unwrap();
        assert_eq!(reports.len(), 4);
        for r in &reports {
            assert_eq!(r.classes.len(), 3);
            assert!((r.chance - 1.0 / 3.0).abs() < 1e-15);
            let cm = r.confusion(Method::Pca, "valid").unwrap();
            assert_eq!(cm.counts.len(), 3);
            assert_eq!(cm.total(), 27);
            assert_eq!(r.fold0_models[0].svc.classes, r.classes);
        }
    }

    #[test]
    fn duplicate_dataset_names_are_rejected() {
        let c = corpus(5, 1);
        let mut clash = corpus(5, 2);
        clash.name = "valid".into();
        assert!(run_cross_validation(&c, &[clash], &quick(1, &[Method::Raw])).is_err());
        let mut cfg = quick(1, &[Method::Raw, Method::Raw]);
        assert!(run_cross_validation(&c, &[], &cfg).is_err());
        cfg.methods.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn pca_network_reproduces_the_projection() {
        let c = corpus(10, 4);
        let fitted = Embedding::fit(Method::Pca, &c, &quick(1, &[Method::Pca]), 0).unwrap();
        let net = fitted.latent_network().unwrap().unwrap();
        let direct = fitted.embed(&c).unwrap();
        for (s, d) in c.samples().iter().zip(&direct) {
            let via = net.predict(s.features.as_slice()).unwrap();
            assert!((via[0] - d[0]).abs() < 1e-10 && (via[1] - d[1]).abs() < 1e-10);
        }
        assert!(Embedding::Raw.latent_network().unwrap().is_none());
    }
}
