//! Metrics, k-fold cross-validation over the four embedding methods, triad
//! runs, transfer evaluation and report export.
//!
//! Accuracy means unweighted average recall (mean per-class recall);
//! per-sample accuracy is reported next to it. Fold results carry a 95%
//! Student-t interval. Folds run in parallel and merge in fold order, so a
//! report depends only on its inputs and seed.

mod experiment;
mod export;
mod metrics;

pub use experiment::{
    run_cross_validation, run_triads, AttributionRun, Embedding, ExperimentConfig,
    ExperimentReport, FittedMethod, FoldEntry, LatentPoint, LatentSet, Method, MethodConfusion,
    SummaryRow, TriadSpec, TRAIN_DATASET, VALID_DATASET,
};
pub use export::{
    export_report, file_stem, latent_svg, read_confusion_csv, write_accuracy_csv,
    write_confusion_csv, write_fold_csv, write_latent_csv, Manifest,
};
pub use metrics::{
    accuracy, confusion_matrix, t_confidence_interval, unweighted_accuracy, ConfidenceInterval,
    ConfusionMatrix,
};
