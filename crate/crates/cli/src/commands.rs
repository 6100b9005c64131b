use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use emolatent::attribution::{
    attribute_class, build_reference, write_attribution_csv, ClassAttribution, FeatureGrouping,
};
use emolatent::dataset::{
    generate_synthetic, prepare_corpora, write_corpus, Corpus, SyntheticConfig,
};
use emolatent::evaluation::{
    export_report, file_stem, latent_svg, run_cross_validation, run_triads, write_latent_csv,
    LatentSet, Manifest, SummaryRow,
};
use emolatent::features::EGEMAPS_FEATURES;
use emolatent::{format_float, Error};
use log::{info, warn};
use serde::Serialize;

use crate::args::{AttributeArgs, ExportLatentArgs, Preset, SynthArgs};
use crate::bundle::ModelBundle;
use crate::config::{default_out_dir, RunConfig, OUT_DIR_ENV};
use crate::error::{CliError, Stage, StageExt};
use crate::io::{create_output, load_corpus};

fn load_synthetic_config(path: &Path) -> Result<SyntheticConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::usage(
            Stage::Config,
            format!("cannot read {}: {e}", path.display()),
        )
    })?;
    let parsed = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| {
        CliError::usage(
            Stage::Config,
            format!("invalid generator config {}: {e}", path.display()),
        )
    })
}

/// Resolves the generator settings of `synth`.
pub fn synth_config(args: &SynthArgs) -> Result<SyntheticConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => load_synthetic_config(path)?,
        None => {
            let per_class = args.per_class.unwrap_or(250);
            match args.preset {
                Preset::Separable => SyntheticConfig::separable(per_class),
                Preset::HappyOverlap => SyntheticConfig::happy_overlap(per_class),
            }
        }
    };
    if let (Some(n), Some(_)) = (args.per_class, &args.config) {
        cfg.classes.iter_mut().for_each(|c| c.count = n);
    }
    if let Some(r) = args.rotation {
        cfg.rotation_deg = r;
    }
    if let Some(f) = args.feature_noise {
        cfg.feature_noise = f;
    }
    if let Some(name) = &args.name {
        cfg.name = name.clone();
    }
    if let Some(lang) = &args.language {
        cfg.language = lang.clone();
    }
    cfg.validate()
        .map_err(|e| CliError::usage(Stage::Config, e.to_string()))?;
    Ok(cfg)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<Corpus, CliError> {
    let cfg = synth_config(args)?;
    let corpus = generate_synthetic(&cfg, args.seed).stage(Stage::Config)?;
    let out = create_output(args.out.as_deref()).stage(Stage::Export)?;
    write_corpus(&corpus, out).stage(Stage::Export)?;
    if let Some(path) = &args.out {
        info!("wrote {} samples to {}", corpus.len(), path.display());
    }
    Ok(corpus)
}

#[derive(Serialize)]
struct CorpusPreprocessing {
    name: String,
    samples_in: usize,
    removed: usize,
    degenerate_features: Vec<&'static str>,
}

fn write_json<T: Serialize>(
    dir: &Path,
    rel: &str,
    value: &T,
    files: &mut Vec<String>,
) -> Result<(), CliError> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| Error::io(parent, e))
            .stage(Stage::Export)?;
    }
    let mut text = serde_json::to_string_pretty(value)
        .map_err(Error::from)
        .stage(Stage::Export)?;
    text.push('\n');
    fs::write(&path, text)
        .map_err(|e| Error::io(&path, e))
        .stage(Stage::Export)?;
    files.push(rel.to_string());
    Ok(())
}

pub struct RunOutcome {
    pub manifest: Manifest,
    pub summary: Vec<SummaryRow>,
    pub triad_summaries: Vec<(String, Vec<SummaryRow>)>,
}

/// Ingestion → preprocessing → cross-validation (and triads) → export.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let schema = cfg.schema.as_deref();
    let train = load_corpus(&cfg.train, schema)?;
    let transfer = cfg
        .transfer
        .iter()
        .map(|p| load_corpus(p, schema))
        .collect::<Result<Vec<_>, _>>()?;

    let prepared =
        prepare_corpora(&train, &transfer, &cfg.preprocess).stage(Stage::Preprocessing)?;
    let mut preprocessing = Vec::new();
    let standardizers =
        std::iter::once(&prepared.stats.train_standardizer).chain(&prepared.transfer_standardizers);
    for ((raw, removed), stats) in std::iter::once(&train)
        .chain(&transfer)
        .zip(&prepared.removed)
        .zip(standardizers)
    {
        if *removed > 0 {
            info!("{}: removed {removed} outliers", raw.name);
        }
        preprocessing.push(CorpusPreprocessing {
            name: raw.name.clone(),
            samples_in: raw.len(),
            removed: *removed,
            degenerate_features: stats
                .degenerate_columns()
                .iter()
                .map(|&i| EGEMAPS_FEATURES[i])
                .collect(),
        });
    }

    let report = run_cross_validation(&prepared.train, &prepared.transfer, &cfg.experiment)
        .stage(Stage::Training)?;
    let triad_reports = if cfg.triads.is_empty() {
        Vec::new()
    } else {
        let mut triad_cfg = cfg.experiment.clone();
        triad_cfg.capture_fold0 = false;
        run_triads(&prepared.train, &prepared.transfer, &cfg.triads, &triad_cfg)
            .stage(Stage::Training)?
    };

    let out = &cfg.out_dir;
    let mut manifest = export_report(&report, out).stage(Stage::Export)?;
    for fitted in &report.fold0_models {
        let bundle = ModelBundle::new(
            &report.train_corpus,
            0,
            &report.classes,
            prepared.stats.clone(),
            fitted.clone(),
        );
        let rel = format!("models/{}_fold0.json", fitted.method);
        let path = out.join(&rel);
        fs::create_dir_all(out.join("models"))
            .map_err(|e| Error::io(out, e))
            .stage(Stage::Export)?;
        fs::write(&path, bundle.to_json().stage(Stage::Export)?)
            .map_err(|e| Error::io(&path, e))
            .stage(Stage::Export)?;
        manifest.files.push(rel);
    }
    write_json(out, "run_config.json", cfg, &mut manifest.files)?;
    write_json(
        out,
        "preprocessing.json",
        &preprocessing,
        &mut manifest.files,
    )?;

    let mut triad_summaries = Vec::new();
    for triad in &triad_reports {
        let sub = format!("triads/{}", file_stem(&triad.name));
        let m = export_report(triad, &out.join(&sub)).stage(Stage::Export)?;
        manifest
            .files
            .extend(m.files.iter().map(|f| format!("{sub}/{f}")));
        manifest.files.push(format!("{sub}/manifest.json"));
        triad_summaries.push((triad.name.clone(), triad.summary().stage(Stage::Export)?));
    }
    manifest.files.sort();
    manifest.save(out).stage(Stage::Export)?;

    Ok(RunOutcome {
        manifest,
        summary: report.summary().stage(Stage::Export)?,
        triad_summaries,
    })
}

fn load_bundle(path: &Path) -> Result<ModelBundle, CliError> {
    ModelBundle::load(path)
        .map_err(|e| e.context(format!("model {}", path.display())))
        .stage(Stage::Ingestion)
}

/// Loads and preprocesses a corpus the way the bundle's training corpus was.
fn prepare_for(
    bundle: &ModelBundle,
    path: &Path,
    schema: Option<&Path>,
) -> Result<Corpus, CliError> {
    let raw = load_corpus(path, schema)?;
    let (prepared, _, removed) = bundle
        .preprocess
        .prepare(&raw)
        .stage(Stage::Preprocessing)?;
    if removed > 0 {
        info!("{}: removed {removed} outliers", raw.name);
    }
    Ok(prepared)
}

pub fn cmd_attribute(args: &AttributeArgs) -> Result<ClassAttribution, CliError> {
    let bundle = load_bundle(&args.model)?;
    let network = bundle
        .model
        .embedding
        .latent_network()
        .stage(Stage::Attribution)?
        .ok_or_else(|| {
            CliError::usage(
                Stage::Attribution,
                format!(
                    "{} models have no latent space to attribute",
                    bundle.model.method
                ),
            )
        })?;
    let corpus = prepare_for(&bundle, &args.corpus, args.schema.as_deref())?;
    let preds = bundle.model.predict(&corpus).stage(Stage::Attribution)?;
    let reference = build_reference(&corpus, &preds).stage(Stage::Attribution)?;
    info!("reference: {}", reference.provenance);
    let dim = usize::from(args.dim);
    let result = attribute_class(&network, &corpus, &preds, &reference, args.class, dim)
        .stage(Stage::Attribution)?;
    if result.no_true_positives {
        warn!(
            "no correctly classified {} samples; writing an empty table",
            args.class
        );
    }

    let grouping = FeatureGrouping::egemaps();
    let out = create_output(args.out.as_deref()).stage(Stage::Export)?;
    write_attribution_csv(out, std::slice::from_ref(&result), &grouping).stage(Stage::Export)?;
    if let Some(path) = &args.summary {
        write_group_summary(path, &result, &grouping)?;
    }
    Ok(result)
}

fn write_group_summary(
    path: &Path,
    result: &ClassAttribution,
    grouping: &FeatureGrouping,
) -> Result<(), CliError> {
    let mut sums: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for r in &result.results {
        for (group, score) in grouping.group_scores(&r.scores).stage(Stage::Attribution)? {
            let e = sums.entry(group).or_default();
            e.0 += score;
            e.1 += score.abs();
        }
    }
    let n = result.results.len().max(1) as f64;
    let mut text = String::from("group,mean_score,mean_abs_score,samples\n");
    for (group, (s, a)) in sums {
        text.push_str(&format!(
            "{group},{},{},{}\n",
            format_float(s / n),
            format_float(a / n),
            result.results.len()
        ));
    }
    fs::write(path, text)
        .map_err(|e| Error::io(path, e))
        .stage(Stage::Export)
}

pub fn cmd_export_latent(
    args: &ExportLatentArgs,
    env_out_dir: Option<String>,
) -> Result<Vec<PathBuf>, CliError> {
    let bundle = load_bundle(&args.model)?;
    let method = bundle.model.method;
    if bundle.model.embedding.output_dim() != 2 {
        return Err(CliError::usage(
            Stage::Export,
            format!("{method} models do not produce a 2-D embedding"),
        ));
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_out_dir(env_out_dir));
    fs::create_dir_all(&out)
        .map_err(|e| Error::io(&out, e))
        .stage(Stage::Export)?;
    let mut written = Vec::new();
    for path in &args.corpus {
        let corpus = prepare_for(&bundle, path, args.schema.as_deref())?;
        let set = LatentSet::from_embedding(method, &corpus.name, &bundle.model.embedding, &corpus)
            .stage(Stage::Export)?;
        let stem = out.join(format!("{method}_{}", file_stem(&corpus.name)));
        let csv_path = stem.with_extension("csv");
        let file = fs::File::create(&csv_path)
            .map_err(|e| Error::io(&csv_path, e))
            .stage(Stage::Export)?;
        write_latent_csv(&set, io::BufWriter::new(file)).stage(Stage::Export)?;
        let svg_path = stem.with_extension("svg");
        fs::write(&svg_path, latent_svg(&set))
            .map_err(|e| Error::io(&svg_path, e))
            .stage(Stage::Export)?;
        written.push(csv_path);
        written.push(svg_path);
    }
    Ok(written)
}

/// Prints the per-method summary of one report.
pub fn print_summary<W: Write>(mut w: W, title: &str, rows: &[SummaryRow]) -> io::Result<()> {
    writeln!(w, "{title}")?;
    for r in rows {
        writeln!(
            w,
            "  {:<4} {:<16} uar {:.4} [{:.4}, {:.4}]  acc {:.4}  chance {:.4}",
            r.method.name(),
            r.dataset,
            r.uar.mean,
            r.uar.low,
            r.uar.high,
            r.accuracy_mean,
            r.chance
        )?;
    }
    Ok(())
}

/// Reads the env var that supplies the default output directory.
pub fn env_out_dir() -> Option<String> {
    std::env::var(OUT_DIR_ENV).ok()
}
