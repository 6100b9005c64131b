use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentReport, LatentSet, Method};
use super::metrics::ConfusionMatrix;
use crate::attribution::{write_attribution_csv, FeatureGrouping};
use crate::dataset::EmotionLabel;
use crate::error::{Error, Result};
use crate::format_float;

/// Index of the files an export produced, with the run parameters needed to
/// interpret them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub train_corpus: String,
    pub classes: Vec<EmotionLabel>,
    pub chance: f64,
    pub seed: u64,
    pub k: usize,
    pub methods: Vec<Method>,
    pub datasets: Vec<String>,
    pub attribution_method: Option<Method>,
    pub attribution_reference_count: Option<usize>,
    /// Paths relative to the export directory, sorted.
    pub files: Vec<String>,
}

impl Manifest {
    /// Writes `manifest.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

/// Replaces characters that are awkward in file names.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::Writer::from_writer(w)
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::io("<csv output>", e.into_error()))?
        .flush()
        .map_err(|e| Error::io("<csv output>", e))
}

pub fn write_accuracy_csv<W: Write>(report: &ExperimentReport, writer: W) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record([
        "method",
        "dataset",
        "folds",
        "uar_mean",
        "uar_ci_low",
        "uar_ci_high",
        "accuracy_mean",
        "chance",
    ])?;
    for row in report.summary()? {
        w.write_record([
            row.method.name(),
            &row.dataset,
            &row.folds.to_string(),
            &format_float(row.uar.mean),
            &format_float(row.uar.low),
            &format_float(row.uar.high),
            &format_float(row.accuracy_mean),
            &format_float(row.chance),
        ])?;
    }
    finish(w)
}

pub fn write_fold_csv<W: Write>(report: &ExperimentReport, writer: W) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(["fold", "method", "dataset", "samples", "uar", "accuracy"])?;
    for e in &report.folds {
        w.write_record([
            &e.fold.to_string(),
            e.method.name(),
            &e.dataset,
            &e.samples.to_string(),
            &format_float(e.uar),
            &format_float(e.accuracy),
        ])?;
    }
    finish(w)
}

/// Long format: one row per (true, predicted) pair.
pub fn write_confusion_csv<W: Write>(matrix: &ConfusionMatrix, writer: W) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(["true_label", "predicted_label", "count", "normalized"])?;
    for (i, t) in matrix.classes.iter().enumerate() {
        for (j, p) in matrix.classes.iter().enumerate() {
            w.write_record([
                t.name(),
                p.name(),
                &matrix.counts[i][j].to_string(),
                &format_float(matrix.normalized[i][j]),
            ])?;
        }
    }
    finish(w)
}

/// Inverse of [`write_confusion_csv`].
pub fn read_confusion_csv<R: Read>(reader: R) -> Result<ConfusionMatrix> {
    let mut r = csv::Reader::from_reader(reader);
    let mut cells = Vec::new();
    let mut classes: Vec<EmotionLabel> = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != 4 {
            return Err(Error::Schema("confusion rows have four fields".into()));
        }
        let t: EmotionLabel = record[0].parse()?;
        let p: EmotionLabel = record[1].parse()?;
        let count: u64 = record[2]
            .parse()
            .map_err(|_| Error::Schema(format!("invalid count `{}`", &record[2])))?;
        let norm: f64 = record[3]
            .parse()
            .map_err(|_| Error::Schema(format!("invalid proportion `{}`", &record[3])))?;
        if !classes.contains(&t) {
            classes.push(t);
        }
        cells.push((t, p, count, norm));
    }
    let n = classes.len();
    if cells.len() != n * n {
        return Err(Error::Schema(format!(
            "expected {} confusion cells, found {}",
            n * n,
            cells.len()
        )));
    }
    let mut m = ConfusionMatrix::empty(&classes);
    for (t, p, count, norm) in cells {
        let i = classes
            .iter()
            .position(|&c| c == t)
            .expect("collected above");
        let j = classes.iter().position(|&c| c == p).ok_or_else(|| {
            Error::Schema(format!("predicted class {p} never appears as a true class"))
        })?;
        m.counts[i][j] = count;
        m.normalized[i][j] = norm;
    }
    Ok(m)
}

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

pub fn write_latent_csv<W: Write>(set: &LatentSet, writer: W) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record([
        "sample_id",
        "dim1",
        "dim2",
        "label",
        "corpus",
        "valence",
        "activation",
    ])?;
    for p in &set.points {
        w.write_record([
            p.sample_id.as_str(),
            &format_float(p.coords[0]),
            &format_float(p.coords[1]),
            p.label.name(),
            &p.corpus,
            &opt(p.valence),
            &opt(p.activation),
        ])?;
    }
    finish(w)
}

fn label_color(label: EmotionLabel) -> &'static str {
    match label {
        EmotionLabel::Neutral => "#7f7f7f",
        EmotionLabel::Sad => "#1f77b4",
        EmotionLabel::Happy => "#2ca02c",
        EmotionLabel::Angry => "#d62728",
    }
}

/// A dependency-free scatter plot of a latent set, coloured by label.
pub fn latent_svg(set: &LatentSet) -> String {
    const SIZE: f64 = 480.0;
    const MARGIN: f64 = 48.0;
    let range = |d: usize| {
        let (lo, hi) = set
            .points
            .iter()
            .map(|p| p.coords[d])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        if !lo.is_finite() {
            (-1.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 1.0, hi + 1.0)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = range(0);
    let (y0, y1) = range(1);
    let span = SIZE - 2.0 * MARGIN;
    let px = |v: f64| MARGIN + (v - x0) / (x1 - x0) * span;
    let py = |v: f64| SIZE - MARGIN - (v - y0) / (y1 - y0) * span;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{} latent space: {}</text>"#,
        SIZE / 2.0,
        set.method,
        xml_escape(&set.dataset)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{span}" height="{span}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">Dim 1 [{x0:.3}, {x1:.3}]</text>"#,
        SIZE / 2.0,
        SIZE - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">Dim 2 [{y0:.3}, {y1:.3}]</text>"#,
        SIZE / 2.0
    );
    for p in &set.points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}" fill-opacity="0.7"/>"#,
            px(p.coords[0]),
            py(p.coords[1]),
            label_color(p.label)
        );
    }
    for (i, label) in EmotionLabel::ALL.iter().enumerate() {
        let y = MARGIN + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{}" r="4" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            SIZE - MARGIN - 70.0,
            y - 4.0,
            label_color(*label),
            SIZE - MARGIN - 60.0,
            y,
            label.name()
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn write_file(
    dir: &Path,
    rel: &str,
    files: &mut Vec<String>,
    body: impl FnOnce(&mut Vec<u8>) -> Result<()>,
) -> Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut buf = Vec::new();
    body(&mut buf)?;
    fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
    files.push(rel.to_string());
    Ok(())
}

/// Writes every table and figure of `report` under `out_dir` and returns the
/// manifest, which is also saved as `manifest.json`.
pub fn export_report(report: &ExperimentReport, out_dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = Vec::new();
    write_file(out_dir, "accuracy.csv", &mut files, |b| {
        write_accuracy_csv(report, b)
    })?;
    write_file(out_dir, "accuracy_folds.csv", &mut files, |b| {
        write_fold_csv(report, b)
    })?;
    for c in &report.confusions {
        let rel = format!("confusion/{}_{}.csv", c.method, file_stem(&c.dataset));
        write_file(out_dir, &rel, &mut files, |b| {
            write_confusion_csv(&c.matrix, b)
        })?;
    }
    for set in &report.latents {
        let stem = format!("latent/{}_{}", set.method, file_stem(&set.dataset));
        write_file(out_dir, &format!("{stem}.csv"), &mut files, |b| {
            write_latent_csv(set, b)
        })?;
        write_file(out_dir, &format!("{stem}.svg"), &mut files, |b| {
            b.extend_from_slice(latent_svg(set).as_bytes());
            Ok(())
        })?;
    }
    if let Some(run) = &report.attribution {
        let grouping = FeatureGrouping::egemaps();
        for set in &run.sets {
            let rel = format!("attribution/{}_{}.csv", set.class.name(), set.target_dim);
            write_file(out_dir, &rel, &mut files, |b| {
                write_attribution_csv(b, std::slice::from_ref(set), &grouping)
            })?;
        }
    }
    files.sort();
    let manifest = Manifest {
        name: report.name.clone(),
        train_corpus: report.train_corpus.clone(),
        classes: report.classes.clone(),
        chance: report.chance,
        seed: report.config.seed,
        k: report.config.k,
        methods: report.config.methods.clone(),
        datasets: report.datasets.clone(),
        attribution_method: report.attribution.as_ref().map(|a| a.method),
        attribution_reference_count: report.attribution.as_ref().map(|a| a.reference.count),
        files,
    };
    manifest.save(out_dir)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::experiment::{
        ExperimentConfig, FoldEntry, LatentPoint, MethodConfusion,
    };
    use crate::evaluation::metrics::confusion_matrix;
    use EmotionLabel::*;

    fn entry(fold: usize, method: Method, dataset: &str, uar: f64) -> FoldEntry {
        FoldEntry {
            fold,
            method,
            dataset: dataset.into(),
            samples: 10,
            uar,
            accuracy: uar,
        }
    }

    #[test]
    fn empty_report_exports_header_only_tables() {
        let dir = tempfile::tempdir().unwrap();
        let report = ExperimentReport::empty("all", &EmotionLabel::ALL, ExperimentConfig::new(1));
        let m = export_report(&report, dir.path()).unwrap();
        assert_eq!(m.files, ["accuracy.csv", "accuracy_folds.csv"]);
        let acc = fs::read_to_string(dir.path().join("accuracy.csv")).unwrap();
        assert_eq!(acc.lines().count(), 1);
        assert!(dir.path().join("manifest.json").exists());
    }

    #[test]
    fn one_summary_row_per_method_and_dataset() {
        let mut cfg = ExperimentConfig::new(1);
        cfg.methods = vec![Method::Pca, Method::Dae];
        let mut report = ExperimentReport::empty("all", &EmotionLabel::ALL, cfg);
        report.datasets = vec!["train".into(), "valid".into(), "emodb".into()];
        for fold in 0..2 {
            for m in [Method::Pca, Method::Dae] {
                for d in ["train", "valid", "emodb"] {
                    report
                        .folds
                        .push(entry(fold, m, d, 0.5 + 0.1 * fold as f64));
                }
            }
        }
        let mut buf = Vec::new();
        write_accuracy_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 6);
        assert!(text.lines().nth(1).unwrap().starts_with("pca,train,2,5.5"));
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .ends_with(",2.5000000000000000e-1"));
    }

    #[test]
    fn confusion_csv_round_trips_exactly() {
        let preds = [Neutral, Sad, Sad, Angry, Happy, Neutral, Angry];
        let labels = [Neutral, Sad, Neutral, Angry, Happy, Happy, Sad];
        let cm = confusion_matrix(&preds, &labels, &EmotionLabel::ALL).unwrap();
        let mut buf = Vec::new();
        write_confusion_csv(&cm, &mut buf).unwrap();
        assert_eq!(read_confusion_csv(buf.as_slice()).unwrap(), cm);
    }

    #[test]
    fn exports_are_listed_and_named_by_method_and_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(1);
        cfg.methods = vec![Method::Uae];
        let mut report = ExperimentReport::empty("all", &[Neutral, Angry], cfg);
        report.datasets = vec!["valid".into(), "cafe fr".into()];
        report.confusions.push(MethodConfusion {
            method: Method::Uae,
            dataset: "cafe fr".into(),
            matrix: confusion_matrix(&[Neutral], &[Angry], &[Neutral, Angry]).unwrap(),
        });
        report.latents.push(LatentSet {
            method: Method::Uae,
            dataset: "valid".into(),
            points: vec![LatentPoint {
                sample_id: "s<1>".into(),
                coords: [0.5, -1.0],
                label: Angry,
                corpus: "iemocap".into(),
                valence: None,
                activation: Some(2.0),
            }],
        });
        let m = export_report(&report, dir.path()).unwrap();
        assert_eq!(
            m.files,
            [
                "accuracy.csv",
                "accuracy_folds.csv",
                "confusion/uae_cafe_fr.csv",
                "latent/uae_valid.csv",
                "latent/uae_valid.svg"
            ]
        );
        let latent = fs::read_to_string(dir.path().join("latent/uae_valid.csv")).unwrap();
        assert_eq!(
            latent.lines().nth(1).unwrap(),
            "s<1>,5.0000000000000000e-1,-1.0000000000000000e0,angry,iemocap,,2.0000000000000000e0"
        );
        let svg = fs::read_to_string(dir.path().join("latent/uae_valid.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        let manifest: Manifest =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest, m);
    }
}
