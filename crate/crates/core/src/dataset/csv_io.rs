use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;

use super::{Corpus, EmotionLabel, FeatureVector, LabeledSample};
use crate::error::{Error, Result};
use crate::features::{EGEMAPS_FEATURES, FEATURE_DIM};
use crate::format_float;

/// Maps the canonical corpus fields onto CSV header names.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSchema {
    pub label: String,
    pub valence: String,
    pub activation: String,
    pub speaker: String,
    pub id: String,
    /// CSV header names of the 88 feature columns, in canonical order.
    pub features: Vec<String>,
    /// Columns present in the file that are neither features nor metadata.
    pub ignore: Vec<String>,
    pub language: Option<String>,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            label: "label".into(),
            valence: "valence".into(),
            activation: "activation".into(),
            speaker: "speaker".into(),
            id: "id".into(),
            features: EGEMAPS_FEATURES.iter().map(|s| s.to_string()).collect(),
            ignore: Vec::new(),
            language: None,
        }
    }
}

/// On-disk `schema.json` sidecar. Every field is optional; `features` maps
/// canonical eGeMAPS names to the header names used by the file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    label: Option<String>,
    valence: Option<String>,
    activation: Option<String>,
    speaker: Option<String>,
    id: Option<String>,
    #[serde(default)]
    features: HashMap<String, String>,
    #[serde(default)]
    ignore: Vec<String>,
    language: Option<String>,
}

impl ColumnSchema {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SchemaFile = serde_json::from_str(text)?;
        let mut schema = ColumnSchema::default();
        for canonical in file.features.keys() {
            if !EGEMAPS_FEATURES.contains(&canonical.as_str()) {
                return Err(Error::Schema(format!(
                    "schema remaps unknown feature {canonical:?}"
                )));
            }
        }
        for (slot, name) in schema.features.iter_mut().zip(EGEMAPS_FEATURES) {
            if let Some(renamed) = file.features.get(name) {
                *slot = renamed.clone();
            }
        }
        let set = |slot: &mut String, v: Option<String>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut schema.label, file.label);
        set(&mut schema.valence, file.valence);
        set(&mut schema.activation, file.activation);
        set(&mut schema.speaker, file.speaker);
        set(&mut schema.id, file.id);
        schema.ignore = file.ignore;
        schema.language = file.language;
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }
}

/// Reads a corpus CSV. The corpus is named after the file stem.
pub fn parse_corpus(path: &Path, schema: &ColumnSchema) -> Result<Corpus> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".into());
    parse_corpus_from(file, &name, schema)
}

pub fn parse_corpus_from<R: Read>(reader: R, name: &str, schema: &ColumnSchema) -> Result<Corpus> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();

    let mut position = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        if position.insert(h.to_string(), i).is_some() {
            return Err(Error::Schema(format!("duplicate column {h:?}")));
        }
    }

    let missing: Vec<&str> = schema
        .features
        .iter()
        .filter(|f| !position.contains_key(f.as_str()))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "missing {} feature column(s): {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    let label_col = *position
        .get(&schema.label)
        .ok_or_else(|| Error::Schema(format!("missing label column {:?}", schema.label)))?;

    let known: HashSet<&str> = schema
        .features
        .iter()
        .chain([
            &schema.label,
            &schema.valence,
            &schema.activation,
            &schema.speaker,
            &schema.id,
        ])
        .chain(schema.ignore.iter())
        .map(String::as_str)
        .collect();
    let extra: Vec<&str> = headers.iter().filter(|h| !known.contains(h)).collect();
    if !extra.is_empty() {
        return Err(Error::Schema(format!(
            "unexpected column(s): {}",
            extra.join(", ")
        )));
    }

    let feature_cols: Vec<usize> = schema.features.iter().map(|f| position[f]).collect();
    let valence_col = position.get(&schema.valence).copied();
    let activation_col = position.get(&schema.activation).copied();
    let speaker_col = position.get(&schema.speaker).copied();
    let id_col = position.get(&schema.id).copied();

    let parse_cell = |row: usize, col: usize, cell: &str| -> Result<f64> {
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::InvalidNumber {
                row,
                column: col + 1,
                name: headers[col].to_string(),
                value: cell.to_string(),
            }),
        }
    };
    let optional =
        |row: usize, col: Option<usize>, record: &csv::StringRecord| -> Result<Option<f64>> {
            match col.map(|c| (c, &record[c])) {
                Some((c, cell)) if !cell.is_empty() => parse_cell(row, c, cell).map(Some),
                _ => Ok(None),
            }
        };

    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let mut values = Vec::with_capacity(FEATURE_DIM);
        for &c in &feature_cols {
            values.push(parse_cell(row, c, &record[c])?);
        }
        let label: EmotionLabel = record[label_col]
            .parse()
            .map_err(|e: Error| e.context(format!("row {row}")))?;
        samples.push(LabeledSample {
            sample_id: id_col
                .map(|c| record[c].to_string())
                .unwrap_or_else(|| format!("row{row}")),
            speaker_id: speaker_col
                .map(|c| record[c].to_string())
                .unwrap_or_default(),
            features: FeatureVector::new(values)?,
            label,
            valence: optional(row, valence_col, &record)?,
            activation: optional(row, activation_col, &record)?,
        });
    }
    if samples.is_empty() {
        return Err(Error::Empty("corpus has no data rows"));
    }
    Corpus::new(
        name,
        schema.language.clone().unwrap_or_else(|| "unknown".into()),
        samples,
    )
}

/// Writes the canonical CSV layout: metadata columns, then the 88 features.
pub fn write_corpus<W: Write>(corpus: &Corpus, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["id", "speaker", "label", "valence", "activation"];
    header.extend(EGEMAPS_FEATURES);
    wtr.write_record(&header)?;
    let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    for s in corpus.samples() {
        let mut record = vec![
            s.sample_id.clone(),
            s.speaker_id.clone(),
            s.label.name().to_string(),
            opt(s.valence),
            opt(s.activation),
        ];
        record.extend(s.features.as_slice().iter().map(|&v| format_float(v)));
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_text(rows: &[(Vec<String>, &str)]) -> String {
        let mut out = EGEMAPS_FEATURES.join(",");
        out.push_str(",label\n");
        for (values, label) in rows {
            out.push_str(&values.join(","));
            out.push(',');
            out.push_str(label);
            out.push('\n');
        }
        out
    }

    fn row(v: f64) -> Vec<String> {
        (0..FEATURE_DIM)
            .map(|j| (v + j as f64).to_string())
            .collect()
    }

    #[test]
    fn three_valid_rows() {
        let text = csv_text(&[
            (row(0.0), "neutral"),
            (row(1.0), "Sad"),
            (row(2.0), "ANGRY"),
        ]);
        let c = parse_corpus_from(text.as_bytes(), "t", &ColumnSchema::default()).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.samples()[1].label, EmotionLabel::Sad);
        assert_eq!(c.samples()[2].features.as_slice()[5], 7.0);
        assert_eq!(c.samples()[0].sample_id, "row1");
        assert_eq!(c.samples()[0].valence, None);
    }

    #[test]
    fn nan_cell_reports_row_and_column() {
        let mut bad = row(0.0);
        bad[6] = "NaN".into();
        let text = csv_text(&[(bad, "neutral")]);
        let err = parse_corpus_from(text.as_bytes(), "t", &ColumnSchema::default()).unwrap_err();
        match err {
            Error::InvalidNumber {
                row,
                column,
                ref name,
                ..
            } => {
                assert_eq!(row, 1);
                assert_eq!(column, 7);
                assert_eq!(name, EGEMAPS_FEATURES[6]);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unknown_label_rejected() {
        let text = csv_text(&[(row(0.0), "fear")]);
        let err = parse_corpus_from(text.as_bytes(), "t", &ColumnSchema::default()).unwrap_err();
        assert!(err.to_string().contains("unknown emotion label"));
        assert!(matches!(err.root(), Error::UnknownLabel(_)));
    }

    #[test]
    fn missing_and_extra_columns_rejected() {
        let text = "label\nneutral\n";
        let err = parse_corpus_from(text.as_bytes(), "t", &ColumnSchema::default()).unwrap_err();
        assert!(err.to_string().contains("missing 88 feature column"));

        let mut text = EGEMAPS_FEATURES.join(",");
        text.push_str(",label,frameTime\n");
        text.push_str(&row(0.0).join(","));
        text.push_str(",sad,0\n");
        let err = parse_corpus_from(text.as_bytes(), "t", &ColumnSchema::default()).unwrap_err();
        assert!(err.to_string().contains("frameTime"));

        let schema = ColumnSchema {
            ignore: vec!["frameTime".into()],
            ..ColumnSchema::default()
        };
        assert_eq!(
            parse_corpus_from(text.as_bytes(), "t", &schema)
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn empty_corpus_rejected() {
        let text = csv_text(&[]);
        assert!(matches!(
            parse_corpus_from(text.as_bytes(), "t", &ColumnSchema::default()),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn schema_sidecar_remaps_columns() {
        let schema = ColumnSchema::from_json_str(
            r#"{"label": "emotion", "features": {"loudness_sma3_amean": "loud"}, "language": "de"}"#,
        )
        .unwrap();
        assert_eq!(schema.label, "emotion");
        assert_eq!(schema.features[10], "loud");
        assert_eq!(schema.features[11], EGEMAPS_FEATURES[11]);

        let mut text = schema.features.join(",");
        text.push_str(",emotion\n");
        text.push_str(&row(0.0).join(","));
        text.push_str(",happy\n");
        let c = parse_corpus_from(text.as_bytes(), "t", &schema).unwrap();
        assert_eq!(c.language, "de");
        assert_eq!(c.samples()[0].features.as_slice()[10], 10.0);

        assert!(ColumnSchema::from_json_str(r#"{"features": {"nope": "x"}}"#).is_err());
    }

    #[test]
    fn optional_columns_parsed() {
        let mut text = String::from("id,speaker,valence,activation,label,");
        text.push_str(&EGEMAPS_FEATURES.join(","));
        text.push('\n');
        text.push_str("u1,spk3,0.5,,angry,");
        text.push_str(&row(0.0).join(","));
        text.push('\n');
        let c = parse_corpus_from(text.as_bytes(), "t", &ColumnSchema::default()).unwrap();
        let s = &c.samples()[0];
        assert_eq!(s.sample_id, "u1");
        assert_eq!(s.speaker_id, "spk3");
        assert_eq!(s.valence, Some(0.5));
        assert_eq!(s.activation, None);
    }

    #[test]
    fn duplicate_ids_in_file_rejected() {
        let mut text = String::from("id,label,");
        text.push_str(&EGEMAPS_FEATURES.join(","));
        text.push('\n');
        for _ in 0..2 {
            text.push_str("same,sad,");
            text.push_str(&row(0.0).join(","));
            text.push('\n');
        }
        assert!(matches!(
            parse_corpus_from(text.as_bytes(), "t", &ColumnSchema::default()),
            Err(Error::DuplicateSampleId(_))
        ));
    }
}
