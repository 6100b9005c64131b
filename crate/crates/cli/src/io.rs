use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use emolatent::dataset::{parse_corpus, ColumnSchema, Corpus};
use emolatent::Error;

use crate::error::{CliError, Stage, StageExt};

/// The sidecar schema for `csv`: `<stem>.schema.json` next to it, else a
/// `schema.json` in the same directory.
pub fn sidecar_schema(csv: &Path) -> Option<PathBuf> {
    let dir = csv.parent().unwrap_or(Path::new(""));
    let stem = csv.file_stem()?.to_string_lossy();
    [
        dir.join(format!("{stem}.schema.json")),
        dir.join("schema.json"),
    ]
    .into_iter()
    .find(|p| p.is_file())
}

/// Reads a corpus CSV with an explicit schema, a sidecar, or the canonical
/// column names.
pub fn load_corpus(path: &Path, schema: Option<&Path>) -> Result<Corpus, CliError> {
    let schema_path = schema
        .map(Path::to_path_buf)
        .or_else(|| sidecar_schema(path));
    let schema = match &schema_path {
        Some(p) => ColumnSchema::load(p)
            .map_err(|e| e.context(format!("schema {}", p.display())))
            .stage(Stage::Ingestion)?,
        None => ColumnSchema::default(),
    };
    parse_corpus(path, &schema)
        .map_err(|e| match e {
            Error::Io { .. } => e,
            _ => e.context(format!("corpus {}", path.display())),
        })
        .stage(Stage::Ingestion)
}

/// A buffered file, or standard output for `None`.
pub fn create_output(path: Option<&Path>) -> emolatent::Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let f = File::create(p).map_err(|e| Error::io(p, e))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}
