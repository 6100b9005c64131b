use std::path::Path;

use emolatent::dataset::{EmotionLabel, PreprocessStats};
use emolatent::evaluation::FittedMethod;
use emolatent::Error;
use serde::{Deserialize, Serialize};

const FORMAT: &str = "emolatent.bundle";
const VERSION: u32 = 1;

/// A fitted embedding + SVC together with the preprocessing statistics of
/// the corpus it was trained on, so new corpora can be prepared the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format: String,
    pub version: u32,
    pub train_corpus: String,
    pub fold: usize,
    pub classes: Vec<EmotionLabel>,
    pub preprocess: PreprocessStats,
    pub model: FittedMethod,
}

impl ModelBundle {
    pub fn new(
        train_corpus: &str,
        fold: usize,
        classes: &[EmotionLabel],
        preprocess: PreprocessStats,
        model: FittedMethod,
    ) -> Self {
        ModelBundle {
            format: FORMAT.into(),
            version: VERSION,
            train_corpus: train_corpus.into(),
            fold,
            classes: classes.to_vec(),
            preprocess,
            model,
        }
    }

    pub fn to_json(&self) -> emolatent::Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn load(path: &Path) -> emolatent::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bundle: ModelBundle = serde_json::from_str(&text)?;
        if bundle.format != FORMAT || bundle.version != VERSION {
            return Err(Error::Format(format!(
                "expected {FORMAT} v{VERSION}, found {} v{}",
                bundle.format, bundle.version
            )));
        }
        Ok(bundle)
    }
}
