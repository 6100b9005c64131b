//! Interpretable speech-emotion recognition over eGeMAPS functionals.
//!
//! Undercomplete and denoising autoencoders compress the 88 functionals into
//! a 2-D latent plane. PCA and a linear SVC serve as references and as the
//! downstream classifier. DeepLIFT attributes each latent dimension back to
//! the input features.
//!
//! - [`dataset`]: CSV ingestion, preprocessing, folds, synthetic corpora
//! - [`nn`]: dense network engine (forward, backprop, MSE, Adam)
//! - [`autoencoder`]: UAE/DAE training and latent embeddings
//! - [`baselines`]: PCA and one-vs-rest linear SVC
//! - [`attribution`]: DeepLIFT Rescale attributions and feature grouping
//! - [`evaluation`]: metrics, cross-validation, triads and report export

pub mod attribution;
pub mod autoencoder;
pub mod baselines;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod nn;
mod seed;

pub use error::{Error, Result};
pub use seed::derive_seed;

/// Formats a float with 17 significant digits, enough to round-trip any f64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatted_floats_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 123456.789, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }
}
