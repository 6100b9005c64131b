//! Undercomplete (UAE) and denoising (DAE) autoencoders with a 2-D latent.
//!
//! Both share one architecture; the DAE only differs in corrupting its
//! training inputs with additive Gaussian noise while reconstructing the
//! clean input. Inference never applies noise.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Corpus, EmotionLabel};
use crate::error::{Error, Result};
use crate::features::FEATURE_DIM;
use crate::nn::{
    backward, forward, init_network, mse_loss, Activation, AdamConfig, AdamState, LayerSpec,
    Matrix, NetworkModel,
};
use crate::seed::{self, derive_seed};

pub const LATENT_DIM: usize = 2;

const STREAM_INIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_NOISE: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    /// Encoder layer widths from input to latent, e.g. `[88, 32, 8, 2]`.
    /// The decoder mirrors them.
    pub encoder_widths: Vec<usize>,
    pub hidden_activation: Activation,
    /// 0 trains a UAE; 1 is the DAE's unit-variance corruption.
    pub noise_std: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl AutoencoderConfig {
    pub fn uae(seed: u64) -> Self {
        AutoencoderConfig {
            encoder_widths: vec![FEATURE_DIM, 32, 8, LATENT_DIM],
            hidden_activation: Activation::Tanh,
            noise_std: 0.0,
            epochs: 50,
            batch_size: 64,
            lr: 1e-3,
            seed,
        }
    }

    pub fn dae(seed: u64) -> Self {
        AutoencoderConfig {
            noise_std: 1.0,
            ..Self::uae(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.encoder_widths;
        if w.len() < 2 || w[0] != FEATURE_DIM || w[w.len() - 1] != LATENT_DIM {
            return Err(Error::InvalidArgument(format!(
                "encoder widths must run from {FEATURE_DIM} to {LATENT_DIM}, got {w:?}"
            )));
        }
        if w.contains(&0) {
            return Err(Error::InvalidArgument(
                "layer widths must be positive".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "invalid learning rate {}",
                self.lr
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "invalid noise_std {}",
                self.noise_std
            )));
        }
        Ok(())
    }

    fn layer_specs(&self) -> Vec<LayerSpec> {
        let stack = |widths: &[usize]| -> Vec<LayerSpec> {
            let n = widths.len() - 1;
            widths
                .windows(2)
                .enumerate()
                .map(|(i, p)| {
                    let act = if i + 1 == n {
                        Activation::Linear
                    } else {
                        self.hidden_activation
                    };
                    LayerSpec::new(p[0], p[1], act)
                })
                .collect()
        };
        let mirrored: Vec<usize> = self.encoder_widths.iter().rev().copied().collect();
        let mut specs = stack(&self.encoder_widths);
        specs.extend(stack(&mirrored));
        specs
    }

    fn encoder_depth(&self) -> usize {
        self.encoder_widths.len() - 1
    }
}

/// Source of standard-normal draws for input corruption.
pub trait NoiseSource {
    fn standard_normal(&mut self) -> f64;
}

pub struct GaussianNoise(ChaCha8Rng);

impl GaussianNoise {
    pub fn new(seed: u64) -> Self {
        GaussianNoise(seed::rng(seed))
    }
}

impl NoiseSource for GaussianNoise {
    fn standard_normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }
}

/// A noise stream that always yields zero.
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn standard_normal(&mut self) -> f64 {
        0.0
    }
}

/// `input + noise_std · g` with `g` drawn i.i.d. from `noise`.
pub fn corrupt(input: &[f64], noise_std: f64, noise: &mut dyn NoiseSource) -> Vec<f64> {
    if noise_std == 0.0 {
        return input.to_vec();
    }
    input
        .iter()
        .map(|&x| x + noise_std * noise.standard_normal())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedAutoencoder {
    pub encoder: NetworkModel,
    pub decoder: NetworkModel,
    pub config: AutoencoderConfig,
    /// Mean training MSE per epoch.
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentEmbedding {
    pub sample_id: String,
    pub coords: [f64; 2],
    pub label: EmotionLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub outputs: Vec<Vec<f64>>,
    pub per_sample_mse: Vec<f64>,
    pub mean_mse: f64,
}

const AE_FORMAT: &str = "emolatent.autoencoder";
const AE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct AutoencoderDocument {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: TrainedAutoencoder,
}

impl TrainedAutoencoder {
    pub fn from_parts(
        encoder: NetworkModel,
        decoder: NetworkModel,
        config: AutoencoderConfig,
        loss_history: Vec<f64>,
    ) -> Result<Self> {
        encoder.validate()?;
        decoder.validate()?;
        if encoder.input_dim != FEATURE_DIM
            || encoder.output_dim != LATENT_DIM
            || decoder.input_dim != LATENT_DIM
            || decoder.output_dim != FEATURE_DIM
        {
            return Err(Error::Format(format!(
                "autoencoder must map {FEATURE_DIM} → {LATENT_DIM} → {FEATURE_DIM}"
            )));
        }
        Ok(TrainedAutoencoder {
            encoder,
            decoder,
            config,
            loss_history,
        })
    }

    /// The untrained network `train` would start from.
    pub fn initial(config: &AutoencoderConfig) -> Result<Self> {
        config.validate()?;
        let net = init_network(
            &config.layer_specs(),
            derive_seed(config.seed, &[STREAM_INIT]),
        )?;
        let (encoder, decoder) = net.split_at(config.encoder_depth())?;
        Self::from_parts(encoder, decoder, config.clone(), Vec::new())
    }

    pub fn latent(&self, x: &[f64]) -> Result<[f64; 2]> {
        let z = self.encoder.predict(x)?;
        Ok([z[0], z[1]])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&AutoencoderDocument {
            format: AE_FORMAT.into(),
            version: AE_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: AutoencoderDocument = serde_json::from_str(text)?;
        if doc.format != AE_FORMAT || doc.version != AE_VERSION {
            return Err(Error::Format(format!(
                "expected {AE_FORMAT} v{AE_VERSION}, found {} v{}",
                doc.format, doc.version
            )));
        }
        let m = doc.model;
        Self::from_parts(m.encoder, m.decoder, m.config, m.loss_history)
    }
}

/// Trains on a standardized corpus with the config's own noise stream.
pub fn train(corpus: &Corpus, config: &AutoencoderConfig) -> Result<TrainedAutoencoder> {
    let mut noise = GaussianNoise::new(derive_seed(config.seed, &[STREAM_NOISE]));
    train_with_noise(corpus, config, &mut noise)
}

/// Minibatch Adam on the reconstruction MSE against the clean inputs.
pub fn train_with_noise(
    corpus: &Corpus,
    config: &AutoencoderConfig,
    noise: &mut dyn NoiseSource,
) -> Result<TrainedAutoencoder> {
    if corpus.is_empty() {
        return Err(Error::Empty(
            "cannot train an autoencoder on an empty corpus",
        ));
    }
    let init = TrainedAutoencoder::initial(config)?;
    let mut net = init.encoder.chain(&init.decoder)?;
    let mut adam = AdamState::for_network(
        &net,
        AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        },
    );
    let mut shuffle = seed::rng(derive_seed(config.seed, &[STREAM_SHUFFLE]));
    let rows = corpus.feature_rows();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let clean: Vec<&[f64]> = chunk.iter().map(|&i| rows[i]).collect();
            let noisy: Vec<Vec<f64>> = clean
                .iter()
                .map(|x| corrupt(x, config.noise_std, noise))
                .collect();
            let input = Matrix::from_rows(&noisy, FEATURE_DIM)?;
            let target = Matrix::from_rows(&clean, FEATURE_DIM)?;
            let trace = forward(&net, &input)?;
            let loss = mse_loss(trace.output(), &target)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            let grads = backward(&net, &trace, &target)?;
            adam.step_network(&mut net, &grads)?;
            total += loss * chunk.len() as f64;
        }
        let mean = total / rows.len() as f64;
        if !mean.is_finite() || !net.flat_params().iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        log::debug!("epoch {epoch}: mse {mean:.6}");
        history.push(mean);
    }

    let (encoder, decoder) = net.split_at(config.encoder_depth())?;
    TrainedAutoencoder::from_parts(encoder, decoder, config.clone(), history)
}

/// Noise-free 2-D embeddings, one per sample, in corpus order.
pub fn encode(model: &TrainedAutoencoder, corpus: &Corpus) -> Result<Vec<LatentEmbedding>> {
    corpus
        .samples()
        .iter()
        .map(|s| {
            Ok(LatentEmbedding {
                sample_id: s.sample_id.clone(),
                coords: model.latent(s.features.as_slice())?,
                label: s.label,
            })
        })
        .collect()
}

pub fn reconstruct(model: &TrainedAutoencoder, corpus: &Corpus) -> Result<Reconstruction> {
    if corpus.is_empty() {
        return Err(Error::Empty("cannot reconstruct an empty corpus"));
    }
    let mut outputs = Vec::with_capacity(corpus.len());
    let mut per_sample_mse = Vec::with_capacity(corpus.len());
    for s in corpus.samples() {
        let x = s.features.as_slice();
        let out = model.decoder.predict(&model.encoder.predict(x)?)?;
        per_sample_mse.push(mse_loss(
            &Matrix::from_rows(&[&out], FEATURE_DIM)?,
            &Matrix::from_rows(&[x], FEATURE_DIM)?,
        )?);
        outputs.push(out);
    }
    let mean_mse = mse_loss(
        &Matrix::from_rows(&outputs, FEATURE_DIM)?,
        &Matrix::from_rows(&corpus.feature_rows(), FEATURE_DIM)?,
    )?;
    Ok(Reconstruction {
        outputs,
        per_sample_mse,
        mean_mse,
    })
}
