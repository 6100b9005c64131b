//! Desk-scale stand-in for the licensed corpora.
//!
//! Each class is a Gaussian blob in a 2-D (activation, valence) plane. The
//! plane is rotated by a corpus-specific angle and pushed into 88 dimensions
//! through a fixed random linear map, then shifted and scaled per column so
//! the raw values look like unstandardized functionals.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Corpus, EmotionLabel, FeatureVector, LabeledSample};
use crate::error::{Error, Result};
use crate::features::FEATURE_DIM;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub label: EmotionLabel,
    /// (activation, valence) centre of the class.
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub name: String,
    pub language: String,
    pub classes: Vec<ClassSpec>,
    /// Rotation of the latent plane before embedding, in degrees.
    pub rotation_deg: f64,
    /// Stddev of i.i.d. Gaussian noise added per feature before column scaling.
    pub feature_noise: f64,
    /// Seed of the 2-D → 88-D map; corpora meant to be comparable share it.
    pub map_seed: u64,
}

fn isotropic(sd: f64) -> [[f64; 2]; 2] {
    [[sd * sd, 0.0], [0.0, sd * sd]]
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self::separable(250)
    }
}

impl SyntheticConfig {
    /// Four tight, well separated classes.
    pub fn separable(per_class: usize) -> Self {
        let spec = |label, mean| ClassSpec {
            label,
            mean,
            covariance: isotropic(0.5),
            count: per_class,
        };
        SyntheticConfig {
            name: "synthetic".into(),
            language: "en".into(),
            classes: vec![
                spec(EmotionLabel::Neutral, [-1.0, 1.5]),
                spec(EmotionLabel::Sad, [-3.0, -1.5]),
                spec(EmotionLabel::Happy, [1.5, 3.0]),
                spec(EmotionLabel::Angry, [3.0, -1.5]),
            ],
            rotation_deg: 0.0,
            feature_noise: 1.0,
            map_seed: 2021,
        }
    }

    /// Like `separable`, but happy is a broad blob centred on neutral that
    /// also reaches towards angry, so it is hard to tell apart.
    pub fn happy_overlap(per_class: usize) -> Self {
        let mut cfg = Self::separable(per_class);
        cfg.name = "synthetic-overlap".into();
        let happy = cfg
            .classes
            .iter_mut()
            .find(|c| c.label == EmotionLabel::Happy)
            .expect("separable preset has a happy class");
        happy.mean = [0.5, 0.5];
        happy.covariance = [[2.25, 0.0], [0.0, 1.0]];
        cfg
    }

    pub fn with_rotation(mut self, deg: f64) -> Self {
        self.rotation_deg = deg;
        self
    }

    pub fn total_count(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::InvalidArgument(
                "synthetic config has no classes".into(),
            ));
        }
        for c in &self.classes {
            if c.count == 0 {
                return Err(Error::InvalidArgument(format!(
                    "class {} must have at least one sample",
                    c.label
                )));
            }
            if !c.mean.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "class {} has a non-finite mean",
                    c.label
                )));
            }
            cholesky2(&c.covariance).map_err(|reason| Error::InvalidCovariance {
                label: c.label.to_string(),
                reason,
            })?;
        }
        if !(self.feature_noise >= 0.0 && self.feature_noise.is_finite()) {
            return Err(Error::InvalidArgument(
                "feature_noise must be finite and >= 0".into(),
            ));
        }
        if !self.rotation_deg.is_finite() {
            return Err(Error::InvalidArgument("rotation_deg must be finite".into()));
        }
        Ok(())
    }
}

/// Lower Cholesky factor of a 2×2 positive semi-definite matrix.
fn cholesky2(cov: &[[f64; 2]; 2]) -> std::result::Result<[[f64; 2]; 2], String> {
    let [[a, b], [c, d]] = *cov;
    if ![a, b, c, d].iter().all(|v| v.is_finite()) {
        return Err("non-finite entry".into());
    }
    let tol = 1e-12 * (a.abs() + d.abs()).max(1.0);
    if (b - c).abs() > tol {
        return Err("not symmetric".into());
    }
    if a < 0.0 || d < 0.0 || a * d - b * c < -tol {
        return Err("not positive semi-definite".into());
    }
    let l11 = a.sqrt();
    let (l21, l22) = if l11 > 0.0 {
        let l21 = b / l11;
        (l21, (d - l21 * l21).max(0.0).sqrt())
    } else {
        (0.0, d.sqrt())
    };
    Ok([[l11, 0.0], [l21, l22]])
}

/// The fixed linear embedding of the latent plane into feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMap {
    pub loadings: Vec<[f64; 2]>,
    pub offsets: Vec<f64>,
    pub scales: Vec<f64>,
}

impl LatentMap {
    pub fn from_seed(map_seed: u64) -> Self {
        let mut rng = seed::rng(map_seed);
        let mut loadings = Vec::with_capacity(FEATURE_DIM);
        let mut offsets = Vec::with_capacity(FEATURE_DIM);
        let mut scales = Vec::with_capacity(FEATURE_DIM);
        for _ in 0..FEATURE_DIM {
            loadings.push([rng.sample(StandardNormal), rng.sample(StandardNormal)]);
            offsets.push(20.0 * rng.sample::<f64, _>(StandardNormal));
            scales.push(rng.random_range(-2.0f64..2.0).exp());
        }
        LatentMap {
            loadings,
            offsets,
            scales,
        }
    }

    /// Noise-free feature vector for rotated latent coordinates `z`.
    pub fn image(&self, z: [f64; 2]) -> Vec<f64> {
        self.image_with_noise(z, |_| 0.0)
    }

    fn image_with_noise(&self, z: [f64; 2], mut noise: impl FnMut(usize) -> f64) -> Vec<f64> {
        (0..FEATURE_DIM)
            .map(|j| {
                let [l0, l1] = self.loadings[j];
                self.offsets[j] + self.scales[j] * (l0 * z[0] + l1 * z[1] + noise(j))
            })
            .collect()
    }
}

pub fn rotate(z: [f64; 2], deg: f64) -> [f64; 2] {
    let (s, c) = deg.to_radians().sin_cos();
    [c * z[0] - s * z[1], s * z[0] + c * z[1]]
}

/// Draws a corpus; samples are emitted class by class in config order.
pub fn generate_synthetic(config: &SyntheticConfig, seed: u64) -> Result<Corpus> {
    config.validate()?;
    let map = LatentMap::from_seed(config.map_seed);
    let mut rng = seed::rng(seed);
    let mut samples = Vec::with_capacity(config.total_count());
    for class in &config.classes {
        let l = cholesky2(&class.covariance).expect("validated");
        for _ in 0..class.count {
            let g: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let z = [
                class.mean[0] + l[0][0] * g[0],
                class.mean[1] + l[1][0] * g[0] + l[1][1] * g[1],
            ];
            let zr = rotate(z, config.rotation_deg);
            let noise = config.feature_noise;
            let values = map.image_with_noise(zr, |_| {
                let e: f64 = rng.sample(StandardNormal);
                noise * e
            });
            let idx = samples.len();
            samples.push(LabeledSample {
                sample_id: format!("{}-{:05}", config.name, idx),
                speaker_id: format!("{}-spk{}", config.name, idx % 10),
                features: FeatureVector::new(values)?,
                label: class.label,
                valence: Some(z[1]),
                activation: Some(z[0]),
            });
        }
    }
    Corpus::new(config.name.clone(), config.language.clone(), samples)
}
