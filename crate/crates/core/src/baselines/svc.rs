use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::dataset::EmotionLabel;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvcConfig {
    /// Hinge-loss weight `C` in `½‖w‖² + C Σ hinge`; larger means weaker
    /// regularization.
    pub c: f64,
    /// Maximum passes of dual coordinate descent per binary problem.
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SvcConfig {
    fn default() -> Self {
        SvcConfig {
            c: 1.0,
            iterations: 1000,
            seed: 0,
        }
    }
}

/// One-vs-rest linear SVC; one hyperplane per class seen in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvcModel {
    pub classes: Vec<EmotionLabel>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub dim: usize,
    pub config: SvcConfig,
    /// Fraction of training samples the fitted model classifies correctly.
    pub training_accuracy: f64,
}

const SVC_FORMAT: &str = "emolatent.svc";
const SVC_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SvcDocument {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: SvcModel,
}

impl SvcModel {
    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b)
            .collect()
    }

    /// Highest decision value wins; ties go to the earlier class in fixed order.
    pub fn predict_one(&self, x: &[f64]) -> EmotionLabel {
        let scores = self.decision_values(x);
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        self.classes[best]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SvcDocument {
            format: SVC_FORMAT.into(),
            version: SVC_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SvcDocument = serde_json::from_str(text)?;
        if doc.format != SVC_FORMAT || doc.version != SVC_VERSION {
            return Err(Error::Format(format!(
                "expected {SVC_FORMAT} v{SVC_VERSION}, found {} v{}",
                doc.format, doc.version
            )));
        }
        Ok(doc.model)
    }
}

/// Primal objective `½(‖w‖² + b²) + C Σ max(0, 1 − yᵢ(w·xᵢ + b))`.
///
/// The bias enters as the weight of a constant unit feature, so it carries
/// the same penalty as the other weights.
pub fn svc_objective<R: AsRef<[f64]>>(w: &[f64], b: f64, x: &[R], y: &[f64], c: f64) -> f64 {
    let reg: f64 = 0.5 * (w.iter().map(|v| v * v).sum::<f64>() + b * b);
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let f: f64 = w.iter().zip(xi.as_ref()).map(|(a, v)| a * v).sum::<f64>() + b;
            (1.0 - yi * f).max(0.0)
        })
        .sum();
    reg + c * hinge
}

const DUAL_TOLERANCE: f64 = 1e-8;

/// Dual coordinate descent for the binary hinge-loss SVM with the bias as
/// an augmented unit feature. Coordinates are visited in a seeded random
/// order each pass; stops when the projected-gradient spread falls below
/// tolerance or after `passes` passes.
fn fit_binary(
    x: &[Vec<f64>],
    y: &[f64],
    c: f64,
    passes: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, f64) {
    let n = x.len();
    let d = x[0].len();
    let q_diag: Vec<f64> = x
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..passes {
        order.shuffle(rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let xi = &x[i];
            let f: f64 = w.iter().zip(xi).map(|(a, v)| a * v).sum::<f64>() + b;
            let grad = y[i] * f - 1.0;
            let pg = if alpha[i] == 0.0 {
                grad.min(0.0)
            } else if alpha[i] == c {
                grad.max(0.0)
            } else {
                grad
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - grad / q_diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * y[i];
                for (wj, v) in w.iter_mut().zip(xi) {
                    *wj += step * v;
                }
                b += step;
            }
        }
        if pg_max - pg_min < DUAL_TOLERANCE {
            break;
        }
    }
    (w, b)
}

/// One-vs-rest linear SVC, one binary problem per class in fixed order.
///
/// The data are centred before optimization and the shift is folded back
/// into the biases, so fits on translated data give the same hyperplanes.
/// `svc_objective` is minimized in that centred frame.
pub fn svc_fit<R: AsRef<[f64]>>(
    embeddings: &[R],
    labels: &[EmotionLabel],
    config: &SvcConfig,
) -> Result<SvcModel> {
    if embeddings.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: embeddings.len(),
        });
    }
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "SVC C must be positive, got {}",
            config.c
        )));
    }
    let mut classes: Vec<EmotionLabel> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidArgument(
            "SVC needs at least two classes in the training data".into(),
        ));
    }
    let dim = embeddings[0].as_ref().len();
    if let Some(bad) = embeddings.iter().find(|e| e.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.as_ref().len(),
        });
    }
    if let Some(i) = embeddings
        .iter()
        .flat_map(|e| e.as_ref().iter())
        .position(|v| !v.is_finite())
    {
        return Err(Error::NonFinite(i));
    }

    let n = embeddings.len() as f64;
    let mut mean = vec![0.0; dim];
    for e in embeddings {
        for (m, v) in mean.iter_mut().zip(e.as_ref()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let centered: Vec<Vec<f64>> = embeddings
        .iter()
        .map(|e| e.as_ref().iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();

    let mut rng = seed::rng(config.seed);
    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    for &class in &classes {
        let y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == class { 1.0 } else { -1.0 })
            .collect();
        let (w, b) = fit_binary(&centered, &y, config.c, config.iterations, &mut rng);
        let shift: f64 = w.iter().zip(&mean).map(|(a, m)| a * m).sum();
        biases.push(b - shift);
        weights.push(w);
    }

    let mut model = SvcModel {
        classes,
        weights,
        biases,
        dim,
        config: *config,
        training_accuracy: 0.0,
    };
    let correct = embeddings
        .iter()
        .zip(labels)
        .filter(|(e, &l)| model.predict_one(e.as_ref()) == l)
        .count();
    model.training_accuracy = correct as f64 / n;
    Ok(model)
}

pub fn svc_predict<R: AsRef<[f64]>>(
    model: &SvcModel,
    embeddings: &[R],
) -> Result<Vec<EmotionLabel>> {
    embeddings
        .iter()
        .map(|e| {
            let e = e.as_ref();
            if e.len() != model.dim {
                return Err(Error::DimensionMismatch {
                    expected: model.dim,
                    actual: e.len(),
                });
            }
            Ok(model.predict_one(e))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use EmotionLabel::*;

    fn two_blobs(seed: u64, n: usize, spread: f64) -> (Vec<[f64; 2]>, Vec<EmotionLabel>) {
        let mut rng = crate::seed::rng(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..2 * n {
            let (cx, label) = if i < n { (-1.0, Sad) } else { (1.0, Angry) };
            let gx: f64 = rng.sample(StandardNormal);
            let gy: f64 = rng.sample(StandardNormal);
            x.push([cx + spread * gx, spread * gy]);
            y.push(label);
        }
        (x, y)
    }

    #[test]
    fn separable_points_fully_recovered() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..50 {
            let jitter = (i as f64 / 50.0) - 0.5;
            x.push([-1.0, jitter]);
            y.push(Neutral);
            x.push([1.0, jitter]);
            y.push(Happy);
        }
        let m = svc_fit(&x, &y, &SvcConfig::default()).unwrap();
        assert_eq!(m.training_accuracy, 1.0);
        assert_eq!(m.classes, vec![Neutral, Happy]);
    }

    #[test]
    fn deterministic_fit() {
        let (x, y) = two_blobs(1, 40, 0.6);
        let cfg = SvcConfig {
            seed: 3,
            ..SvcConfig::default()
        };
        assert_eq!(
            svc_fit(&x, &y, &cfg).unwrap(),
            svc_fit(&x, &y, &cfg).unwrap()
        );
    }

    #[test]
    fn objective_close_to_grid_search() {
        let (x, y) = two_blobs(7, 30, 0.8);
        let cfg = SvcConfig::default();
        let m = svc_fit(&x, &y, &cfg).unwrap();
        // the solver works on centred data; compare there
        let n = x.len() as f64;
        let mean = [
            x.iter().map(|p| p[0]).sum::<f64>() / n,
            x.iter().map(|p| p[1]).sum::<f64>() / n,
        ];
        let xc: Vec<[f64; 2]> = x.iter().map(|p| [p[0] - mean[0], p[1] - mean[1]]).collect();
        let k = m.classes.iter().position(|&c| c == Angry).unwrap();
        let w = &m.weights[k];
        let b = m.biases[k] + w[0] * mean[0] + w[1] * mean[1];
        let yb: Vec<f64> = y
            .iter()
            .map(|&l| if l == Angry { 1.0 } else { -1.0 })
            .collect();
        let got = svc_objective(w, b, &xc, &yb, cfg.c);

        let mut grid_best = f64::INFINITY;
        let steps = 81;
        let at = |i: usize, lo: f64, hi: f64| lo + (hi - lo) * i as f64 / (steps - 1) as f64;
        for i in 0..steps {
            for j in 0..steps {
                for l in 0..steps {
                    let wg = [at(i, -4.0, 4.0), at(j, -4.0, 4.0)];
                    grid_best =
                        grid_best.min(svc_objective(&wg, at(l, -2.0, 2.0), &xc, &yb, cfg.c));
                }
            }
        }
        assert!(
            got <= grid_best * 1.01,
            "svc objective {got} vs grid {grid_best}"
        );
        assert!(
            got > 0.9 * grid_best,
            "grid is too coarse to be informative"
        );
    }

    #[test]
    fn tie_breaks_to_first_class() {
        let m = SvcModel {
            classes: vec![Neutral, Sad, Happy, Angry],
            weights: vec![vec![0.0, 0.0]; 4],
            biases: vec![0.0; 4],
            dim: 2,
            config: SvcConfig::default(),
            training_accuracy: 0.0,
        };
        assert_eq!(svc_predict(&m, &[[3.0, -1.0]]).unwrap(), vec![Neutral]);
        let mut m2 = m.clone();
        m2.weights[3] = vec![1.0, 0.0];
        assert_eq!(m2.predict_one(&[5.0, 0.0]), Angry);
        assert!(svc_predict(&m, &[[0.0; 3]]).is_err());
    }

    #[test]
    fn training_accuracy_matches_recount() {
        let (x, y) = two_blobs(11, 60, 1.0);
        let m = svc_fit(&x, &y, &SvcConfig::default()).unwrap();
        let pred = svc_predict(&m, &x).unwrap();
        let acc = pred.iter().zip(&y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64;
        assert_eq!(acc, m.training_accuracy);
        assert!(acc > 0.75);
    }

    #[test]
    fn shift_equivariance() {
        let (x, y) = two_blobs(13, 50, 0.9);
        let shifted: Vec<[f64; 2]> = x.iter().map(|p| [p[0] + 37.5, p[1] - 12.25]).collect();
        let a = svc_fit(&x, &y, &SvcConfig::default()).unwrap();
        let b = svc_fit(&shifted, &y, &SvcConfig::default()).unwrap();
        assert_eq!(
            svc_predict(&a, &x).unwrap(),
            svc_predict(&b, &shifted).unwrap()
        );
    }

    #[test]
    fn rejects_degenerate_input() {
        let x = [[0.0, 1.0], [1.0, 0.0]];
        assert!(svc_fit(&x, &[Sad, Sad], &SvcConfig::default()).is_err());
        assert!(svc_fit(&x, &[Sad], &SvcConfig::default()).is_err());
        let bad = SvcConfig {
            c: 0.0,
            ..SvcConfig::default()
        };
        assert!(svc_fit(&x, &[Sad, Happy], &bad).is_err());
    }

    #[test]
    fn json_round_trip() {
        let (x, y) = two_blobs(2, 10, 0.5);
        let m = svc_fit(&x, &y, &SvcConfig::default()).unwrap();
        assert_eq!(SvcModel::from_json(&m.to_json().unwrap()).unwrap(), m);
    }
}
