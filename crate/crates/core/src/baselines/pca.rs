use serde::{Deserialize, Serialize};

use super::eigen::symmetric_eigen;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// One orthonormal row per output dimension, ordered by explained variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

const PCA_FORMAT: &str = "emolatent.pca";
const PCA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct PcaDocument {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: PcaModel,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(x)
                    .zip(&self.mean)
                    .map(|((w, v), m)| w * (v - m))
                    .sum()
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PcaDocument {
            format: PCA_FORMAT.into(),
            version: PCA_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PcaDocument = serde_json::from_str(text)?;
        if doc.format != PCA_FORMAT || doc.version != PCA_VERSION {
            return Err(Error::Format(format!(
                "expected {PCA_FORMAT} v{PCA_VERSION}, found {} v{}",
                doc.format, doc.version
            )));
        }
        Ok(doc.model)
    }
}

/// Top `out_dims` eigenvectors of the sample covariance (denominator n − 1).
///
/// Each component is signed so that its largest-magnitude entry is positive.
pub fn pca_fit<R: AsRef<[f64]>>(data: &[R], out_dims: usize) -> Result<PcaModel> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "PCA needs at least 2 samples, got {}",
            data.len()
        )));
    }
    let d = data[0].as_ref().len();
    if out_dims == 0 || out_dims > d {
        return Err(Error::InvalidArgument(format!(
            "cannot extract {out_dims} components from {d}-dimensional data"
        )));
    }
    if let Some(bad) = data.iter().find(|r| r.as_ref().len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bad.as_ref().len(),
        });
    }
    let n = data.len() as f64;
    let mut mean = vec![0.0; d];
    for r in data {
        for (m, v) in mean.iter_mut().zip(r.as_ref()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for r in data {
        for ((c, v), m) in centered.iter_mut().zip(r.as_ref()).zip(&mean) {
            *c = v - m;
        }
        for i in 0..d {
            let ci = centered[i];
            let row = &mut cov[i * d..(i + 1) * d];
            for j in i..d {
                row[j] += ci * centered[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / (n - 1.0);
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }

    let (values, vectors) = symmetric_eigen(&cov, d);
    let mut components = Vec::with_capacity(out_dims);
    for mut c in vectors.into_iter().take(out_dims) {
        let pivot = c.iter().enumerate().fold(
            0,
            |best, (i, v)| if v.abs() > c[best].abs() { i } else { best },
        );
        if c[pivot] < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(c);
    }
    let explained_variance = values
        .into_iter()
        .take(out_dims)
        .map(|v| v.max(0.0))
        .collect();
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

pub fn pca_transform<R: AsRef<[f64]>>(model: &PcaModel, data: &[R]) -> Result<Vec<Vec<f64>>> {
    data.iter()
        .map(|r| {
            let r = r.as_ref();
            if r.len() != model.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.input_dim(),
                    actual: r.len(),
                });
            }
            Ok(model.project(r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn points_on_diagonal_line() {
        let data: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, i as f64]).collect();
        let m = pca_fit(&data, 2).unwrap();
        let h = 0.5f64.sqrt();
        assert!((m.components[0][0] - h).abs() < 1e-12);
        assert!((m.components[0][1] - h).abs() < 1e-12);
        assert!(m.explained_variance[1].abs() < 1e-12);
    }

    #[test]
    fn isotropic_data_has_unit_variances() {
        let mut rng = crate::seed::rng(10);
        let data: Vec<[f64; 2]> = (0..20_000)
            .map(|_| [rng.sample(StandardNormal), rng.sample(StandardNormal)])
            .collect();
        let m = pca_fit(&data, 2).unwrap();
        for v in &m.explained_variance {
            assert!((v - 1.0).abs() < 0.1, "variance {v}");
        }
    }

    #[test]
    fn transform_of_mean_and_component() {
        let mut rng = crate::seed::rng(2);
        let data: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                (0..4)
                    .map(|j| rng.random_range(-1.0..1.0) * (j + 1) as f64)
                    .collect()
            })
            .collect();
        let m = pca_fit(&data, 2).unwrap();
        let zero = pca_transform(&m, std::slice::from_ref(&m.mean)).unwrap();
        assert!(zero[0].iter().all(|v| v.abs() < 1e-15));
        let shifted: Vec<f64> = m
            .mean
            .iter()
            .zip(&m.components[0])
            .map(|(a, c)| a + c)
            .collect();
        let p = &pca_transform(&m, &[shifted]).unwrap()[0];
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
    }

    #[test]
    fn transform_matches_direct_products() {
        let mut rng = crate::seed::rng(5);
        let data: Vec<Vec<f64>> = (0..25)
            .map(|_| (0..6).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let m = pca_fit(&data, 2).unwrap();
        let out = pca_transform(&m, &data).unwrap();
        for (x, y) in data.iter().zip(&out) {
            for k in 0..2 {
                let mut acc = 0.0;
                for j in 0..6 {
                    acc += (x[j] - m.mean[j]) * m.components[k][j];
                }
                assert!((acc - y[k]).abs() < 1e-12);
            }
        }
        // per-dimension variance of the projection equals explained variance
        for k in 0..2 {
            let var = out.iter().map(|y| y[k] * y[k]).sum::<f64>() / (out.len() - 1) as f64;
            assert!((var - m.explained_variance[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn sign_convention_and_errors() {
        let data = [
            [0.0, -1.0, 0.1],
            [0.0, 1.0, -0.1],
            [0.2, 3.0, 0.0],
            [0.1, -2.0, 0.3],
        ];
        let m = pca_fit(&data, 2).unwrap();
        for c in &m.components {
            let pivot = c
                .iter()
                .cloned()
                .fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            assert!(pivot > 0.0);
        }
        assert!(pca_fit(&data[..1], 1).is_err());
        assert!(pca_fit(&data, 4).is_err());
        assert!(pca_transform(&m, &[[0.0; 2]]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let data = [[1.0, 2.0], [3.0, 1.5], [0.2, -0.7]];
        let m = pca_fit(&data, 2).unwrap();
        assert_eq!(PcaModel::from_json(&m.to_json().unwrap()).unwrap(), m);
    }
}
