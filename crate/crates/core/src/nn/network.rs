use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub input: usize,
    pub output: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input: usize, output: usize, activation: Activation) -> Self {
        LayerSpec {
            input,
            output,
            activation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    /// `output_dim × input_dim`, row-major.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn new(
        weights: Vec<f64>,
        biases: Vec<f64>,
        input_dim: usize,
        activation: Activation,
    ) -> Result<Self> {
        let layer = DenseLayer {
            input_dim,
            output_dim: biases.len(),
            activation,
            weights,
            biases,
        };
        layer.validate()?;
        Ok(layer)
    }

    fn validate(&self) -> Result<()> {
        if self.weights.len() != self.input_dim * self.output_dim
            || self.biases.len() != self.output_dim
        {
            return Err(Error::Format(format!(
                "layer declares {}→{} but holds {} weights and {} biases",
                self.input_dim,
                self.output_dim,
                self.weights.len(),
                self.biases.len()
            )));
        }
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::Format("layer dimensions must be positive".into()));
        }
        if let Some(i) = self
            .weights
            .iter()
            .chain(&self.biases)
            .position(|v| !v.is_finite())
        {
            return Err(Error::NonFinite(i));
        }
        Ok(())
    }

    pub fn weight_row(&self, out: usize) -> &[f64] {
        &self.weights[out * self.input_dim..(out + 1) * self.input_dim]
    }

    /// `W·a + b` for one input vector.
    pub fn affine_into(&self, a: &[f64], z: &mut [f64]) {
        for (o, zo) in z.iter_mut().enumerate() {
            let dot: f64 = self.weight_row(o).iter().zip(a).map(|(w, x)| w * x).sum();
            *zo = dot + self.biases[o];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub input_dim: usize,
    pub output_dim: usize,
    pub layers: Vec<DenseLayer>,
}

const NETWORK_FORMAT: &str = "emolatent.network";
const NETWORK_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct NetworkDocument {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: NetworkModel,
}

impl NetworkModel {
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        let (first, last) = match (layers.first(), layers.last()) {
            (Some(f), Some(l)) => (f.input_dim, l.output_dim),
            _ => {
                return Err(Error::InvalidArgument(
                    "network needs at least one layer".into(),
                ))
            }
        };
        let model = NetworkModel {
            input_dim: first,
            output_dim: last,
            layers,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let mut width = self.input_dim;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.validate()?;
            if layer.input_dim != width {
                return Err(Error::Format(format!(
                    "layer {i} expects {} inputs but receives {width}",
                    layer.input_dim
                )));
            }
            width = layer.output_dim;
        }
        if self.layers.is_empty() || width != self.output_dim {
            return Err(Error::Format(format!(
                "network output {} does not match declared {}",
                width, self.output_dim
            )));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Parameters flattened layer by layer: weights (row-major), then biases.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights.len());
            l.weights.copy_from_slice(w);
            let (b, tail) = tail.split_at(l.biases.len());
            l.biases.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    /// Forward pass for one vector, without recording a trace.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        let mut a = x.to_vec();
        for layer in &self.layers {
            let mut z = vec![0.0; layer.output_dim];
            layer.affine_into(&a, &mut z);
            for v in &mut z {
                *v = layer.activation.apply(*v);
            }
            a = z;
        }
        Ok(a)
    }

    /// Splits into the first `n` layers and the rest.
    pub fn split_at(&self, n: usize) -> Result<(NetworkModel, NetworkModel)> {
        if n == 0 || n >= self.layers.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot split a {}-layer network at {n}",
                self.layers.len()
            )));
        }
        Ok((
            NetworkModel::from_layers(self.layers[..n].to_vec())?,
            NetworkModel::from_layers(self.layers[n..].to_vec())?,
        ))
    }

    /// `self` followed by `next`.
    pub fn chain(&self, next: &NetworkModel) -> Result<NetworkModel> {
        NetworkModel::from_layers(self.layers.iter().chain(&next.layers).cloned().collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = NetworkDocument {
            format: NETWORK_FORMAT.into(),
            version: NETWORK_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetworkDocument = serde_json::from_str(text)?;
        if doc.format != NETWORK_FORMAT || doc.version != NETWORK_VERSION {
            return Err(Error::Format(format!(
                "expected {NETWORK_FORMAT} v{NETWORK_VERSION}, found {} v{}",
                doc.format, doc.version
            )));
        }
        doc.model.validate()?;
        Ok(doc.model)
    }
}

/// Glorot-uniform weights and zero biases, deterministic in `seed`.
pub fn init_network(spec: &[LayerSpec], seed: u64) -> Result<NetworkModel> {
    if spec.is_empty() {
        return Err(Error::InvalidArgument("empty layer spec".into()));
    }
    for (i, pair) in spec.windows(2).enumerate() {
        if pair[0].output != pair[1].input {
            return Err(Error::InvalidArgument(format!(
                "layer {i} outputs {} but layer {} takes {}",
                pair[0].output,
                i + 1,
                pair[1].input
            )));
        }
    }
    let mut rng = seed::rng(seed);
    let layers = spec
        .iter()
        .map(|s| {
            if s.input == 0 || s.output == 0 {
                return Err(Error::InvalidArgument(
                    "layer dimensions must be positive".into(),
                ));
            }
            let limit = (6.0 / (s.input + s.output) as f64).sqrt();
            let weights = (0..s.input * s.output)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            DenseLayer::new(weights, vec![0.0; s.output], s.input, s.activation)
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkModel::from_layers(layers)
}

/// Pre-activations and activations of every layer for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: Matrix,
    pub pre_activations: Vec<Matrix>,
    pub activations: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Matrix {
        self.activations.last().unwrap_or(&self.input)
    }
}

pub fn forward(model: &NetworkModel, batch: &Matrix) -> Result<ForwardTrace> {
    if batch.cols() != model.input_dim {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim,
            actual: batch.cols(),
        });
    }
    let mut pre_activations = Vec::with_capacity(model.layers.len());
    let mut activations: Vec<Matrix> = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        let prev = activations.last().unwrap_or(batch);
        let mut z = Matrix::zeros(batch.rows(), layer.output_dim);
        for b in 0..batch.rows() {
            layer.affine_into(prev.row(b), z.row_mut(b));
        }
        let mut a = z.clone();
        for v in a.data.iter_mut() {
            *v = layer.activation.apply(*v);
        }
        pre_activations.push(z);
        activations.push(a);
    }
    Ok(ForwardTrace {
        input: batch.clone(),
        pre_activations,
        activations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Gradients with the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(&g.biases).copied())
            .collect()
    }
}

/// Gradients of `mse_loss(forward(model, x), target)` with respect to every
/// weight and bias.
pub fn backward(model: &NetworkModel, trace: &ForwardTrace, target: &Matrix) -> Result<Gradients> {
    let stale = || Error::InvalidArgument("forward trace does not belong to this model".into());
    if trace.activations.len() != model.layers.len()
        || trace.pre_activations.len() != model.layers.len()
    {
        return Err(stale());
    }
    for (layer, z) in model.layers.iter().zip(&trace.pre_activations) {
        if z.cols() != layer.output_dim || z.rows() != trace.input.rows() {
            return Err(stale());
        }
    }
    if trace.input.cols() != model.input_dim {
        return Err(stale());
    }
    let out = trace.output();
    if target.rows() != out.rows() || target.cols() != out.cols() {
        return Err(Error::InvalidArgument(format!(
            "target is {}x{} but network output is {}x{}",
            target.rows(),
            target.cols(),
            out.rows(),
            out.cols()
        )));
    }
    let batch = out.rows();
    if batch == 0 {
        return Err(Error::Empty("backward on an empty batch"));
    }

    let last = model.layers.len() - 1;
    let scale = 2.0 / (batch * out.cols()) as f64;
    let act = model.layers[last].activation;
    let mut delta = Matrix::zeros(batch, out.cols());
    for ((d, (a, t)), z) in delta
        .data
        .iter_mut()
        .zip(out.data.iter().zip(&target.data))
        .zip(&trace.pre_activations[last].data)
    {
        *d = scale * (a - t) * act.derivative(*z);
    }

    let mut grads: Vec<LayerGrad> = Vec::with_capacity(model.layers.len());
    for l in (0..model.layers.len()).rev() {
        let layer = &model.layers[l];
        let prev = if l == 0 {
            &trace.input
        } else {
            &trace.activations[l - 1]
        };
        let mut gw = vec![0.0; layer.weights.len()];
        let mut gb = vec![0.0; layer.output_dim];
        for b in 0..batch {
            let d = delta.row(b);
            let a = prev.row(b);
            for (o, &dv) in d.iter().enumerate() {
                gb[o] += dv;
                let row = &mut gw[o * layer.input_dim..(o + 1) * layer.input_dim];
                for (g, &x) in row.iter_mut().zip(a) {
                    *g += dv * x;
                }
            }
        }
        grads.push(LayerGrad {
            weights: gw,
            biases: gb,
        });
        if l > 0 {
            let below = model.layers[l - 1].activation;
            let z_prev = &trace.pre_activations[l - 1];
            let mut next = Matrix::zeros(batch, layer.input_dim);
            for b in 0..batch {
                let d = delta.row(b);
                let row = next.row_mut(b);
                for (o, &dv) in d.iter().enumerate() {
                    for (r, &w) in row.iter_mut().zip(layer.weight_row(o)) {
                        *r += dv * w;
                    }
                }
                for (r, &z) in row.iter_mut().zip(z_prev.row(b)) {
                    *r *= below.derivative(z);
                }
            }
            delta = next;
        }
    }
    grads.reverse();
    Ok(Gradients { layers: grads })
}
