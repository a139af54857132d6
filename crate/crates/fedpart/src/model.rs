//! Dense numerical kernel: a width-scalable multilayer perceptron with
//! analytic gradients, softmax cross-entropy loss, and a momentum SGD step.
//!
//! Everything here is a pure function of its inputs plus explicit seeds, and
//! all summations run in fixed loop order, so outputs are bit-reproducible.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{stream, tag};

/// Architecture of a fully-connected network: per-layer node counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
}

impl ModelSpec {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>, output_dim: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::field("input_dim", "must be >= 1"));
        }
        if output_dim == 0 {
            return Err(Error::field("output_dim", "must be >= 1"));
        }
        if hidden_widths.is_empty() {
            return Err(Error::field(
                "hidden_widths",
                "need at least one hidden layer",
            ));
        }
        if hidden_widths.contains(&0) {
            return Err(Error::field("hidden_widths", "all widths must be >= 1"));
        }
        Ok(ModelSpec {
            input_dim,
            hidden_widths,
            output_dim,
        })
    }

    /// Node counts for every layer, input through output.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_widths.len() + 2);
        sizes.push(self.input_dim);
        sizes.extend_from_slice(&self.hidden_widths);
        sizes.push(self.output_dim);
        sizes
    }

    /// Number of weight matrices (= hidden layers + 1).
    pub fn num_connections(&self) -> usize {
        self.hidden_widths.len() + 1
    }

    pub fn param_count(&self) -> usize {
        let sizes = self.layer_sizes();
        sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// The same architecture with every hidden width multiplied by `factor`.
    pub fn scaled(&self, factor: usize) -> Result<Self> {
        ModelSpec::new(
            self.input_dim,
            self.hidden_widths.iter().map(|&w| w * factor).collect(),
            self.output_dim,
        )
    }
}

/// One dense connection: weight rows index destination nodes, columns index
/// source nodes; one bias entry per destination node.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// All parameters of a network, one `LayerParams` per connection.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    layers: Vec<LayerParams>,
}

impl ParamStore {
    pub fn zeros(spec: &ModelSpec) -> Self {
        let sizes = spec.layer_sizes();
        let layers = sizes
            .windows(2)
            .map(|w| LayerParams {
                weights: Matrix::zeros(w[1], w[0]),
                bias: vec![0.0; w[1]],
            })
            .collect();
        ParamStore { layers }
    }

    pub fn from_layers(layers: Vec<LayerParams>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ShapeMismatch("no layers".into()));
        }
        for pair in layers.windows(2) {
            if pair[1].weights.cols() != pair[0].weights.rows() {
                return Err(Error::ShapeMismatch(
                    "consecutive layer shapes do not chain".into(),
                ));
            }
        }
        for layer in &layers {
            if layer.bias.len() != layer.weights.rows() {
                return Err(Error::ShapeMismatch("bias length != weight rows".into()));
            }
        }
        Ok(ParamStore { layers })
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    pub fn num_connections(&self) -> usize {
        self.layers.len()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Spec implied by the stored shapes.
    pub fn spec(&self) -> ModelSpec {
        let input_dim = self.layers[0].weights.cols();
        let output_dim = self.layers.last().unwrap().weights.rows();
        let hidden = self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.weights.rows())
            .collect();
        ModelSpec {
            input_dim,
            hidden_widths: hidden,
            output_dim,
        }
    }

    pub fn matches_spec(&self, spec: &ModelSpec) -> bool {
        self.spec() == *spec
    }

    pub fn same_shape(&self, other: &ParamStore) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weights.same_shape(&b.weights) && a.bias.len() == b.bias.len())
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.data().iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite())
        })
    }

    /// Visit every parameter of `self` and `other` pairwise, in canonical
    /// order (connection by connection, weights row-major, then bias).
    pub fn zip_map(
        &self,
        other: &ParamStore,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<ParamStore> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch("param stores differ in shape".into()));
        }
        let layers = self
            .layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| {
                let data = a
                    .weights
                    .data()
                    .iter()
                    .zip(b.weights.data())
                    .map(|(&x, &y)| f(x, y))
                    .collect();
                LayerParams {
                    weights: Matrix::from_vec(a.weights.rows(), a.weights.cols(), data).unwrap(),
                    bias: a.bias.iter().zip(&b.bias).map(|(&x, &y)| f(x, y)).collect(),
                }
            })
            .collect();
        Ok(ParamStore { layers })
    }

    /// Flattened copy of all values in canonical order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.data());
            out.extend_from_slice(&layer.bias);
        }
        out
    }
}

/// A labelled mini-batch: one feature row per example.
#[derive(Debug, Clone)]
pub struct Batch {
    features: Matrix,
    labels: Vec<u32>,
}

impl Batch {
    pub fn new(features: Matrix, labels: Vec<u32>, num_classes: usize) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows vs {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= num_classes) {
            return Err(Error::field(
                "labels",
                format!("label {bad} out of range for {num_classes} classes"),
            ));
        }
        Ok(Batch { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }
}

/// Momentum SGD state: `v <- mu*v + (g + lambda*theta); theta <- theta - eta*v`.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: ParamStore,
}

impl OptimizerState {
    pub fn new(
        learning_rate: f64,
        momentum: f64,
        weight_decay: f64,
        shape_like: &ParamStore,
    ) -> Result<Self> {
        if learning_rate < 0.0 || !learning_rate.is_finite() {
            return Err(Error::field("learning_rate", "must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::field("momentum", "must be in [0, 1)"));
        }
        if weight_decay < 0.0 {
            return Err(Error::field("weight_decay", "must be >= 0"));
        }
        let velocity = shape_like.zip_map(shape_like, |_, _| 0.0)?;
        Ok(OptimizerState {
            learning_rate,
            momentum,
            weight_decay,
            velocity,
        })
    }

    pub fn velocity(&self) -> &ParamStore {
        &self.velocity
    }
}

/// Per-layer activations kept around for the backward pass. `activations[0]`
/// is the input batch; the rest are post-ReLU hidden activations.
#[derive(Debug)]
pub struct ForwardCache {
    activations: Vec<Matrix>,
}

/// Weights drawn uniformly from `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases
/// zero. Deterministic for a fixed seed.
pub fn init_params(spec: &ModelSpec, seed: u64) -> ParamStore {
    let mut rng = stream(seed, &[tag::INIT]);
    let sizes = spec.layer_sizes();
    let layers = sizes
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = 1.0 / (fan_in as f64).sqrt();
            let mut weights = Matrix::zeros(fan_out, fan_in);
            for v in weights.data_mut() {
                *v = rng.gen_range(-limit..=limit);
            }
            LayerParams {
                weights,
                bias: vec![0.0; fan_out],
            }
        })
        .collect();
    ParamStore { layers }
}

fn affine_forward(input: &Matrix, layer: &LayerParams) -> Matrix {
    let (examples, out_dim) = (input.rows(), layer.weights.rows());
    let mut out = Matrix::zeros(examples, out_dim);
    for e in 0..examples {
        let row = input.row(e);
        for i in 0..out_dim {
            let wrow = layer.weights.row(i);
            let mut acc = layer.bias[i];
            for (j, &x) in row.iter().enumerate() {
                acc += wrow[j] * x;
            }
            out.set(e, i, acc);
        }
    }
    out
}

/// Run the network on a batch. Hidden layers use ReLU; the final layer is
/// linear and its outputs are the logits.
pub fn forward(params: &ParamStore, batch: &Batch) -> Result<(Matrix, ForwardCache)> {
    if batch.features().cols() != params.layers()[0].weights.cols() {
        return Err(Error::ShapeMismatch(format!(
            "batch has {} features, model expects {}",
            batch.features().cols(),
            params.layers()[0].weights.cols()
        )));
    }
    let mut activations = vec![batch.features().clone()];
    let last = params.num_connections() - 1;
    for (l, layer) in params.layers().iter().enumerate() {
        let mut z = affine_forward(activations.last().unwrap(), layer);
        if l < last {
            for v in z.data_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            activations.push(z);
        } else {
            return Ok((z, ForwardCache { activations }));
        }
    }
    unreachable!("param store always has at least one connection")
}

/// Mean softmax cross-entropy over the batch, plus exact analytic gradients
/// shaped like the parameters.
pub fn loss_and_grad(params: &ParamStore, batch: &Batch) -> Result<(f64, ParamStore)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let (logits, cache) = forward(params, batch)?;
    let examples = batch.len();
    let classes = logits.cols();
    if batch.labels().iter().any(|&l| l as usize >= classes) {
        return Err(Error::ShapeMismatch("label outside logit range".into()));
    }

    // Softmax probabilities and loss, numerically stabilised per row.
    let mut delta = Matrix::zeros(examples, classes);
    let mut loss = 0.0;
    let inv_m = 1.0 / examples as f64;
    for e in 0..examples {
        let row = logits.row(e);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for &z in row {
            denom += (z - max).exp();
        }
        let label = batch.labels()[e] as usize;
        loss += denom.ln() - (row[label] - max);
        for (c, &z) in row.iter().enumerate() {
            let p = (z - max).exp() / denom;
            let target = if c == label { 1.0 } else { 0.0 };
            delta.set(e, c, (p - target) * inv_m);
        }
    }
    loss *= inv_m;

    // Backward pass over connections, top down.
    let mut grads: Vec<LayerParams> = Vec::with_capacity(params.num_connections());
    for l in (0..params.num_connections()).rev() {
        let layer = &params.layers()[l];
        let input = &cache.activations[l];
        let (out_dim, in_dim) = (layer.weights.rows(), layer.weights.cols());

        let mut gw = Matrix::zeros(out_dim, in_dim);
        let mut gb = vec![0.0; out_dim];
        for e in 0..examples {
            let drow = delta.row(e);
            let arow = input.row(e);
            for i in 0..out_dim {
                let d = drow[i];
                gb[i] += d;
                let grow = gw.row_mut(i);
                for (j, &a) in arow.iter().enumerate() {
                    grow[j] += d * a;
                }
            }
        }

        if l > 0 {
            // Propagate through the ReLU of the layer below: activation zero
            // means the unit was clamped, so its gradient is zero too.
            let mut prev = Matrix::zeros(examples, in_dim);
            for e in 0..examples {
                let drow = delta.row(e);
                let arow = input.row(e);
                for (j, &a) in arow.iter().enumerate() {
                    if a > 0.0 {
                        let mut acc = 0.0;
                        for (i, &d) in drow.iter().enumerate() {
                            acc += d * layer.weights.get(i, j);
                        }
                        prev.set(e, j, acc);
                    }
                }
            }
            delta = prev;
        }
        grads.push(LayerParams {
            weights: gw,
            bias: gb,
        });
    }
    grads.reverse();
    Ok((loss, ParamStore { layers: grads }))
}

/// One optimizer step. With zero momentum and weight decay this is plain SGD;
/// a zero learning rate returns the input bit-for-bit.
pub fn sgd_step(
    params: &ParamStore,
    grads: &ParamStore,
    opt: &mut OptimizerState,
) -> Result<ParamStore> {
    if !params.same_shape(grads) || !params.same_shape(&opt.velocity) {
        return Err(Error::ShapeMismatch(
            "params, grads, and velocity must agree".into(),
        ));
    }
    let (mu, lambda, eta) = (opt.momentum, opt.weight_decay, opt.learning_rate);
    let mut new_layers = Vec::with_capacity(params.layers.len());
    for ((p, g), v) in params
        .layers
        .iter()
        .zip(&grads.layers)
        .zip(&mut opt.velocity.layers)
    {
        for ((vw, &gw), &pw) in v
            .weights
            .data_mut()
            .iter_mut()
            .zip(g.weights.data())
            .zip(p.weights.data())
        {
            *vw = mu * *vw + (gw + lambda * pw);
        }
        for ((vb, &gb), &pb) in v.bias.iter_mut().zip(&g.bias).zip(&p.bias) {
            *vb = mu * *vb + (gb + lambda * pb);
        }
        if eta == 0.0 {
            new_layers.push(p.clone());
        } else {
            let data = p
                .weights
                .data()
                .iter()
                .zip(v.weights.data())
                .map(|(&pw, &vw)| pw - eta * vw)
                .collect();
            new_layers.push(LayerParams {
                weights: Matrix::from_vec(p.weights.rows(), p.weights.cols(), data)?,
                bias: p
                    .bias
                    .iter()
                    .zip(&v.bias)
                    .map(|(&pb, &vb)| pb - eta * vb)
                    .collect(),
            });
        }
    }
    Ok(ParamStore { layers: new_layers })
}
