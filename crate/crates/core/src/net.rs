//! Minimal dense feed-forward network with tanh hidden layers and full
//! reverse-mode gradients, trained by plain seeded SGD.
//!
//! The softmax head makes the forward pass a class-probability vector;
//! the same machinery with a linear head serves as the decoder for
//! code-space prototype search. Weights serialize as JSON (layer sizes
//! plus row-major weight matrices) so trained nets feed the optimizers
//! and the CLI.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// Softmax head: forward outputs are a probability vector.
    Softmax,
    /// Raw affine head, used by decoders.
    Linear,
}

/// Fully-connected network. `weights[l]` is row-major (out x in) for the
/// map from layer l to layer l+1; hidden activations are tanh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    pub layer_sizes: Vec<usize>,
    pub output: OutputKind,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Gradients with the same shapes as the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean cross-entropy over the dataset after each epoch.
    pub loss_trace: Vec<f64>,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

impl DenseNet {
    /// Initialize with uniform weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)]
    /// drawn from the seeded generator.
    pub fn init(layer_sizes: &[usize], output: OutputKind, seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidParameter(
                "need at least input and output layers".into(),
            ));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::InvalidParameter("zero-width layer".into()));
        }
        let mut rng = Rng::new(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..layer_sizes.len() - 1 {
            let fan_in = layer_sizes[l];
            let fan_out = layer_sizes[l + 1];
            let bound = 1.0 / (fan_in as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.uniform_in(-bound, bound))
                    .collect(),
            );
            biases.push((0..fan_out).map(|_| rng.uniform_in(-bound, bound)).collect());
        }
        Ok(DenseNet {
            layer_sizes: layer_sizes.to_vec(),
            output,
            weights,
            biases,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::InvalidParameter("too few layers".into()));
        }
        let transitions = self.layer_sizes.len() - 1;
        if self.weights.len() != transitions || self.biases.len() != transitions {
            return Err(Error::DimensionMismatch(
                "weight/bias count does not match layer count".into(),
            ));
        }
        for l in 0..transitions {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            if self.weights[l].len() != fan_in * fan_out || self.biases[l].len() != fan_out {
                return Err(Error::DimensionMismatch(format!(
                    "layer {l} shapes inconsistent"
                )));
            }
            if self.weights[l].iter().any(|w| !w.is_finite())
                || self.biases[l].iter().any(|b| !b.is_finite())
            {
                return Err(Error::InvalidParameter(format!(
                    "non-finite parameter in layer {l}"
                )));
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "input dim {} vs network input {}",
                x.len(),
                self.input_dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite network input".into()));
        }
        Ok(())
    }

    /// Pre-activation and post-activation values per layer.
    fn forward_trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let transitions = self.weights.len();
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(transitions + 1);
        activations.push(x.to_vec());
        for l in 0..transitions {
            let fan_in = self.layer_sizes[l];
            let fan_out = self.layer_sizes[l + 1];
            let prev = &activations[l];
            let mut z = self.biases[l].clone();
            for o in 0..fan_out {
                let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                let mut acc = 0.0;
                for i in 0..fan_in {
                    acc += row[i] * prev[i];
                }
                z[o] += acc;
            }
            if l < transitions - 1 {
                for v in &mut z {
                    *v = v.tanh();
                }
            }
            activations.push(z);
        }
        let logits = activations.last().unwrap().clone();
        (activations, logits)
    }

    /// Forward pass: probabilities under a softmax head, raw affine output
    /// under a linear head.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let (_, logits) = self.forward_trace(x);
        Ok(match self.output {
            OutputKind::Softmax => softmax(&logits),
            OutputKind::Linear => logits,
        })
    }

    /// log p(c | x) for a softmax net, computed stably from the logits.
    pub fn log_prob(&self, x: &[f64], class: usize) -> Result<f64> {
        if self.output != OutputKind::Softmax {
            return Err(Error::InvalidParameter(
                "log_prob requires a softmax head".into(),
            ));
        }
        if class >= self.output_dim() {
            return Err(Error::LabelOutOfRange {
                label: class,
                classes: self.output_dim(),
            });
        }
        self.check_input(x)?;
        let (_, logits) = self.forward_trace(x);
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln() + max;
        Ok(logits[class] - log_sum)
    }

    /// Backpropagate a gradient at the output layer down to the input,
    /// optionally accumulating parameter gradients.
    fn backward(
        &self,
        activations: &[Vec<f64>],
        output_grad: Vec<f64>,
        mut params: Option<&mut ParamGradients>,
    ) -> Vec<f64> {
        let transitions = self.weights.len();
        let mut delta = output_grad;
        for l in (0..transitions).rev() {
            let fan_in = self.layer_sizes[l];
            let fan_out = self.layer_sizes[l + 1];
            let prev = &activations[l];
            if let Some(grads) = params.as_deref_mut() {
                for o in 0..fan_out {
                    let row = &mut grads.weights[l][o * fan_in..(o + 1) * fan_in];
                    for i in 0..fan_in {
                        row[i] += delta[o] * prev[i];
                    }
                    grads.biases[l][o] += delta[o];
                }
            }
            if l == 0 {
                let mut input_grad = vec![0.0; fan_in];
                for o in 0..fan_out {
                    let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                    for i in 0..fan_in {
                        input_grad[i] += delta[o] * row[i];
                    }
                }
                return input_grad;
            }
            let mut next_delta = vec![0.0; fan_in];
            for o in 0..fan_out {
                let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                for i in 0..fan_in {
                    next_delta[i] += delta[o] * row[i];
                }
            }
            // prev holds tanh outputs; its derivative is 1 - tanh^2.
            for i in 0..fan_in {
                next_delta[i] *= 1.0 - prev[i] * prev[i];
            }
            delta = next_delta;
        }
        unreachable!("loop returns at l == 0");
    }

    fn zero_gradients(&self) -> ParamGradients {
        ParamGradients {
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Exact gradients of the mean cross-entropy over a batch.
    pub fn param_gradients(
        &self,
        inputs: &[Vec<f64>],
        labels: &[usize],
    ) -> Result<ParamGradients> {
        if self.output != OutputKind::Softmax {
            return Err(Error::InvalidParameter(
                "cross-entropy gradients require a softmax head".into(),
            ));
        }
        if inputs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if inputs.len() != labels.len() {
            return Err(Error::DimensionMismatch(
                "inputs and labels differ in length".into(),
            ));
        }
        let classes = self.output_dim();
        let mut grads = self.zero_gradients();
        let scale = 1.0 / inputs.len() as f64;
        for (x, &label) in inputs.iter().zip(labels) {
            if label >= classes {
                return Err(Error::LabelOutOfRange { label, classes });
            }
            self.check_input(x)?;
            let (activations, logits) = self.forward_trace(x);
            let probs = softmax(&logits);
            // d(mean CE)/d logits = (p - onehot) / N
            let mut output_grad = probs;
            output_grad[label] -= 1.0;
            for g in &mut output_grad {
                *g *= scale;
            }
            self.backward(&activations, output_grad, Some(&mut grads));
        }
        Ok(grads)
    }

    /// Exact gradient of log p(c | x) with respect to the input.
    pub fn input_gradient(&self, x: &[f64], class: usize) -> Result<Vec<f64>> {
        if self.output != OutputKind::Softmax {
            return Err(Error::InvalidParameter(
                "input_gradient requires a softmax head".into(),
            ));
        }
        if class >= self.output_dim() {
            return Err(Error::LabelOutOfRange {
                label: class,
                classes: self.output_dim(),
            });
        }
        self.check_input(x)?;
        let (activations, logits) = self.forward_trace(x);
        let probs = softmax(&logits);
        // d log p_c / d logits = onehot_c - p
        let mut output_grad: Vec<f64> = probs.iter().map(|&p| -p).collect();
        output_grad[class] += 1.0;
        Ok(self.backward(&activations, output_grad, None))
    }

    /// Forward pass of a linear-head net together with the pullback
    /// J^T v of a cotangent at the output; the decoder chain rule.
    pub fn linear_output_and_pullback(&self, x: &[f64], cotangent: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.output != OutputKind::Linear {
            return Err(Error::InvalidParameter(
                "pullback is defined for linear-head nets".into(),
            ));
        }
        if cotangent.len() != self.output_dim() {
            return Err(Error::DimensionMismatch(
                "cotangent dim does not match output".into(),
            ));
        }
        self.check_input(x)?;
        let (activations, output) = self.forward_trace(x);
        let pullback = self.backward(&activations, cotangent.to_vec(), None);
        Ok((output, pullback))
    }

    /// Mean cross-entropy of the dataset.
    pub fn mean_loss(&self, data: &Dataset) -> Result<f64> {
        let mut total = 0.0;
        for (x, &label) in data.inputs.iter().zip(&data.labels) {
            total -= self.log_prob(x, label)?;
        }
        Ok(total / data.len() as f64)
    }

    /// Fraction of the dataset classified correctly (argmax rule).
    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        let mut hits = 0usize;
        for (x, &label) in data.inputs.iter().zip(&data.labels) {
            let probs = self.forward(x)?;
            let pred = probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            if pred == label {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: DenseNet = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }
}

/// Mini-batch SGD with seeded shuffling; bit-reproducible given
/// (net, dataset, config).
pub fn train(net: &DenseNet, data: &Dataset, config: &TrainConfig) -> Result<(DenseNet, TrainReport)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(config.learning_rate > 0.0) {
        return Err(Error::InvalidParameter("learning rate must be positive".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidParameter("batch size must be positive".into()));
    }
    if data.input_dim() != net.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "dataset dim {} vs network input {}",
            data.input_dim(),
            net.input_dim()
        )));
    }
    let mut model = net.clone();
    let mut rng = Rng::new(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(config.batch_size) {
            let inputs: Vec<Vec<f64>> = batch.iter().map(|&i| data.inputs[i].clone()).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| data.labels[i]).collect();
            let grads = model.param_gradients(&inputs, &labels)?;
            for l in 0..model.weights.len() {
                for (w, g) in model.weights[l].iter_mut().zip(&grads.weights[l]) {
                    *w -= config.learning_rate * g;
                }
                for (b, g) in model.biases[l].iter_mut().zip(&grads.biases[l]) {
                    *b -= config.learning_rate * g;
                }
            }
        }
        loss_trace.push(model.mean_loss(data)?);
    }
    Ok((model, TrainReport { loss_trace }))
}
