//! Prototype search by gradient ascent on a class response, in three
//! regimes: plain l2-regularized, expert-density-regularized with a
//! Gaussian RBM, and code-space search through a decoder.
//!
//! All three share one ascent driver: fixed-step gradient ascent where a
//! step that would lower the objective is halved and retried (up to 30
//! times), so recorded objective traces are non-decreasing by
//! construction. The expert weight 0 and the identity decoder reduce the
//! richer regimes to the plain one bit-for-bit, which the tests pin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{DenseNet, OutputKind};
use crate::rng::Rng;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 10_000;
const MAX_STEP_HALVINGS: usize = 30;

/// Gaussian RBM density expert, with unnormalized log density
/// `sum_j softplus(w_j.x + b_j) - x' Sigma^-1 x / 2`. The additive
/// constant is dropped: prototypes only see gradients, so density values
/// are comparable only within one expert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RBMExpert {
    /// J factor weight rows, each of the visible dimension d.
    pub weight_rows: Vec<Vec<f64>>,
    /// J factor biases.
    pub biases: Vec<f64>,
    /// Diagonal of Sigma (per-dimension variances), all positive.
    pub sigma_diag: Vec<f64>,
}

impl RBMExpert {
    pub fn visible_dim(&self) -> usize {
        self.sigma_diag.len()
    }

    pub fn hidden_count(&self) -> usize {
        self.weight_rows.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weight_rows.len() != self.biases.len() {
            return Err(Error::DimensionMismatch(
                "factor rows and biases differ in count".into(),
            ));
        }
        if self.sigma_diag.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidParameter(
                "sigma_diag entries must be positive".into(),
            ));
        }
        let d = self.visible_dim();
        for row in &self.weight_rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch(
                    "factor row dimension mismatch".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let expert: RBMExpert = serde_json::from_str(text)?;
        expert.validate()?;
        Ok(expert)
    }
}

/// Overflow-safe softplus.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Unnormalized log density and its gradient at x.
pub fn rbm_log_density(expert: &RBMExpert, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    if x.len() != expert.visible_dim() {
        return Err(Error::DimensionMismatch(format!(
            "input dim {} vs expert dim {}",
            x.len(),
            expert.visible_dim()
        )));
    }
    let mut value = 0.0;
    let mut grad = vec![0.0; x.len()];
    for (row, &b) in expert.weight_rows.iter().zip(&expert.biases) {
        let mut t = b;
        for i in 0..x.len() {
            t += row[i] * x[i];
        }
        value += softplus(t);
        let s = logistic(t);
        for i in 0..x.len() {
            grad[i] += s * row[i];
        }
    }
    for i in 0..x.len() {
        value -= 0.5 * x[i] * x[i] / expert.sigma_diag[i];
        grad[i] -= x[i] / expert.sigma_diag[i];
    }
    Ok((value, grad))
}

/// One-step contrastive divergence for the Gaussian-visible RBM.
/// sigma_diag is fixed to the data's per-dimension variance (floored at
/// 1e-6); hidden states are sampled, reconstructions use the conditional
/// mean. Returns the expert and the per-epoch mean squared reconstruction
/// error.
pub fn train_rbm(
    data: &[Vec<f64>],
    hidden: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<(RBMExpert, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = data[0].len();
    if data.iter().any(|x| x.len() != d) {
        return Err(Error::DimensionMismatch("ragged training data".into()));
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite training data".into()));
    }

    let n = data.len() as f64;
    let mut mean = vec![0.0; d];
    for x in data {
        for i in 0..d {
            mean[i] += x[i] / n;
        }
    }
    let mut sigma_diag = vec![0.0; d];
    for x in data {
        for i in 0..d {
            let c = x[i] - mean[i];
            sigma_diag[i] += c * c / n;
        }
    }
    for s in &mut sigma_diag {
        *s = s.max(1e-6);
    }

    let mut rng = Rng::new(seed);
    let mut weight_rows: Vec<Vec<f64>> = (0..hidden)
        .map(|_| (0..d).map(|_| rng.uniform_in(-0.01, 0.01)).collect())
        .collect();
    let mut biases = vec![0.0; hidden];

    let mut trace = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let mut epoch_err = 0.0;
        for v0 in data {
            // Up: hidden probabilities and samples.
            let mut h_prob = vec![0.0; hidden];
            let mut h_sample = vec![0.0; hidden];
            for j in 0..hidden {
                let mut t = biases[j];
                for i in 0..d {
                    t += weight_rows[j][i] * v0[i];
                }
                h_prob[j] = logistic(t);
                h_sample[j] = f64::from(u8::from(rng.bernoulli(h_prob[j])));
            }
            // Down: conditional mean of the Gaussian visibles.
            let mut v1 = vec![0.0; d];
            for j in 0..hidden {
                if h_sample[j] != 0.0 {
                    for i in 0..d {
                        v1[i] += weight_rows[j][i];
                    }
                }
            }
            for i in 0..d {
                v1[i] *= sigma_diag[i];
            }
            // Up again on the reconstruction.
            let mut h1_prob = vec![0.0; hidden];
            for j in 0..hidden {
                let mut t = biases[j];
                for i in 0..d {
                    t += weight_rows[j][i] * v1[i];
                }
                h1_prob[j] = logistic(t);
            }
            for j in 0..hidden {
                for i in 0..d {
                    weight_rows[j][i] +=
                        learning_rate * (h_prob[j] * v0[i] - h1_prob[j] * v1[i]);
                }
                biases[j] += learning_rate * (h_prob[j] - h1_prob[j]);
            }
            for i in 0..d {
                let e = v1[i] - v0[i];
                epoch_err += e * e;
            }
        }
        trace.push(epoch_err / n);
    }

    let expert = RBMExpert {
        weight_rows,
        biases,
        sigma_diag,
    };
    expert.validate()?;
    Ok((expert, trace))
}

/// Code-space decoder: a linear-head net mapping codes to inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoder {
    pub net: DenseNet,
}

impl Decoder {
    pub fn new(net: DenseNet) -> Result<Self> {
        if net.output != OutputKind::Linear {
            return Err(Error::InvalidParameter(
                "decoder net must have a linear head".into(),
            ));
        }
        net.validate()?;
        Ok(Decoder { net })
    }

    pub fn code_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.net.output_dim()
    }

    /// The identity decoder on d dimensions.
    pub fn identity(d: usize) -> Self {
        let mut weights = vec![0.0; d * d];
        for i in 0..d {
            weights[i * d + i] = 1.0;
        }
        Decoder {
            net: DenseNet {
                layer_sizes: vec![d, d],
                output: OutputKind::Linear,
                weights: vec![weights],
                biases: vec![vec![0.0; d]],
            },
        }
    }

    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.net.forward(z)
    }
}

/// Search outcome: the prototype, the code when searched in code space,
/// and the accepted-objective trace.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeResult {
    pub x_star: Vec<f64>,
    pub z_star: Option<Vec<f64>>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// True when the gradient norm fell below the tolerance.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscentConfig {
    pub step: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            step: 0.1,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOLERANCE,
        }
    }
}

struct AscentOutcome {
    point: Vec<f64>,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn ascend(
    init: Vec<f64>,
    config: &AscentConfig,
    value: impl Fn(&[f64]) -> Result<f64>,
    gradient: impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<AscentOutcome> {
    if !(config.step > 0.0) {
        return Err(Error::InvalidParameter("ascent step must be positive".into()));
    }
    let mut x = init;
    let mut f = value(&x)?;
    if !f.is_finite() {
        return Err(Error::NonFiniteObjective { iteration: 0 });
    }
    let mut trace = Vec::new();
    let mut converged = false;
    for iteration in 0..config.max_iters {
        let g = gradient(&x)?;
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < config.tol {
            converged = true;
            break;
        }
        let mut step = config.step;
        let mut accepted = false;
        let mut saw_finite_candidate = false;
        for _ in 0..=MAX_STEP_HALVINGS {
            let candidate: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + step * gi).collect();
            let fc = value(&candidate)?;
            if fc.is_finite() {
                saw_finite_candidate = true;
                if fc >= f {
                    x = candidate;
                    f = fc;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            if !saw_finite_candidate {
                return Err(Error::NonFiniteObjective { iteration });
            }
            // No ascent step even at the smallest scale: numerically flat.
            break;
        }
        trace.push(f);
    }
    let iterations = trace.len();
    Ok(AscentOutcome {
        point: x,
        trace,
        iterations,
        converged,
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    Ok(())
}

/// Plain prototype search: ascend log p(c|x) - lambda ||x||^2.
pub fn maximize_class(
    net: &DenseNet,
    class: usize,
    lambda: f64,
    init: &[f64],
    config: &AscentConfig,
) -> Result<PrototypeResult> {
    check_lambda(lambda)?;
    let outcome = ascend(
        init.to_vec(),
        config,
        |x| class_objective(net, class, lambda, x),
        |x| class_gradient(net, class, lambda, x),
    )?;
    Ok(PrototypeResult {
        x_star: outcome.point,
        z_star: None,
        objective_trace: outcome.trace,
        iterations: outcome.iterations,
        converged: outcome.converged,
    })
}

fn class_objective(net: &DenseNet, class: usize, lambda: f64, x: &[f64]) -> Result<f64> {
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    Ok(net.log_prob(x, class)? - lambda * norm_sq)
}

fn class_gradient(net: &DenseNet, class: usize, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
    let mut g = net.input_gradient(x, class)?;
    for (gi, xi) in g.iter_mut().zip(x) {
        *gi -= 2.0 * lambda * xi;
    }
    Ok(g)
}

/// Expert-regularized search: ascend the objective
/// `log p(c|x) - lambda ||x||^2 + alpha * log p_expert(x)`. Alpha 1
/// weighs class response and data density equally; alpha 0 takes exactly
/// the plain path, so the iterate sequence is bit-identical to
/// `maximize_class` with the same lambda.
pub fn maximize_with_expert(
    net: &DenseNet,
    class: usize,
    expert: &RBMExpert,
    alpha: f64,
    lambda: f64,
    init: &[f64],
    config: &AscentConfig,
) -> Result<PrototypeResult> {
    check_lambda(lambda)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and non-negative, got {alpha}"
        )));
    }
    if expert.visible_dim() != net.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "expert dim {} vs classifier input {}",
            expert.visible_dim(),
            net.input_dim()
        )));
    }
    if alpha == 0.0 {
        return maximize_class(net, class, lambda, init, config);
    }
    let outcome = ascend(
        init.to_vec(),
        config,
        |x| {
            let (density, _) = rbm_log_density(expert, x)?;
            Ok(class_objective(net, class, lambda, x)? + alpha * density)
        },
        |x| {
            let (_, density_grad) = rbm_log_density(expert, x)?;
            let mut g = class_gradient(net, class, lambda, x)?;
            for (gi, di) in g.iter_mut().zip(&density_grad) {
                *gi += alpha * di;
            }
            Ok(g)
        },
    )?;
    Ok(PrototypeResult {
        x_star: outcome.point,
        z_star: None,
        objective_trace: outcome.trace,
        iterations: outcome.iterations,
        converged: outcome.converged,
    })
}

/// Code-space search: ascend log p(c | g(z)) - lambda ||z||^2 by pulling
/// the classifier gradient back through the decoder. Returns both z* and
/// x* = g(z*).
pub fn maximize_in_code_space(
    net: &DenseNet,
    class: usize,
    decoder: &Decoder,
    lambda: f64,
    init_z: &[f64],
    config: &AscentConfig,
) -> Result<PrototypeResult> {
    check_lambda(lambda)?;
    if decoder.output_dim() != net.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "decoder output {} vs classifier input {}",
            decoder.output_dim(),
            net.input_dim()
        )));
    }
    let outcome = ascend(
        init_z.to_vec(),
        config,
        |z| {
            let x = decoder.net.forward(z)?;
            let norm_sq: f64 = z.iter().map(|v| v * v).sum();
            Ok(net.log_prob(&x, class)? - lambda * norm_sq)
        },
        |z| {
            let x = decoder.net.forward(z)?;
            let cotangent = net.input_gradient(&x, class)?;
            let (_, mut g) = decoder.net.linear_output_and_pullback(z, &cotangent)?;
            for (gi, zi) in g.iter_mut().zip(z) {
                *gi -= 2.0 * lambda * zi;
            }
            Ok(g)
        },
    )?;
    let x_star = decoder.net.forward(&outcome.point)?;
    Ok(PrototypeResult {
        x_star,
        z_star: Some(outcome.point),
        objective_trace: outcome.trace,
        iterations: outcome.iterations,
        converged: outcome.converged,
    })
}
