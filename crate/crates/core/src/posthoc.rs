//! Post-hoc local explanations: perturb an interpretable binary view of an
//! instance, score the perturbations through any black box, weight them by
//! proximity to the instance, and fit a sparse weighted linear surrogate.
//!
//! The interpretable representation is a binary vector: for tabular
//! instances each bit keeps or zeroes one feature, for images each bit
//! keeps or masks one pixel block. Feature selection is greedy forward
//! selection on weighted residual reduction; the final fit is weighted
//! least squares via normal equations with a small ridge for conditioning.

use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::rng::Rng;

const RIDGE: f64 = 1e-8;

/// A binary interpretable view of one instance. `realize` of the all-ones
/// vector must reproduce the original instance exactly.
pub trait InterpretableMapping {
    fn dim(&self) -> usize;
    fn realize(&self, mask: &[u8]) -> Vec<f64>;
}

/// Tabular view: bit i keeps feature i, a zero bit zeroes it.
#[derive(Debug, Clone)]
pub struct TabularMasking {
    pub instance: Vec<f64>,
}

impl InterpretableMapping for TabularMasking {
    fn dim(&self) -> usize {
        self.instance.len()
    }

    fn realize(&self, mask: &[u8]) -> Vec<f64> {
        self.instance
            .iter()
            .zip(mask)
            .map(|(&v, &m)| if m != 0 { v } else { 0.0 })
            .collect()
    }
}

/// Image view: the raster is tiled into block x block cells (ragged at the
/// right/bottom edges); a zero bit paints its cell with the instance mean.
#[derive(Debug, Clone)]
pub struct BlockMasking {
    image: ImageGrid,
    block: usize,
    blocks_x: usize,
    blocks_y: usize,
    fill: f64,
}

pub const DEFAULT_BLOCK: usize = 8;

impl BlockMasking {
    pub fn new(image: ImageGrid, block: usize) -> Result<Self> {
        if block == 0 {
            return Err(Error::InvalidParameter("block size must be positive".into()));
        }
        let blocks_x = image.width().div_ceil(block);
        let blocks_y = image.height().div_ceil(block);
        let fill = image.samples().iter().sum::<f64>() / image.samples().len() as f64;
        Ok(BlockMasking {
            image,
            block,
            blocks_x,
            blocks_y,
            fill,
        })
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.blocks_x, self.blocks_y)
    }

    pub fn image_dims(&self) -> (usize, usize) {
        self.image.dims()
    }

    /// Render per-block values (for example surrogate weights) as a raster
    /// at the instance's resolution.
    pub fn block_map(&self, values: &[f64]) -> Result<ImageGrid> {
        if values.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} block values for {} blocks",
                values.len(),
                self.dim()
            )));
        }
        let (w, h) = self.image.dims();
        Ok(ImageGrid::from_fn(w, h, |x, y| {
            values[(y / self.block) * self.blocks_x + x / self.block]
        }))
    }
}

impl InterpretableMapping for BlockMasking {
    fn dim(&self) -> usize {
        self.blocks_x * self.blocks_y
    }

    fn realize(&self, mask: &[u8]) -> Vec<f64> {
        let (w, h) = self.image.dims();
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let bit = mask[(y / self.block) * self.blocks_x + x / self.block];
                out.push(if bit != 0 { self.image.at(x, y) } else { self.fill });
            }
        }
        out
    }
}

/// Perturbation samples: the all-ones vector first, then vectors drawn by
/// choosing an active count uniformly in [1, d'] and a uniform subset of
/// that size. Deterministic given the seed.
pub fn sample_perturbations(d_prime: usize, n: usize, seed: u64) -> Result<Vec<Vec<u8>>> {
    if d_prime == 0 {
        return Err(Error::InvalidParameter(
            "interpretable dimension must be positive".into(),
        ));
    }
    if n < d_prime + 1 {
        return Err(Error::InvalidParameter(format!(
            "need at least d' + 1 = {} samples, got {n}",
            d_prime + 1
        )));
    }
    let mut rng = Rng::new(seed);
    let mut samples = Vec::with_capacity(n);
    samples.push(vec![1u8; d_prime]);
    let mut indices: Vec<usize> = (0..d_prime).collect();
    for _ in 1..n {
        let active = 1 + rng.below(d_prime);
        // Partial Fisher-Yates: the first `active` entries become a
        // uniform subset.
        for i in 0..active {
            let j = i + rng.below(d_prime - i);
            indices.swap(i, j);
        }
        let mut mask = vec![0u8; d_prime];
        for &idx in &indices[..active] {
            mask[idx] = 1;
        }
        samples.push(mask);
    }
    Ok(samples)
}

/// Locality kernel: exp(-D^2 / width^2) with D the hamming distance from
/// the all-ones vector normalized by d'.
pub fn proximity_weight(mask: &[u8], kernel_width: f64) -> f64 {
    let off = mask.iter().filter(|&&m| m == 0).count() as f64;
    let d = off / mask.len() as f64;
    (-(d * d) / (kernel_width * kernel_width)).exp()
}

/// Sparse local surrogate over the interpretable representation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LocalExplanation {
    /// One weight per interpretable feature; exactly the selected features
    /// are nonzero.
    pub feature_weights: Vec<f64>,
    pub intercept: f64,
    /// Retained features in the order greedy selection picked them.
    pub selected: Vec<usize>,
    /// Weighted R^2 of the surrogate on the perturbation sample.
    pub local_fidelity: f64,
}

/// Solve (X' W X + ridge I) beta = X' W y for the given feature columns
/// plus an unpenalized intercept. Column 0 of the system is the intercept.
fn weighted_least_squares(
    masks: &[Vec<u8>],
    scores: &[f64],
    weights: &[f64],
    features: &[usize],
) -> (f64, Vec<f64>, f64) {
    let k = features.len() + 1;
    let mut ata = vec![0.0; k * k];
    let mut atb = vec![0.0; k];
    for ((mask, &y), &w) in masks.iter().zip(scores).zip(weights) {
        let mut row = Vec::with_capacity(k);
        row.push(1.0);
        for &f in features {
            row.push(f64::from(mask[f]));
        }
        for i in 0..k {
            for j in 0..k {
                ata[i * k + j] += w * (row[i] * row[j]);
            }
            atb[i] += w * (row[i] * y);
        }
    }
    for i in 1..k {
        ata[i * k + i] += RIDGE;
    }

    let beta = solve_symmetric(&mut ata, &mut atb, k);

    let mut ssr = 0.0;
    for ((mask, &y), &w) in masks.iter().zip(scores).zip(weights) {
        let mut pred = beta[0];
        for (slot, &f) in features.iter().enumerate() {
            pred += beta[slot + 1] * f64::from(mask[f]);
        }
        let r = y - pred;
        ssr += w * (r * r);
    }
    (beta[0], beta[1..].to_vec(), ssr)
}

/// Gaussian elimination with partial pivoting; the systems here are tiny.
fn solve_symmetric(a: &mut [f64], b: &mut [f64], k: usize) -> Vec<f64> {
    for col in 0..k {
        let mut pivot = col;
        for row in col + 1..k {
            if a[row * k + col].abs() > a[pivot * k + col].abs() {
                pivot = row;
            }
        }
        if pivot != col {
            for j in 0..k {
                a.swap(col * k + j, pivot * k + j);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * k + col];
        if diag == 0.0 {
            continue;
        }
        for row in col + 1..k {
            let factor = a[row * k + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..k {
                a[row * k + j] -= factor * a[col * k + j];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for col in (0..k).rev() {
        let mut acc = b[col];
        for j in col + 1..k {
            acc -= a[col * k + j] * x[j];
        }
        let diag = a[col * k + col];
        x[col] = if diag != 0.0 { acc / diag } else { 0.0 };
    }
    x
}

/// Fit a sparse local linear surrogate to a black-box scorer.
///
/// Scores every perturbation through the black box, keeps `budget`
/// features by greedy forward selection on weighted residual reduction,
/// and reports the weighted-least-squares fit over the selected features.
pub fn fit_local_surrogate(
    blackbox: impl Fn(&[f64]) -> f64,
    mapping: &dyn InterpretableMapping,
    budget: usize,
    n_samples: usize,
    kernel_width: f64,
    seed: u64,
) -> Result<LocalExplanation> {
    let d = mapping.dim();
    if budget > d {
        return Err(Error::InvalidParameter(format!(
            "feature budget {budget} exceeds interpretable dimension {d}"
        )));
    }
    if !(kernel_width > 0.0) {
        return Err(Error::InvalidParameter(
            "kernel width must be positive".into(),
        ));
    }
    let masks = sample_perturbations(d, n_samples, seed)?;
    let mut scores = Vec::with_capacity(masks.len());
    for (i, mask) in masks.iter().enumerate() {
        let score = blackbox(&mapping.realize(mask));
        if !score.is_finite() {
            return Err(Error::NonFiniteScore { sample: i });
        }
        scores.push(score);
    }
    let weights: Vec<f64> = masks
        .iter()
        .map(|m| proximity_weight(m, kernel_width))
        .collect();

    let mut selected: Vec<usize> = Vec::with_capacity(budget);
    for _ in 0..budget {
        let mut best: Option<(usize, f64)> = None;
        for candidate in 0..d {
            if selected.contains(&candidate) {
                continue;
            }
            let mut trial = selected.clone();
            trial.push(candidate);
            let (_, _, ssr) = weighted_least_squares(&masks, &scores, &weights, &trial);
            let better = match best {
                None => true,
                Some((_, best_ssr)) => ssr < best_ssr,
            };
            if better {
                best = Some((candidate, ssr));
            }
        }
        selected.push(best.expect("budget <= d leaves candidates").0);
    }

    let (intercept, coefs, ssr) = weighted_least_squares(&masks, &scores, &weights, &selected);

    let weight_sum: f64 = weights.iter().sum();
    let weighted_mean: f64 = scores
        .iter()
        .zip(&weights)
        .map(|(&y, &w)| w * y)
        .sum::<f64>()
        / weight_sum;
    let sst: f64 = scores
        .iter()
        .zip(&weights)
        .map(|(&y, &w)| w * (y - weighted_mean) * (y - weighted_mean))
        .sum();
    // Zero-variance targets are fit perfectly by the intercept-only model.
    // The threshold is relative to the target's scale so rounding dust in
    // the mean subtraction does not masquerade as variance.
    let mean_sq: f64 = scores
        .iter()
        .zip(&weights)
        .map(|(&y, &w)| w * (y * y))
        .sum::<f64>()
        / weight_sum;
    let local_fidelity = if sst <= 1e-18 * mean_sq {
        1.0
    } else {
        1.0 - ssr / sst
    };

    let mut feature_weights = vec![0.0; d];
    for (slot, &f) in selected.iter().enumerate() {
        feature_weights[f] = coefs[slot];
    }
    Ok(LocalExplanation {
        feature_weights,
        intercept,
        selected,
        local_fidelity,
    })
}
