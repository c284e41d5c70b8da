//! Two-hidden-layer perceptron classifier trained with mini-batch SGD on
//! cross-entropy loss: sigmoid hidden activations, softmax output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::har::train::splitmix64;
use crate::scalar::Real;

use super::gds::DepressionLevel;
use super::knn::{canonical_order, standardization, standardize_row, validate_samples};
use super::PredictError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpConfig {
    pub hidden: (usize, usize),
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: (64, 32),
            epochs: 300,
            batch_size: 10,
            learning_rate: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<S> {
    /// Layer widths input to output: [p, h1, h2, 3].
    dims: [usize; 4],
    /// Row-major weights and biases, tensor order w1 b1 w2 b2 w3 b3.
    w1: Vec<S>,
    b1: Vec<S>,
    w2: Vec<S>,
    b2: Vec<S>,
    w3: Vec<S>,
    b3: Vec<S>,
    means: Vec<S>,
    scales: Vec<S>,
}

/// Forward activations kept for the backward pass.
struct Cache<S> {
    x: Vec<S>,
    a1: Vec<S>,
    a2: Vec<S>,
    probs: [S; 3],
}

struct Grads<S> {
    w1: Vec<S>,
    b1: Vec<S>,
    w2: Vec<S>,
    b2: Vec<S>,
    w3: Vec<S>,
    b3: Vec<S>,
}

fn affine<S: Real>(w: &[S], b: &[S], x: &[S], out_dim: usize, in_dim: usize) -> Vec<S> {
    let mut z = b.to_vec();
    for o in 0..out_dim {
        let row = &w[o * in_dim..(o + 1) * in_dim];
        let mut acc = S::zero();
        for (wv, xv) in row.iter().zip(x) {
            acc += *wv * *xv;
        }
        z[o] += acc;
    }
    z
}

fn sigmoid<S: Real>(z: S) -> S {
    S::one() / (S::one() + (-z).exp())
}

fn softmax3<S: Real>(z: &[S]) -> [S; 3] {
    let m = z[0].max(z[1]).max(z[2]);
    let e = [(z[0] - m).exp(), (z[1] - m).exp(), (z[2] - m).exp()];
    let sum = e[0] + e[1] + e[2];
    [e[0] / sum, e[1] / sum, e[2] / sum]
}

/// Negative log of a softmax probability. NaN inputs stay NaN so divergence
/// is caught rather than clamped away; only true zero gets the floor.
fn ce_loss<S: Real>(p: S) -> S {
    if !p.is_finite() {
        return S::nan();
    }
    -p.max(S::c(1e-300)).ln()
}

impl<S: Real> MlpModel<S> {
    fn zeros(dims: [usize; 4], means: Vec<S>, scales: Vec<S>) -> Self {
        Self {
            w1: vec![S::zero(); dims[1] * dims[0]],
            b1: vec![S::zero(); dims[1]],
            w2: vec![S::zero(); dims[2] * dims[1]],
            b2: vec![S::zero(); dims[2]],
            w3: vec![S::zero(); dims[3] * dims[2]],
            b3: vec![S::zero(); dims[3]],
            dims,
            means,
            scales,
        }
    }

    fn tensor(&self, t: usize) -> &[S] {
        match t {
            0 => &self.w1,
            1 => &self.b1,
            2 => &self.w2,
            3 => &self.b2,
            4 => &self.w3,
            _ => &self.b3,
        }
    }

    fn tensor_mut(&mut self, t: usize) -> &mut [S] {
        match t {
            0 => &mut self.w1,
            1 => &mut self.b1,
            2 => &mut self.w2,
            3 => &mut self.b2,
            4 => &mut self.w3,
            _ => &mut self.b3,
        }
    }

    /// Forward pass over an already standardized row.
    fn forward_std(&self, x: &[S]) -> Cache<S> {
        let [p, h1, h2, out] = self.dims;
        let a1: Vec<S> = affine(&self.w1, &self.b1, x, h1, p)
            .into_iter()
            .map(sigmoid)
            .collect();
        let a2: Vec<S> = affine(&self.w2, &self.b2, &a1, h2, h1)
            .into_iter()
            .map(sigmoid)
            .collect();
        let z3 = affine(&self.w3, &self.b3, &a2, out, h2);
        Cache {
            x: x.to_vec(),
            a1,
            a2,
            probs: softmax3(&z3),
        }
    }

    /// Accumulates this sample's gradient; returns its loss.
    fn backward(&self, cache: &Cache<S>, label: DepressionLevel, g: &mut Grads<S>) -> S {
        let [p, h1, h2, _] = self.dims;
        let mut d3 = cache.probs;
        d3[label.index()] -= S::one();
        for o in 0..3 {
            g.b3[o] += d3[o];
            for j in 0..h2 {
                g.w3[o * h2 + j] += d3[o] * cache.a2[j];
            }
        }
        let mut d2 = vec![S::zero(); h2];
        for j in 0..h2 {
            let mut acc = S::zero();
            for o in 0..3 {
                acc += self.w3[o * h2 + j] * d3[o];
            }
            d2[j] = acc * cache.a2[j] * (S::one() - cache.a2[j]);
        }
        for j in 0..h2 {
            g.b2[j] += d2[j];
            for k in 0..h1 {
                g.w2[j * h1 + k] += d2[j] * cache.a1[k];
            }
        }
        let mut d1 = vec![S::zero(); h1];
        for k in 0..h1 {
            let mut acc = S::zero();
            for j in 0..h2 {
                acc += self.w2[j * h1 + k] * d2[j];
            }
            d1[k] = acc * cache.a1[k] * (S::one() - cache.a1[k]);
        }
        for k in 0..h1 {
            g.b1[k] += d1[k];
            for i in 0..p {
                g.w1[k * p + i] += d1[k] * cache.x[i];
            }
        }
        ce_loss(cache.probs[label.index()])
    }

    /// Softmax class probabilities for a raw feature row.
    pub fn scores(&self, x: &[S]) -> Result<[f64; 3], PredictError> {
        if x.len() != self.dims[0] {
            return Err(PredictError::LengthMismatch {
                a: x.len(),
                b: self.dims[0],
            });
        }
        let z = standardize_row(x, &self.means, &self.scales);
        let probs = self.forward_std(&z).probs;
        Ok([
            probs[0].to_f64_lossy(),
            probs[1].to_f64_lossy(),
            probs[2].to_f64_lossy(),
        ])
    }

    /// Highest probability wins; ties break toward the lower index.
    pub fn predict(&self, x: &[S]) -> Result<DepressionLevel, PredictError> {
        let s = self.scores(x)?;
        let mut best = 0;
        for c in 1..3 {
            if s[c] > s[best] {
                best = c;
            }
        }
        Ok(DepressionLevel::from_index(best).expect("index in range"))
    }
}

impl<S: Real> Grads<S> {
    fn zeros_like(m: &MlpModel<S>) -> Self {
        Self {
            w1: vec![S::zero(); m.w1.len()],
            b1: vec![S::zero(); m.b1.len()],
            w2: vec![S::zero(); m.w2.len()],
            b2: vec![S::zero(); m.b2.len()],
            w3: vec![S::zero(); m.w3.len()],
            b3: vec![S::zero(); m.b3.len()],
        }
    }

    fn tensor(&self, t: usize) -> &[S] {
        match t {
            0 => &self.w1,
            1 => &self.b1,
            2 => &self.w2,
            3 => &self.b2,
            4 => &self.w3,
            _ => &self.b3,
        }
    }
}

/// Glorot-uniform weights in fixed tensor order; biases stay zero.
fn init_model<S: Real>(
    dims: [usize; 4],
    means: Vec<S>,
    scales: Vec<S>,
    seed: u64,
) -> MlpModel<S> {
    let mut m = MlpModel::zeros(dims, means, scales);
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));
    for (t, fan_in, fan_out) in [
        (0, dims[0], dims[1]),
        (2, dims[1], dims[2]),
        (4, dims[2], dims[3]),
    ] {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for v in m.tensor_mut(t) {
            *v = S::c(rng.random_range(-limit..limit));
        }
    }
    m
}

/// Trains a fresh network. Reproducible from the seed alone: rows are first
/// sorted by a content key, so the caller's ordering changes nothing, and
/// the per-epoch shuffle is seed-derived.
pub fn fit_mlp<S: Real>(
    train: &[(Vec<S>, DepressionLevel)],
    cfg: &MlpConfig,
) -> Result<MlpModel<S>, PredictError> {
    let p = validate_samples(train)?;
    if cfg.hidden.0 == 0 || cfg.hidden.1 == 0 {
        return Err(PredictError::BadConfig("hidden widths must be positive".into()));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(PredictError::BadConfig(
            "epochs and batch_size must be positive".into(),
        ));
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return Err(PredictError::BadConfig(format!(
            "learning rate {} out of range",
            cfg.learning_rate
        )));
    }

    let mut order = canonical_order(train);
    let raw: Vec<Vec<S>> = order.iter().map(|&i| train[i].0.clone()).collect();
    let labels: Vec<DepressionLevel> = order.iter().map(|&i| train[i].1).collect();
    let (means, scales) = standardization(&raw, p);
    let rows: Vec<Vec<S>> = raw
        .iter()
        .map(|r| standardize_row(r, &means, &scales))
        .collect();

    let dims = [p, cfg.hidden.0, cfg.hidden.1, 3];
    let mut model = init_model(dims, means, scales, cfg.seed);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(splitmix64(cfg.seed ^ 0x3b1e_55ed));
    let lr = S::c(cfg.learning_rate);

    order = (0..rows.len()).collect();
    for epoch in 0..cfg.epochs {
        for i in (1..order.len()).rev() {
            let j = shuffle_rng.random_range(0..=i);
            order.swap(i, j);
        }
        for (batch_no, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut grads = Grads::zeros_like(&model);
            let mut batch_loss = S::zero();
            for &i in batch {
                let cache = model.forward_std(&rows[i]);
                batch_loss += model.backward(&cache, labels[i], &mut grads);
            }
            if !batch_loss.to_f64_lossy().is_finite() {
                return Err(PredictError::DegenerateTraining(format!(
                    "loss diverged at epoch {epoch}, batch {batch_no}"
                )));
            }
            let scale = lr / S::c(batch.len() as f64);
            for t in 0..6 {
                let g = grads.tensor(t).to_vec();
                for (w, gv) in model.tensor_mut(t).iter_mut().zip(g) {
                    *w -= scale * gv;
                }
            }
        }
    }
    Ok(model)
}

/// Mean cross-entropy over standardized rows.
fn mean_loss<S: Real>(model: &MlpModel<S>, rows: &[Vec<S>], labels: &[DepressionLevel]) -> f64 {
    let mut total = S::zero();
    for (x, label) in rows.iter().zip(labels) {
        let cache = model.forward_std(x);
        total += ce_loss(cache.probs[label.index()]);
    }
    (total / S::c(rows.len() as f64)).to_f64_lossy()
}

/// Compares every analytic parameter gradient against central finite
/// differences of the mean loss; returns (max relative error, parameters
/// checked). Relative error is measured against max(|analytic|, |numeric|)
/// with a small floor so near-zero gradients compare on an absolute scale.
pub fn mlp_gradient_check(
    model: &mut MlpModel<f64>,
    data: &[(Vec<f64>, DepressionLevel)],
    epsilon: f64,
) -> Result<(f64, usize), PredictError> {
    if data.is_empty() {
        return Err(PredictError::EmptyData);
    }
    let rows: Vec<Vec<f64>> = data
        .iter()
        .map(|(x, _)| {
            if x.len() != model.dims[0] {
                return Err(PredictError::LengthMismatch {
                    a: x.len(),
                    b: model.dims[0],
                });
            }
            Ok(standardize_row(x, &model.means, &model.scales))
        })
        .collect::<Result<_, _>>()?;
    let labels: Vec<DepressionLevel> = data.iter().map(|(_, l)| *l).collect();

    let n = data.len() as f64;
    let mut grads = Grads::zeros_like(model);
    for (x, label) in rows.iter().zip(&labels) {
        let cache = model.forward_std(x);
        model.backward(&cache, *label, &mut grads);
    }

    let mut max_rel = 0.0f64;
    let mut checked = 0usize;
    for t in 0..6 {
        for pi in 0..model.tensor(t).len() {
            let orig = model.tensor(t)[pi];
            model.tensor_mut(t)[pi] = orig + epsilon;
            let up = mean_loss(model, &rows, &labels);
            model.tensor_mut(t)[pi] = orig - epsilon;
            let down = mean_loss(model, &rows, &labels);
            model.tensor_mut(t)[pi] = orig;

            let numeric = (up - down) / (2.0 * epsilon);
            let analytic = grads.tensor(t)[pi] / n;
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
            max_rel = max_rel.max(rel);
            checked += 1;
        }
    }
    Ok((max_rel, checked))
}
