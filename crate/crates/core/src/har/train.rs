//! Mini-batch SGD training for the activity CNN, plus the finite-difference
//! gradient harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{CnnConfig, CnnModel, Grads};
use super::{ActivityLabel, HarError};
use crate::scalar::Real;
use crate::signal::ActivityWindow;

/// Plain SGD: negative log-likelihood loss, no momentum or decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 12,
            batch_size: 10,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean per-sample loss of each epoch.
    pub epoch_loss: Vec<f64>,
    pub samples: usize,
    pub steps: usize,
}

/// Cheap stable content hash; used only to canonicalize training order.
pub(crate) fn fnv1a64(bytes: impl Iterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn content_key<S: Real>(w: &ActivityWindow<S>, label: ActivityLabel) -> (usize, u64, i64) {
    let h = fnv1a64(
        w.samples
            .iter()
            .flatten()
            .flat_map(|v| v.to_f64_lossy().to_le_bytes()),
    );
    (label.index(), h, w.start_t_ns)
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Glorot-uniform initialization in fixed tensor declaration order; biases
/// stay zero. The same seed always yields the same model.
fn init_model<S: Real>(cfg: CnnConfig, seed: u64) -> Result<CnnModel<S>, HarError> {
    let mut m = CnnModel::zeros(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));
    let dw_channels = cfg.in_channels * cfg.conv1_multiplier;
    let fans = [
        (0, cfg.conv1_kernel, cfg.conv1_kernel * cfg.conv1_multiplier),
        (2, dw_channels, cfg.conv1_out),
        (
            4,
            cfg.conv1_out * cfg.conv2_kernel,
            cfg.conv2_out * cfg.conv2_kernel,
        ),
        (6, m.shapes.flat_len, cfg.fc_hidden),
        (8, cfg.fc_hidden, cfg.classes),
    ];
    for (tensor, fan_in, fan_out) in fans {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for v in m.tensor_mut(tensor) {
            *v = S::c(rng.random_range(-limit..limit));
        }
    }
    Ok(m)
}

/// Trains a fresh model. Runs are reproducible from the seed alone: the
/// training set is first sorted by a content key, so permuting the caller's
/// ordering changes nothing, and the per-epoch shuffle is seed-derived.
pub fn train<S: Real>(
    cfg: CnnConfig,
    tcfg: &TrainConfig,
    data: &[(ActivityWindow<S>, ActivityLabel)],
) -> Result<(CnnModel<S>, TrainReport), HarError> {
    if data.is_empty() {
        return Err(HarError::EmptyTrainingSet);
    }
    if tcfg.batch_size == 0 {
        return Err(HarError::BadTrainConfig("batch_size must be positive".into()));
    }
    if !(tcfg.learning_rate.is_finite() && tcfg.learning_rate > 0.0) {
        return Err(HarError::BadTrainConfig(format!(
            "learning rate {} out of range",
            tcfg.learning_rate
        )));
    }
    for label in ActivityLabel::ALL {
        if !data.iter().any(|(_, l)| *l == label) {
            return Err(HarError::MissingClass(label));
        }
    }

    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by_cached_key(|&i| content_key(&data[i].0, data[i].1));

    let mut model = init_model::<S>(cfg, tcfg.seed)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(splitmix64(tcfg.seed ^ 0x5eed_0fda7a));

    let lr = S::c(tcfg.learning_rate);
    let mut report = TrainReport {
        epoch_loss: Vec::with_capacity(tcfg.epochs),
        samples: data.len(),
        steps: 0,
    };
    for epoch in 0..tcfg.epochs {
        // Fisher-Yates on the canonical order.
        for i in (1..order.len()).rev() {
            let j = shuffle_rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0f64;
        for (batch_no, batch) in order.chunks(tcfg.batch_size).enumerate() {
            let mut grads = Grads::zeros_like(&model);
            let mut batch_loss = S::zero();
            for &i in batch {
                let (window, label) = &data[i];
                let cache = model.forward_cached(window)?;
                batch_loss += model.backward(&cache, *label, &mut grads);
            }
            let loss = batch_loss.to_f64_lossy();
            if !loss.is_finite() {
                return Err(HarError::Diverged {
                    epoch,
                    batch: batch_no,
                });
            }
            epoch_loss += loss;
            let scale = lr / S::c(batch.len() as f64);
            for t in 0..10 {
                let g = grads.tensor(t).to_vec();
                for (w, gv) in model.tensor_mut(t).iter_mut().zip(g) {
                    *w -= scale * gv;
                }
            }
            report.steps += 1;
        }
        report.epoch_loss.push(epoch_loss / data.len() as f64);
    }
    Ok((model, report))
}

/// Mean NLL of a model over a sample set.
pub fn mean_loss<S: Real>(
    model: &CnnModel<S>,
    data: &[(ActivityWindow<S>, ActivityLabel)],
) -> Result<S, HarError> {
    let mut total = S::zero();
    for (w, label) in data {
        let probs = model.forward(w)?;
        total += super::model::nll(probs[label.index()]);
    }
    Ok(total / S::c(data.len() as f64))
}

/// Fraction of windows whose predicted label matches.
pub fn accuracy<S: Real>(
    model: &CnnModel<S>,
    data: &[(ActivityWindow<S>, ActivityLabel)],
) -> Result<f64, HarError> {
    if data.is_empty() {
        return Err(HarError::EmptyTrainingSet);
    }
    let mut hits = 0usize;
    for (w, label) in data {
        if model.predict(w)?.0 == *label {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub params_checked: usize,
    pub max_rel_err: f64,
}

/// Compares every analytic parameter gradient against central finite
/// differences of the mean batch loss. `epsilon` perturbs each parameter in
/// turn; relative error is measured against max(|analytic|, |numeric|) with
/// a small floor so near-zero gradients compare on an absolute scale.
pub fn gradient_check(
    model: &mut CnnModel<f64>,
    data: &[(ActivityWindow<f64>, ActivityLabel)],
    epsilon: f64,
) -> Result<GradCheckReport, HarError> {
    if data.is_empty() {
        return Err(HarError::EmptyTrainingSet);
    }
    let n = data.len() as f64;
    let mut grads = Grads::zeros_like(model);
    for (w, label) in data {
        let cache = model.forward_cached(w)?;
        model.backward(&cache, *label, &mut grads);
    }

    let mut report = GradCheckReport {
        params_checked: 0,
        max_rel_err: 0.0,
    };
    for t in 0..10 {
        for p in 0..model.tensor(t).len() {
            let orig = model.tensor(t)[p];
            model.tensor_mut(t)[p] = orig + epsilon;
            let up = mean_loss(model, data)?;
            model.tensor_mut(t)[p] = orig - epsilon;
            let down = mean_loss(model, data)?;
            model.tensor_mut(t)[p] = orig;

            let numeric = (up - down) / (2.0 * epsilon);
            let analytic = grads.tensor(t)[p] / n;
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
            }
            report.params_checked += 1;
        }
    }
    Ok(report)
}

/// Geometry for fast off-line checks: 20x3 windows, four conv1 channels,
/// two conv2 channels, ten hidden units.
pub fn small_config() -> CnnConfig {
    CnnConfig {
        input_len: 20,
        in_channels: 3,
        conv1_kernel: 5,
        conv1_multiplier: 1,
        conv1_out: 4,
        pool_len: 4,
        pool_stride: 2,
        conv2_kernel: 3,
        conv2_out: 2,
        fc_hidden: 10,
        classes: 6,
    }
}
