//! CNN geometry, forward/backward passes and the checkpoint format.

use std::io::{Read, Write};
use std::path::Path;

use super::{ActivityLabel, HarError};
use crate::scalar::Real;
use crate::signal::ActivityWindow;

/// Network geometry. `standard()` is the deployed configuration; smaller
/// geometries are used by the gradient-check harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnnConfig {
    pub input_len: usize,
    pub in_channels: usize,
    /// conv1 is depthwise separable: a per-channel kernel with this length...
    pub conv1_kernel: usize,
    /// ...and this channel multiplier, followed by a 1x1 pointwise mix.
    pub conv1_multiplier: usize,
    pub conv1_out: usize,
    pub pool_len: usize,
    pub pool_stride: usize,
    pub conv2_kernel: usize,
    pub conv2_out: usize,
    pub fc_hidden: usize,
    pub classes: usize,
}

impl CnnConfig {
    /// Deployed geometry: 180x3 window in, depthwise kernel 60 with
    /// multiplier 20 (3 -> 60 channels), pool 20/2, conv2 kernel 6 with a
    /// tenth of the conv1 depth, 1000 tanh units, 6-way softmax.
    pub fn standard() -> Self {
        let cfg = Self {
            input_len: 180,
            in_channels: 3,
            conv1_kernel: 60,
            conv1_multiplier: 20,
            conv1_out: 60,
            pool_len: 20,
            pool_stride: 2,
            conv2_kernel: 6,
            conv2_out: 6,
            fc_hidden: 1000,
            classes: ActivityLabel::COUNT,
        };
        debug_assert_eq!(cfg.conv2_out * 10, cfg.conv1_out);
        cfg
    }

    /// Resolves the valid-convolution shape chain, rejecting any geometry
    /// where a layer would run out of samples.
    pub fn shape_chain(&self) -> Result<ShapeChain, HarError> {
        let bad = |msg: String| Err(HarError::BadConfig(msg));
        for (name, v) in [
            ("input_len", self.input_len),
            ("in_channels", self.in_channels),
            ("conv1_kernel", self.conv1_kernel),
            ("conv1_multiplier", self.conv1_multiplier),
            ("conv1_out", self.conv1_out),
            ("pool_len", self.pool_len),
            ("pool_stride", self.pool_stride),
            ("conv2_kernel", self.conv2_kernel),
            ("conv2_out", self.conv2_out),
            ("fc_hidden", self.fc_hidden),
            ("classes", self.classes),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.input_len < self.conv1_kernel {
            return bad(format!(
                "input {} shorter than conv1 kernel {}",
                self.input_len, self.conv1_kernel
            ));
        }
        let conv1_len = self.input_len - self.conv1_kernel + 1;
        if conv1_len < self.pool_len {
            return bad(format!(
                "conv1 output {conv1_len} shorter than pool {}",
                self.pool_len
            ));
        }
        let pool_len = (conv1_len - self.pool_len) / self.pool_stride + 1;
        if pool_len < self.conv2_kernel {
            return bad(format!(
                "pooled output {pool_len} shorter than conv2 kernel {}",
                self.conv2_kernel
            ));
        }
        let conv2_len = pool_len - self.conv2_kernel + 1;
        Ok(ShapeChain {
            conv1_len,
            pool_len,
            conv2_len,
            flat_len: conv2_len * self.conv2_out,
        })
    }
}

/// Per-layer output lengths for a validated geometry. For the standard
/// configuration: 180 -> 121 -> 51 -> 46, flattening to 276.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeChain {
    pub conv1_len: usize,
    pub pool_len: usize,
    pub conv2_len: usize,
    pub flat_len: usize,
}

/// Channel-major 1-D feature map: `data[ch * len + t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<S> {
    pub channels: usize,
    pub len: usize,
    pub data: Vec<S>,
}

impl<S: Real> FeatureMap<S> {
    pub fn zeros(channels: usize, len: usize) -> Self {
        Self {
            channels,
            len,
            data: vec![S::zero(); channels * len],
        }
    }

    #[inline]
    pub fn row(&self, ch: usize) -> &[S] {
        &self.data[ch * self.len..(ch + 1) * self.len]
    }
}

/// Valid (no padding), stride-1 standard 1-D convolution.
/// `w[(o * c_in + i) * k + j]`, one bias per output channel.
pub fn conv1d_standard<S: Real>(
    input: &FeatureMap<S>,
    w: &[S],
    b: &[S],
    out_channels: usize,
    kernel: usize,
) -> FeatureMap<S> {
    let c_in = input.channels;
    let out_len = input.len - kernel + 1;
    let mut out = FeatureMap::zeros(out_channels, out_len);
    for o in 0..out_channels {
        let dst = &mut out.data[o * out_len..(o + 1) * out_len];
        dst.fill(b[o]);
        for i in 0..c_in {
            let src = input.row(i);
            let ker = &w[(o * c_in + i) * kernel..(o * c_in + i + 1) * kernel];
            for t in 0..out_len {
                let mut acc = S::zero();
                for (j, &kj) in ker.iter().enumerate() {
                    acc += kj * src[t + j];
                }
                dst[t] += acc;
            }
        }
    }
    out
}

/// Valid, stride-1 depthwise 1-D convolution with a channel multiplier.
/// Output channel `c * multiplier + m` sees only input channel `c`.
/// `w[(c * multiplier + m) * k + j]`, one bias per output channel.
pub fn conv1d_depthwise<S: Real>(
    input: &FeatureMap<S>,
    w: &[S],
    b: &[S],
    multiplier: usize,
    kernel: usize,
) -> FeatureMap<S> {
    let out_channels = input.channels * multiplier;
    let out_len = input.len - kernel + 1;
    let mut out = FeatureMap::zeros(out_channels, out_len);
    for cm in 0..out_channels {
        let src = input.row(cm / multiplier);
        let ker = &w[cm * kernel..(cm + 1) * kernel];
        let dst = &mut out.data[cm * out_len..(cm + 1) * out_len];
        for t in 0..out_len {
            let mut acc = b[cm];
            for (j, &kj) in ker.iter().enumerate() {
                acc += kj * src[t + j];
            }
            dst[t] = acc;
        }
    }
    out
}

/// The full network. Tensor declaration order (which the checkpoint and the
/// initializer both follow) is: dw.w, dw.b, pw.w, pw.b, conv2.w, conv2.b,
/// fc1.w, fc1.b, fc2.w, fc2.b.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel<S> {
    pub cfg: CnnConfig,
    pub shapes: ShapeChain,
    pub dw_w: Vec<S>,
    pub dw_b: Vec<S>,
    pub pw_w: Vec<S>,
    pub pw_b: Vec<S>,
    pub conv2_w: Vec<S>,
    pub conv2_b: Vec<S>,
    pub fc1_w: Vec<S>,
    pub fc1_b: Vec<S>,
    pub fc2_w: Vec<S>,
    pub fc2_b: Vec<S>,
}

pub(crate) const TENSOR_NAMES: [&str; 10] = [
    "dw.w", "dw.b", "pw.w", "pw.b", "conv2.w", "conv2.b", "fc1.w", "fc1.b", "fc2.w", "fc2.b",
];

impl<S: Real> CnnModel<S> {
    /// All-zero model; softmax of zero logits is uniform over the classes.
    pub fn zeros(cfg: CnnConfig) -> Result<Self, HarError> {
        let shapes = cfg.shape_chain()?;
        let dw_out = cfg.in_channels * cfg.conv1_multiplier;
        Ok(Self {
            cfg,
            shapes,
            dw_w: vec![S::zero(); dw_out * cfg.conv1_kernel],
            dw_b: vec![S::zero(); dw_out],
            pw_w: vec![S::zero(); cfg.conv1_out * dw_out],
            pw_b: vec![S::zero(); cfg.conv1_out],
            conv2_w: vec![S::zero(); cfg.conv2_out * cfg.conv1_out * cfg.conv2_kernel],
            conv2_b: vec![S::zero(); cfg.conv2_out],
            fc1_w: vec![S::zero(); cfg.fc_hidden * shapes.flat_len],
            fc1_b: vec![S::zero(); cfg.fc_hidden],
            fc2_w: vec![S::zero(); cfg.classes * cfg.fc_hidden],
            fc2_b: vec![S::zero(); cfg.classes],
        })
    }

    /// Weight counts per convolution, excluding biases. These follow the
    /// standard/depthwise accounting in the module root exactly.
    pub fn depthwise_weight_count(&self) -> u64 {
        super::depthwise_conv_weights(
            self.cfg.conv1_kernel as u64,
            1,
            (self.cfg.in_channels * self.cfg.conv1_multiplier) as u64,
        )
    }

    pub fn pointwise_weight_count(&self) -> u64 {
        super::standard_conv_weights(
            (self.cfg.in_channels * self.cfg.conv1_multiplier) as u64,
            1,
            1,
            self.cfg.conv1_out as u64,
        )
    }

    pub fn conv2_weight_count(&self) -> u64 {
        super::standard_conv_weights(
            self.cfg.conv1_out as u64,
            self.cfg.conv2_kernel as u64,
            1,
            self.cfg.conv2_out as u64,
        )
    }

    pub(crate) fn tensor(&self, i: usize) -> &[S] {
        match i {
            0 => &self.dw_w,
            1 => &self.dw_b,
            2 => &self.pw_w,
            3 => &self.pw_b,
            4 => &self.conv2_w,
            5 => &self.conv2_b,
            6 => &self.fc1_w,
            7 => &self.fc1_b,
            8 => &self.fc2_w,
            9 => &self.fc2_b,
            _ => unreachable!(),
        }
    }

    pub(crate) fn tensor_mut(&mut self, i: usize) -> &mut [S] {
        match i {
            0 => &mut self.dw_w,
            1 => &mut self.dw_b,
            2 => &mut self.pw_w,
            3 => &mut self.pw_b,
            4 => &mut self.conv2_w,
            5 => &mut self.conv2_b,
            6 => &mut self.fc1_w,
            7 => &mut self.fc1_b,
            8 => &mut self.fc2_w,
            9 => &mut self.fc2_b,
            _ => unreachable!(),
        }
    }

    fn window_map(&self, window: &ActivityWindow<S>) -> Result<FeatureMap<S>, HarError> {
        if window.len() != self.cfg.input_len {
            return Err(HarError::WindowLength {
                got: window.len(),
                want: self.cfg.input_len,
            });
        }
        let mut input = FeatureMap::zeros(self.cfg.in_channels, self.cfg.input_len);
        for (t, triple) in window.samples.iter().enumerate() {
            for c in 0..self.cfg.in_channels.min(3) {
                input.data[c * self.cfg.input_len + t] = triple[c];
            }
        }
        Ok(input)
    }

    /// Depthwise stage output alone; exposed so the factorization can be
    /// checked against an explicitly materialized standard convolution.
    pub fn depthwise_output(&self, window: &ActivityWindow<S>) -> Result<FeatureMap<S>, HarError> {
        let input = self.window_map(window)?;
        Ok(conv1d_depthwise(
            &input,
            &self.dw_w,
            &self.dw_b,
            self.cfg.conv1_multiplier,
            self.cfg.conv1_kernel,
        ))
    }

    /// Class probabilities for one window.
    pub fn forward(&self, window: &ActivityWindow<S>) -> Result<Vec<S>, HarError> {
        Ok(self.forward_cached(window)?.probs)
    }

    /// Most probable label and the full probability vector. Ties resolve to
    /// the lowest class index.
    pub fn predict(&self, window: &ActivityWindow<S>) -> Result<(ActivityLabel, Vec<S>), HarError> {
        let probs = self.forward(window)?;
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        Ok((ActivityLabel::from_index(best).expect("class count"), probs))
    }

    pub(crate) fn forward_cached(
        &self,
        window: &ActivityWindow<S>,
    ) -> Result<ForwardCache<S>, HarError> {
        let cfg = &self.cfg;
        let input = self.window_map(window)?;
        let dw_out = conv1d_depthwise(
            &input,
            &self.dw_w,
            &self.dw_b,
            cfg.conv1_multiplier,
            cfg.conv1_kernel,
        );
        let pw_out = conv1d_standard(&dw_out, &self.pw_w, &self.pw_b, cfg.conv1_out, 1);

        // Overlapped max pooling; first maximum wins on ties so the backward
        // routing is deterministic.
        let pooled_len = self.shapes.pool_len;
        let mut pooled = FeatureMap::zeros(cfg.conv1_out, pooled_len);
        let mut pool_argmax = vec![0usize; cfg.conv1_out * pooled_len];
        for ch in 0..cfg.conv1_out {
            let src = pw_out.row(ch);
            for u in 0..pooled_len {
                let lo = u * cfg.pool_stride;
                let mut best = lo;
                for p in lo + 1..lo + cfg.pool_len {
                    if src[p] > src[best] {
                        best = p;
                    }
                }
                pooled.data[ch * pooled_len + u] = src[best];
                pool_argmax[ch * pooled_len + u] = best;
            }
        }

        let conv2_out = conv1d_standard(
            &pooled,
            &self.conv2_w,
            &self.conv2_b,
            cfg.conv2_out,
            cfg.conv2_kernel,
        );
        // Flatten channel-major: all of channel 0, then channel 1, ...
        let flat = conv2_out.data.clone();

        let mut h1 = vec![S::zero(); cfg.fc_hidden];
        for (o, h) in h1.iter_mut().enumerate() {
            let row = &self.fc1_w[o * flat.len()..(o + 1) * flat.len()];
            let mut acc = self.fc1_b[o];
            for (wv, xv) in row.iter().zip(&flat) {
                acc += *wv * *xv;
            }
            *h = acc.tanh();
        }

        let mut logits = vec![S::zero(); cfg.classes];
        for (o, l) in logits.iter_mut().enumerate() {
            let row = &self.fc2_w[o * cfg.fc_hidden..(o + 1) * cfg.fc_hidden];
            let mut acc = self.fc2_b[o];
            for (wv, hv) in row.iter().zip(&h1) {
                acc += *wv * *hv;
            }
            *l = acc;
        }

        let probs = softmax(&logits);
        Ok(ForwardCache {
            input,
            dw_out,
            pw_out,
            pooled,
            pool_argmax,
            flat,
            h1,
            probs,
        })
    }

    /// Accumulates parameter gradients of the negative log-likelihood of
    /// `label` into `grads`. Returns the sample loss.
    pub(crate) fn backward(
        &self,
        cache: &ForwardCache<S>,
        label: ActivityLabel,
        grads: &mut Grads<S>,
    ) -> S {
        let cfg = &self.cfg;
        let loss = nll(cache.probs[label.index()]);

        // Softmax + NLL collapse to p - onehot at the logits.
        let mut dlogits = cache.probs.clone();
        dlogits[label.index()] -= S::one();

        let hid = cfg.fc_hidden;
        let flat_len = cache.flat.len();
        let mut dh1 = vec![S::zero(); hid];
        for o in 0..cfg.classes {
            let g = dlogits[o];
            grads.fc2_b[o] += g;
            let wrow = &self.fc2_w[o * hid..(o + 1) * hid];
            let grow = &mut grads.fc2_w[o * hid..(o + 1) * hid];
            for i in 0..hid {
                grow[i] += g * cache.h1[i];
                dh1[i] += wrow[i] * g;
            }
        }

        let mut dflat = vec![S::zero(); flat_len];
        for o in 0..hid {
            let dpre = dh1[o] * (S::one() - cache.h1[o] * cache.h1[o]);
            if dpre == S::zero() {
                continue;
            }
            grads.fc1_b[o] += dpre;
            let wrow = &self.fc1_w[o * flat_len..(o + 1) * flat_len];
            let grow = &mut grads.fc1_w[o * flat_len..(o + 1) * flat_len];
            for f in 0..flat_len {
                grow[f] += dpre * cache.flat[f];
                dflat[f] += wrow[f] * dpre;
            }
        }

        // conv2 backward.
        let l2 = self.shapes.conv2_len;
        let lp = self.shapes.pool_len;
        let k2 = cfg.conv2_kernel;
        let mut dpooled = vec![S::zero(); cfg.conv1_out * lp];
        for o in 0..cfg.conv2_out {
            for t in 0..l2 {
                let g = dflat[o * l2 + t];
                if g == S::zero() {
                    continue;
                }
                grads.conv2_b[o] += g;
                for i in 0..cfg.conv1_out {
                    let base = (o * cfg.conv1_out + i) * k2;
                    let src = &cache.pooled.data[i * lp..(i + 1) * lp];
                    for j in 0..k2 {
                        grads.conv2_w[base + j] += g * src[t + j];
                        dpooled[i * lp + t + j] += self.conv2_w[base + j] * g;
                    }
                }
            }
        }

        // Pool backward: route to the recorded argmax.
        let l1 = self.shapes.conv1_len;
        let mut dpw = vec![S::zero(); cfg.conv1_out * l1];
        for ch in 0..cfg.conv1_out {
            for u in 0..lp {
                let g = dpooled[ch * lp + u];
                if g != S::zero() {
                    dpw[ch * l1 + cache.pool_argmax[ch * lp + u]] += g;
                }
            }
        }

        // Pointwise backward (a standard conv with k = 1).
        let dw_channels = cfg.in_channels * cfg.conv1_multiplier;
        let mut ddw = vec![S::zero(); dw_channels * l1];
        for o in 0..cfg.conv1_out {
            let mut bias_acc = S::zero();
            for t in 0..l1 {
                let g = dpw[o * l1 + t];
                if g == S::zero() {
                    continue;
                }
                bias_acc += g;
                for i in 0..dw_channels {
                    grads.pw_w[o * dw_channels + i] += g * cache.dw_out.data[i * l1 + t];
                    ddw[i * l1 + t] += self.pw_w[o * dw_channels + i] * g;
                }
            }
            grads.pw_b[o] += bias_acc;
        }

        // Depthwise backward; input gradients are not needed.
        let k1 = cfg.conv1_kernel;
        for cm in 0..dw_channels {
            let src = cache.input.row(cm / cfg.conv1_multiplier);
            for t in 0..l1 {
                let g = ddw[cm * l1 + t];
                if g == S::zero() {
                    continue;
                }
                grads.dw_b[cm] += g;
                let base = cm * k1;
                for j in 0..k1 {
                    grads.dw_w[base + j] += g * src[t + j];
                }
            }
        }

        loss
    }
}

/// Negative log-likelihood with an underflow floor. A non-finite probability
/// must surface as a non-finite loss rather than be masked by the floor.
pub(crate) fn nll<S: Real>(p: S) -> S {
    if !p.is_finite() {
        return S::nan();
    }
    -p.max(S::c(1e-300)).ln()
}

pub(crate) fn softmax<S: Real>(logits: &[S]) -> Vec<S> {
    let max = logits
        .iter()
        .copied()
        .fold(S::neg_infinity(), |a, b| a.max(b));
    let exps: Vec<S> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: S = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub(crate) struct ForwardCache<S> {
    pub input: FeatureMap<S>,
    pub dw_out: FeatureMap<S>,
    #[allow(dead_code)]
    pub pw_out: FeatureMap<S>,
    pub pooled: FeatureMap<S>,
    pub pool_argmax: Vec<usize>,
    pub flat: Vec<S>,
    pub h1: Vec<S>,
    pub probs: Vec<S>,
}

/// Gradient accumulator mirroring the model tensors.
pub(crate) struct Grads<S> {
    pub dw_w: Vec<S>,
    pub dw_b: Vec<S>,
    pub pw_w: Vec<S>,
    pub pw_b: Vec<S>,
    pub conv2_w: Vec<S>,
    pub conv2_b: Vec<S>,
    pub fc1_w: Vec<S>,
    pub fc1_b: Vec<S>,
    pub fc2_w: Vec<S>,
    pub fc2_b: Vec<S>,
}

impl<S: Real> Grads<S> {
    pub fn zeros_like(m: &CnnModel<S>) -> Self {
        Self {
            dw_w: vec![S::zero(); m.dw_w.len()],
            dw_b: vec![S::zero(); m.dw_b.len()],
            pw_w: vec![S::zero(); m.pw_w.len()],
            pw_b: vec![S::zero(); m.pw_b.len()],
            conv2_w: vec![S::zero(); m.conv2_w.len()],
            conv2_b: vec![S::zero(); m.conv2_b.len()],
            fc1_w: vec![S::zero(); m.fc1_w.len()],
            fc1_b: vec![S::zero(); m.fc1_b.len()],
            fc2_w: vec![S::zero(); m.fc2_w.len()],
            fc2_b: vec![S::zero(); m.fc2_b.len()],
        }
    }

    pub fn tensor(&self, i: usize) -> &[S] {
        match i {
            0 => &self.dw_w,
            1 => &self.dw_b,
            2 => &self.pw_w,
            3 => &self.pw_b,
            4 => &self.conv2_w,
            5 => &self.conv2_b,
            6 => &self.fc1_w,
            7 => &self.fc1_b,
            8 => &self.fc2_w,
            9 => &self.fc2_b,
            _ => unreachable!(),
        }
    }
}

const CKPT_MAGIC: &str = "har-cnn v1";

/// Writes the model as a version tag, the geometry line, the tensor
/// directory, then every tensor as raw little-endian f64 in declaration
/// order.
pub fn save_checkpoint<S: Real>(model: &CnnModel<S>, path: &Path) -> Result<(), HarError> {
    let cfg = &model.cfg;
    let mut out = Vec::new();
    writeln!(out, "{CKPT_MAGIC}")?;
    writeln!(
        out,
        "input_len={} in_channels={} conv1_kernel={} conv1_multiplier={} conv1_out={} \
         pool_len={} pool_stride={} conv2_kernel={} conv2_out={} fc_hidden={} classes={}",
        cfg.input_len,
        cfg.in_channels,
        cfg.conv1_kernel,
        cfg.conv1_multiplier,
        cfg.conv1_out,
        cfg.pool_len,
        cfg.pool_stride,
        cfg.conv2_kernel,
        cfg.conv2_out,
        cfg.fc_hidden,
        cfg.classes
    )?;
    let dir: Vec<String> = (0..10)
        .map(|i| format!("{}:{}", TENSOR_NAMES[i], model.tensor(i).len()))
        .collect();
    writeln!(out, "tensors={}", dir.join(","))?;
    for i in 0..10 {
        for v in model.tensor(i) {
            out.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a checkpoint, re-deriving and validating the shape chain before
/// accepting any tensor data.
pub fn load_checkpoint<S: Real>(path: &Path) -> Result<CnnModel<S>, HarError> {
    let bytes = std::fs::read(path)?;
    let reject = |msg: String| HarError::Checkpoint(msg);

    let mut cursor = 0usize;
    let mut next_line = |bytes: &[u8]| -> Result<String, HarError> {
        let rest = &bytes[cursor..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| reject("truncated header".into()))?;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| reject("header is not utf-8".into()))?
            .to_string();
        cursor += nl + 1;
        Ok(line)
    };

    if next_line(&bytes)? != CKPT_MAGIC {
        return Err(reject("unrecognized version tag".into()));
    }
    let geom = next_line(&bytes)?;
    let mut fields = std::collections::BTreeMap::new();
    for kv in geom.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| reject(format!("bad geometry field {kv:?}")))?;
        let v: usize = v
            .parse()
            .map_err(|_| reject(format!("bad geometry value {kv:?}")))?;
        fields.insert(k.to_string(), v);
    }
    let take = |k: &str| -> Result<usize, HarError> {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| reject(format!("missing geometry field {k}")))
    };
    let cfg = CnnConfig {
        input_len: take("input_len")?,
        in_channels: take("in_channels")?,
        conv1_kernel: take("conv1_kernel")?,
        conv1_multiplier: take("conv1_multiplier")?,
        conv1_out: take("conv1_out")?,
        pool_len: take("pool_len")?,
        pool_stride: take("pool_stride")?,
        conv2_kernel: take("conv2_kernel")?,
        conv2_out: take("conv2_out")?,
        fc_hidden: take("fc_hidden")?,
        classes: take("classes")?,
    };
    let mut model = CnnModel::<S>::zeros(cfg).map_err(|e| reject(e.to_string()))?;

    let dir_line = next_line(&bytes)?;
    let dir = dir_line
        .strip_prefix("tensors=")
        .ok_or_else(|| reject("missing tensor directory".into()))?;
    let mut declared = Vec::new();
    for entry in dir.split(',') {
        let (name, len) = entry
            .split_once(':')
            .ok_or_else(|| reject(format!("bad tensor entry {entry:?}")))?;
        let len: usize = len
            .parse()
            .map_err(|_| reject(format!("bad tensor length {entry:?}")))?;
        declared.push((name.to_string(), len));
    }
    if declared.len() != 10 {
        return Err(reject(format!("expected 10 tensors, found {}", declared.len())));
    }
    let mut total = 0usize;
    for (i, (name, len)) in declared.iter().enumerate() {
        if name != TENSOR_NAMES[i] || *len != model.tensor(i).len() {
            return Err(reject(format!(
                "tensor {i} is {name}:{len}, geometry requires {}:{}",
                TENSOR_NAMES[i],
                model.tensor(i).len()
            )));
        }
        total += len;
    }
    let body = &bytes[cursor..];
    if body.len() != total * 8 {
        return Err(reject(format!(
            "tensor payload is {} bytes, geometry requires {}",
            body.len(),
            total * 8
        )));
    }
    let mut offset = 0usize;
    for i in 0..10 {
        let dst = model.tensor_mut(i);
        for v in dst.iter_mut() {
            let mut raw = [0u8; 8];
            (&body[offset..offset + 8]).read_exact(&mut raw)?;
            *v = S::c(f64::from_le_bytes(raw));
            offset += 8;
        }
    }
    Ok(model)
}
