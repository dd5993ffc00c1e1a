//! Fully connected ReLU classifier with softmax output, inverted dropout,
//! cross-entropy gradients and RMSprop.
//!
//! Parameters live in one flat vector. Layers are stored in order, each as
//! a row-major `out x in` weight matrix followed by its `out` biases, so
//! row `o` of a weight block holds the incoming weights of unit `o`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

/// Layer sizes and dropout of a feed-forward classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub input_size: usize,
    pub hidden_sizes: Vec<usize>,
    pub output_size: usize,
    /// Probability of zeroing each hidden activation in training mode.
    pub dropout_rate: f64,
}

impl Architecture {
    /// 32 inputs, dense ReLU layers of 128, 64 and 32 units each followed by
    /// dropout 0.2, and a 2-way softmax. 14,626 parameters.
    pub fn signal_classifier() -> Self {
        Architecture {
            input_size: 32,
            hidden_sizes: vec![128, 64, 32],
            output_size: 2,
            dropout_rate: 0.2,
        }
    }

    pub fn new(
        input_size: usize,
        hidden_sizes: Vec<usize>,
        output_size: usize,
        dropout_rate: f64,
    ) -> Result<Self> {
        let arch = Architecture {
            input_size,
            hidden_sizes,
            output_size,
            dropout_rate,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 || self.output_size == 0 || self.hidden_sizes.contains(&0) {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::OutOfRange {
                what: "dropout_rate",
                value: self.dropout_rate,
            });
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every dense layer, input to output.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut sizes = Vec::with_capacity(self.hidden_sizes.len() + 2);
        sizes.push(self.input_size);
        sizes.extend_from_slice(&self.hidden_sizes);
        sizes.push(self.output_size);
        sizes.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn param_count(&self) -> usize {
        param_count(self)
    }
}

/// Sum over layers of `fan_in * fan_out + fan_out`.
pub fn param_count(arch: &Architecture) -> usize {
    arch.layer_shapes().iter().map(|&(i, o)| i * o + o).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    arch: Architecture,
    values: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(arch: Architecture) -> Self {
        let n = arch.param_count();
        ModelParams {
            arch,
            values: vec![0.0; n],
        }
    }

    pub fn from_values(arch: Architecture, values: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        let expected = arch.param_count();
        if values.len() != expected {
            return Err(Error::Length {
                what: "parameter vector",
                expected,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter"));
        }
        Ok(ModelParams { arch, values })
    }

    /// Glorot-uniform weights in `+-sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Self {
        let mut params = ModelParams::zeros(arch);
        let mut offset = 0;
        for (fan_in, fan_out) in params.arch.layer_shapes() {
            let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            for w in &mut params.values[offset..offset + fan_in * fan_out] {
                *w = rng.random_range(-limit..limit);
            }
            offset += fan_in * fan_out + fan_out;
        }
        params
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active.
    Train,
    /// Deterministic, no masking.
    Eval,
}

/// One training example: feature vector and class index.
pub type Example<'a> = (&'a [f64], usize);

/// Fills `mask` with inverted-dropout multipliers: 0 with probability
/// `rate`, otherwise `1 / (1 - rate)`.
pub fn dropout_mask<R: Rng + ?Sized>(mask: &mut [f64], rate: f64, rng: &mut R) {
    let keep = 1.0 / (1.0 - rate);
    for m in mask.iter_mut() {
        *m = if rate > 0.0 && rng.random::<f64>() < rate {
            0.0
        } else {
            keep
        };
    }
}

/// Per-layer buffers reused across the examples of a batch.
struct Workspace {
    // acts[0] is the input, acts[l + 1] the (masked) output of layer l.
    acts: Vec<Vec<f64>>,
    // pre-activations of every layer
    pre: Vec<Vec<f64>>,
    masks: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Workspace {
    fn new(arch: &Architecture) -> Self {
        let shapes = arch.layer_shapes();
        let widest = shapes.iter().map(|&(i, o)| i.max(o)).max().unwrap_or(0);
        let mut acts = vec![vec![0.0; arch.input_size]];
        acts.extend(shapes.iter().map(|&(_, o)| vec![0.0; o]));
        Workspace {
            acts,
            pre: shapes.iter().map(|&(_, o)| vec![0.0; o]).collect(),
            masks: shapes.iter().map(|&(_, o)| vec![1.0; o]).collect(),
            delta: vec![0.0; widest],
            delta_prev: vec![0.0; widest],
        }
    }
}

fn check_features(arch: &Architecture, features: &[f64]) -> Result<()> {
    if features.len() != arch.input_size {
        return Err(Error::Length {
            what: "feature vector",
            expected: arch.input_size,
            actual: features.len(),
        });
    }
    if features.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("feature"));
    }
    Ok(())
}

/// Runs the network, leaving logits in the last `pre` buffer.
fn forward_into<R: Rng + ?Sized>(
    params: &ModelParams,
    features: &[f64],
    mode: Mode,
    rng: &mut R,
    ws: &mut Workspace,
) {
    let arch = &params.arch;
    let shapes = arch.layer_shapes();
    let last = shapes.len() - 1;
    ws.acts[0].copy_from_slice(features);
    let mut offset = 0;
    for (l, &(fan_in, fan_out)) in shapes.iter().enumerate() {
        let weights = &params.values[offset..offset + fan_in * fan_out];
        let biases = &params.values[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
        offset += fan_in * fan_out + fan_out;
        let (before, after) = ws.acts.split_at_mut(l + 1);
        let input = &before[l];
        let pre = &mut ws.pre[l];
        for o in 0..fan_out {
            let row = &weights[o * fan_in..(o + 1) * fan_in];
            pre[o] = biases[o]
                + row
                    .iter()
                    .zip(input.iter())
                    .map(|(w, x)| w * x)
                    .sum::<f64>();
        }
        if l < last {
            let mask = &mut ws.masks[l];
            match mode {
                Mode::Train => dropout_mask(mask, arch.dropout_rate, rng),
                Mode::Eval => mask.fill(1.0),
            }
            let out = &mut after[0];
            for o in 0..fan_out {
                out[o] = if pre[o] > 0.0 { pre[o] * mask[o] } else { 0.0 };
            }
        }
    }
}

/// Stable log-sum-exp of the logits.
fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + libm::log(logits.iter().map(|&z| libm::exp(z - max)).sum::<f64>())
}

/// Class probabilities for one feature vector.
pub fn forward<R: Rng + ?Sized>(
    params: &ModelParams,
    features: &[f64],
    mode: Mode,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_features(&params.arch, features)?;
    let mut ws = Workspace::new(&params.arch);
    forward_into(params, features, mode, rng, &mut ws);
    let logits = ws.pre.last().expect("at least one layer");
    let lse = log_sum_exp(logits);
    Ok(logits.iter().map(|&z| libm::exp(z - lse)).collect())
}

/// Eval-mode arg-max class (ties go to the lower index).
pub fn predict(params: &ModelParams, features: &[f64]) -> Result<usize> {
    check_features(&params.arch, features)?;
    let mut ws = Workspace::new(&params.arch);
    let mut unused = NoRng;
    forward_into(params, features, Mode::Eval, &mut unused, &mut ws);
    Ok(argmax(ws.pre.last().expect("at least one layer")))
}

/// Fraction of examples whose eval-mode prediction matches the label.
pub fn accuracy<'a, I>(params: &ModelParams, examples: I) -> Result<f64>
where
    I: IntoIterator<Item = Example<'a>>,
{
    let mut ws = Workspace::new(&params.arch);
    let mut unused = NoRng;
    let (mut hits, mut total) = (0usize, 0usize);
    for (features, label) in examples {
        check_features(&params.arch, features)?;
        forward_into(params, features, Mode::Eval, &mut unused, &mut ws);
        if argmax(ws.pre.last().expect("at least one layer")) == label {
            hits += 1;
        }
        total += 1;
    }
    if total == 0 {
        return Err(Error::Empty("evaluation set"));
    }
    Ok(hits as f64 / total as f64)
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = j;
        }
    }
    best
}

/// Mean cross-entropy over the batch and its gradient.
///
/// In [`Mode::Train`] each example draws its own dropout masks and the
/// gradient is taken through the same masks.
pub fn loss_and_grad<R: Rng + ?Sized>(
    params: &ModelParams,
    batch: &[Example<'_>],
    mode: Mode,
    rng: &mut R,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let arch = &params.arch;
    for &(features, label) in batch {
        check_features(arch, features)?;
        if label >= arch.output_size {
            return Err(Error::OutOfRange {
                what: "label",
                value: label as f64,
            });
        }
    }
    let shapes = arch.layer_shapes();
    let mut offsets = Vec::with_capacity(shapes.len());
    let mut offset = 0;
    for &(i, o) in &shapes {
        offsets.push(offset);
        offset += i * o + o;
    }

    let scale = 1.0 / batch.len() as f64;
    let mut grad = vec![0.0; params.values.len()];
    let mut ws = Workspace::new(arch);
    let mut loss = 0.0;
    for &(features, label) in batch {
        forward_into(params, features, mode, rng, &mut ws);
        let last = shapes.len() - 1;
        let logits = &ws.pre[last];
        let lse = log_sum_exp(logits);
        loss += lse - logits[label];

        // dL/dlogits = softmax - onehot
        let (_, out_size) = shapes[last];
        for (j, (d, &z)) in ws.delta[..out_size].iter_mut().zip(logits).enumerate() {
            *d = (libm::exp(z - lse) - if j == label { 1.0 } else { 0.0 }) * scale;
        }

        for l in (0..shapes.len()).rev() {
            let (fan_in, fan_out) = shapes[l];
            let base = offsets[l];
            let input = &ws.acts[l];
            let delta = &ws.delta[..fan_out];
            {
                let (gw, gb) =
                    grad[base..base + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
                for o in 0..fan_out {
                    let d = delta[o];
                    if d != 0.0 {
                        let row = &mut gw[o * fan_in..(o + 1) * fan_in];
                        for (g, x) in row.iter_mut().zip(input.iter()) {
                            *g += d * x;
                        }
                        gb[o] += d;
                    }
                }
            }
            if l == 0 {
                break;
            }
            // back through the weights, then the mask and ReLU of layer l - 1
            let weights = &params.values[base..base + fan_in * fan_out];
            let prev = &mut ws.delta_prev[..fan_in];
            prev.fill(0.0);
            for o in 0..fan_out {
                let d = delta[o];
                if d != 0.0 {
                    let row = &weights[o * fan_in..(o + 1) * fan_in];
                    for (p, w) in prev.iter_mut().zip(row.iter()) {
                        *p += d * w;
                    }
                }
            }
            let pre = &ws.pre[l - 1];
            let mask = &ws.masks[l - 1];
            for i in 0..fan_in {
                prev[i] = if pre[i] > 0.0 { prev[i] * mask[i] } else { 0.0 };
            }
            core::mem::swap(&mut ws.delta, &mut ws.delta_prev);
        }
    }
    Ok((loss * scale, grad))
}

/// RMSprop hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        RmsProp {
            learning_rate: 0.001,
            rho: 0.9,
            epsilon: 1e-8,
        }
    }
}

impl RmsProp {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::OutOfRange {
                what: "learning_rate",
                value: self.learning_rate,
            });
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::OutOfRange {
                what: "rho",
                value: self.rho,
            });
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::OutOfRange {
                what: "epsilon",
                value: self.epsilon,
            });
        }
        Ok(())
    }
}

/// Running average of squared gradients plus the step hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub accumulator: Vec<f64>,
    pub config: RmsProp,
}

impl OptimizerState {
    pub fn new(len: usize, config: RmsProp) -> Result<Self> {
        config.validate()?;
        Ok(OptimizerState {
            accumulator: vec![0.0; len],
            config,
        })
    }
}

/// `acc <- rho acc + (1 - rho) g^2`, then `w <- w - lr g / sqrt(acc + eps)`.
pub fn rmsprop_step(params: &mut [f64], grad: &[f64], state: &mut OptimizerState) -> Result<()> {
    if grad.len() != params.len() {
        return Err(Error::Length {
            what: "gradient",
            expected: params.len(),
            actual: grad.len(),
        });
    }
    if state.accumulator.len() != params.len() {
        return Err(Error::Length {
            what: "optimizer accumulator",
            expected: params.len(),
            actual: state.accumulator.len(),
        });
    }
    let RmsProp {
        learning_rate,
        rho,
        epsilon,
    } = state.config;
    for ((w, &g), acc) in params
        .iter_mut()
        .zip(grad)
        .zip(state.accumulator.iter_mut())
    {
        *acc = rho * *acc + (1.0 - rho) * g * g;
        *w -= learning_rate * g / libm::sqrt(*acc + epsilon);
    }
    Ok(())
}

/// Stand-in generator for eval passes, which never draw.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("eval mode draws no randomness")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("eval mode draws no randomness")
    }
    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("eval mode draws no randomness")
    }
}
